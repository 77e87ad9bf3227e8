#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cuot/errors.hpp"
#include "cuot/grid.hpp"

namespace cuot {

class ThreadPool;

/// Per-time affine box constraint
///   lower[j0] <= <rho_weight, rho>_{j0} + sum_k <omega_weight_k, omega_k>_{j0} + <zeta_weight, zeta>_{j0} <= upper[j0]
/// with spatial h-weighted inner products on each time slice. Weight arrays
/// live on the centered grid; an empty Array stands for an identically zero
/// weight. Bounds use IEEE infinities; lower == upper encodes an equality.
struct AffineBoxConstraint {
    std::string name;
    Array rho_weight;
    std::vector<Array> omega_weight;
    Array zeta_weight;
    std::vector<double> lower;
    std::vector<double> upper;

    bool has_omega(std::size_t k) const { return k < omega_weight.size() && !omega_weight[k].empty(); }
    friend bool operator==(const AffineBoxConstraint&, const AffineBoxConstraint&) = default;
};

/// Shape checks plus structural feasibility: lower <= upper and, on every
/// time index whose weight vanishes, 0 must lie in [lower, upper].
/// Throws InvalidField or InfeasibleConstraint.
void validate_constraint(const GridSpec& grid, const AffineBoxConstraint& c);

/// Squared norm of each time row: prod_k h_k * sum over the slice of the squared weights.
std::vector<double> constraint_weight_norms(const GridSpec& grid, const AffineBoxConstraint& c);

double constraint_value(const GridSpec& grid, const AffineBoxConstraint& c, const CenteredField& v, std::size_t j0);

/// Distance from `value` to [lower, upper].
double bound_violation(double value, double lower, double upper);

struct ConstraintReport {
    /// values[i][j0] = constraint_value of constraint i at time j0
    std::vector<std::vector<double>> values;
    std::vector<std::vector<double>> violations;
    double max_violation = 0.0;
};

ConstraintReport evaluate_constraints(const GridSpec& grid, const std::vector<AffineBoxConstraint>& constraints,
                                      const CenteredField& v);

/// Euclidean projection onto one box constraint. Time slices have disjoint
/// support, so the per-slice corrections are independent.
class BoxProjector {
public:
    BoxProjector(const GridSpec& grid, AffineBoxConstraint constraint);

    void project(CenteredField& v) const;
    const AffineBoxConstraint& constraint() const { return constraint_; }
    const std::vector<double>& weight_norms() const { return norms_; }

private:
    GridSpec grid_;
    AffineBoxConstraint constraint_;
    std::vector<double> norms_;
};

CenteredField project_box(const GridSpec& grid, const AffineBoxConstraint& c, const CenteredField& v);

/// Applies a square matrix along one axis of an array: out(o, :, i) = M * in(o, :, i).
void apply_along_axis(const Eigen::MatrixXd& m, std::size_t axis, const Array& in, Array& out,
                      ThreadPool* pool = nullptr);

/// Nearest pair (U', V') with V' = I(U'). Each staggered component solves
/// (Id + I^T I) U' = U + I^T V along its own axis; the operators are
/// factored once per grid.
class ConsistencyProjector {
public:
    explicit ConsistencyProjector(const GridSpec& grid);

    void project(const StaggeredField& u, const CenteredField& v, StaggeredField& u_out, CenteredField& v_out,
                 ThreadPool* pool = nullptr) const;

private:
    GridSpec grid_;
    Eigen::MatrixXd time_inverse_;
    std::vector<Eigen::MatrixXd> space_inverse_;
};

std::pair<StaggeredField, CenteredField> project_consistency(const GridSpec& grid, const StaggeredField& u,
                                                             const CenteredField& v);

/// Euclidean projection onto {U : div U - zeta_bar = 0, b(U) = b0}.
///
/// With the boundary slots pinned, the normal operator A A^T of
/// (div - s_z) restricted to the free slots is Id plus a Kronecker sum of
/// one-dimensional face-difference Laplacians (Neumann-type along time and
/// Neumann axes, circulant along periodic axes). Each 1-D operator is
/// diagonalized once, so every projection is an exact solve.
class ContinuityProjector {
public:
    explicit ContinuityProjector(const GridSpec& grid);

    void project(const StaggeredField& u, const BoundaryValues& b0, StaggeredField& out,
                 ThreadPool* pool = nullptr) const;

private:
    GridSpec grid_;
    std::vector<Eigen::MatrixXd> basis_;  // one orthonormal eigenbasis per array axis
    Array inverse_spectrum_;              // 1 / (1 + sum of axis eigenvalues)
};

StaggeredField project_continuity(const GridSpec& grid, const StaggeredField& u, const BoundaryValues& b0);

/// max |div U - zeta_bar|
double continuity_residual_norm(const GridSpec& grid, const StaggeredField& u);

}  // namespace cuot
