#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cuot/array.hpp"

namespace cuot {

enum class Boundary { neumann, periodic };

/// Uniform space-time discretization of [0,1] x [0,L_1] x ... x [0,L_n].
///
/// Time is always array axis 0; spatial axis k (0-based here) is array axis
/// k + 1. Step sizes are derived from counts and lengths, never stored.
struct GridSpec {
    std::size_t time_cells = 0;
    std::vector<std::size_t> cells;
    std::vector<double> lengths;
    std::vector<Boundary> boundary;

    std::size_t dim() const { return cells.size(); }
    double time_step() const { return 1.0 / static_cast<double>(time_cells); }
    double step(std::size_t k) const { return lengths[k] / static_cast<double>(cells[k]); }
    /// prod_k h_k
    double spatial_volume() const;
    /// h0 * prod_k h_k
    double cell_volume() const { return time_step() * spatial_volume(); }
    bool periodic(std::size_t k) const { return boundary[k] == Boundary::periodic; }

    std::size_t spatial_size() const;
    std::size_t centered_size() const { return time_cells * spatial_size(); }
    Shape spatial_shape() const { return Shape(cells.begin(), cells.end()); }
    Shape centered_shape() const;
    Shape time_staggered_shape() const;
    Shape space_staggered_shape(std::size_t k) const;
    /// Number of momentum faces along axis k (N_k + 1 for Neumann, N_k periodic).
    std::size_t face_count(std::size_t k) const { return periodic(k) ? cells[k] : cells[k] + 1; }

    /// t_{j0} = (j0 + 1/2) / N0
    double time_center(std::size_t j0) const;
    /// x_{jk} = (jk + 1/2) L_k / N_k
    double cell_center(std::size_t k, std::size_t j) const;

    /// Enforces N0 >= 2, N_k >= 2, L_k > 0 and consistent per-axis vectors.
    void validate() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// V = (rho, omega_1..omega_n, zeta), every component on the centered grid.
struct CenteredField {
    Array rho;
    std::vector<Array> omega;
    Array zeta;

    static CenteredField zeros(const GridSpec& grid);
    friend bool operator==(const CenteredField&, const CenteredField&) = default;
};

/// U = (rho_bar, omega_bar_1..omega_bar_n, zeta_bar) on the staggered grids.
struct StaggeredField {
    Array rho_bar;
    std::vector<Array> omega_bar;
    Array zeta_bar;

    static StaggeredField zeros(const GridSpec& grid);
    friend bool operator==(const StaggeredField&, const StaggeredField&) = default;
};

/// Values of the boundary slots of a staggered field, concatenated in the
/// order: rho_bar at time face 0, rho_bar at time face N0, then for each
/// Neumann axis k the low face and the high face of omega_bar_k. Each face
/// block is row-major over the remaining axes. Periodic axes contribute
/// nothing.
struct BoundaryValues {
    std::vector<double> values;
    friend bool operator==(const BoundaryValues&, const BoundaryValues&) = default;
};

std::size_t boundary_size(const GridSpec& grid);

void check_field(const GridSpec& grid, const CenteredField& v);
void check_field(const GridSpec& grid, const StaggeredField& u);

CenteredField interpolate(const GridSpec& grid, const StaggeredField& u);
StaggeredField interpolate_adjoint(const GridSpec& grid, const CenteredField& v);

/// Forward face-to-cell differences of rho_bar in time and omega_bar in space.
Array divergence(const GridSpec& grid, const StaggeredField& u);
/// Adjoint of divergence (unweighted inner products); zeta_bar of the result is zero.
StaggeredField divergence_adjoint(const GridSpec& grid, const Array& p);

Array extract_source(const StaggeredField& u);

/// divergence(u) - extract_source(u); zero exactly on the discrete continuity equation.
Array continuity_residual(const GridSpec& grid, const StaggeredField& u);

BoundaryValues boundary_extract(const GridSpec& grid, const StaggeredField& u);
StaggeredField apply_boundary(const GridSpec& grid, StaggeredField u, const BoundaryValues& b0);
/// b0 = (rho0, rho1, 0, ..., 0) for endpoint densities on the spatial grid.
BoundaryValues endpoint_boundary(const GridSpec& grid, const Array& rho0, const Array& rho1);

/// sum_j v_j w_j * prod_k h_k over one spatial slice.
double weighted_inner_slice(const GridSpec& grid, std::span<const double> v, std::span<const double> w);
/// sum over the full centered grid times h0 * prod_k h_k (all components).
double weighted_inner(const GridSpec& grid, const CenteredField& a, const CenteredField& b);

/// Unweighted coefficient inner products used for adjointness.
double dot(const Array& a, const Array& b);
double dot(const CenteredField& a, const CenteredField& b);
double dot(const StaggeredField& a, const StaggeredField& b);

namespace axis_ops {

/// out_j = (in_j + in_{j+1}) / 2 along `axis`; `in` has faces, `out` cells.
void average(const Array& in, std::size_t axis, bool periodic, Array& out);
/// Transpose of average: cells to faces.
void average_adjoint(const Array& in, std::size_t axis, bool periodic, Array& out);
/// out_j += (in_{j+1} - in_j) / h along `axis`.
void add_difference(const Array& in, std::size_t axis, bool periodic, double h, Array& out);
/// Transpose of add_difference: out_f = (p_{f-1} - p_f) / h.
void difference_adjoint(const Array& p, std::size_t axis, bool periodic, double h, Array& out);

}  // namespace axis_ops

}  // namespace cuot
