#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cuot/grid.hpp"

namespace cuot::testing {

GridSpec make_grid(std::size_t time_cells, std::vector<std::size_t> cells, std::vector<Boundary> boundary,
                   std::vector<double> lengths = {});

class Random {
public:
    explicit Random(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    Array array(const Shape& shape, double lo = -1.0, double hi = 1.0);
    StaggeredField staggered(const GridSpec& grid, double lo = -1.0, double hi = 1.0);
    CenteredField centered(const GridSpec& grid, double lo = -1.0, double hi = 1.0);
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

// Component order: rho_bar, omega_bar_1.., zeta_bar / rho, omega_1.., zeta.
Eigen::VectorXd flatten(const StaggeredField& u);
Eigen::VectorXd flatten(const CenteredField& v);
StaggeredField unflatten_staggered(const GridSpec& grid, const Eigen::VectorXd& x);
CenteredField unflatten_centered(const GridSpec& grid, const Eigen::VectorXd& x);

// Dense operators written out entry by entry from their definitions.
Eigen::MatrixXd dense_interpolation(const GridSpec& grid);
Eigen::MatrixXd dense_divergence(const GridSpec& grid);
// Rows selecting the boundary slots in BoundaryValues order.
Eigen::MatrixXd dense_boundary_selector(const GridSpec& grid);

// Euclidean projection of x onto {A y = b} by a dense KKT solve.
Eigen::VectorXd dense_affine_projection(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x);

double max_abs_diff(const Array& a, const Array& b);
double max_abs_diff(const StaggeredField& a, const StaggeredField& b);
double max_abs_diff(const CenteredField& a, const CenteredField& b);

}  // namespace cuot::testing
