#include "cuot/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cuot {

namespace {

void check_endpoint(const GridSpec& grid, const Array& rho, const char* what) {
    require_shape(rho, grid.spatial_shape(), what);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (!std::isfinite(rho[i]) || rho[i] < 0.0) {
            throw InvalidField(std::string(what) + ": entries must be finite and nonnegative (index " +
                               std::to_string(i) + ")");
        }
    }
}

}  // namespace

void validate_problem(const ProblemSpec& problem) {
    problem.grid.validate();
    if (!(problem.delta > 0.0) || !std::isfinite(problem.delta)) throw ParameterError("delta must be positive");
    check_endpoint(problem.grid, problem.rho0, "rho0");
    check_endpoint(problem.grid, problem.rho1, "rho1");
    const SolverConfig& s = problem.solver;
    if (!(s.alpha > 0.0 && s.alpha < 2.0)) throw ParameterError("solver.alpha must lie in (0, 2)");
    if (s.gamma && (!(*s.gamma > 0.0) || !std::isfinite(*s.gamma))) {
        throw ParameterError("solver.gamma must be positive");
    }
    if (s.iterations < 1) throw ParameterError("solver.iterations must be >= 1");
    if (s.snapshot_stride < 1) throw ParameterError("solver.snapshot_stride must be >= 1");
    if (s.thread_count < 1) throw ParameterError("solver.threads must be >= 1");
    for (const auto& c : problem.constraints) validate_constraint(problem.grid, c);
}

double resolve_gamma(const ProblemSpec& problem) {
    if (problem.solver.gamma) return *problem.solver.gamma;
    double m = 0.0;
    for (double r : problem.rho0.values()) m = std::max(m, r);
    for (double r : problem.rho1.values()) m = std::max(m, r);
    return m > 0.0 ? m / 2.0 : 1.0;
}

const char* init_mode_name(InitMode mode) { return mode == InitMode::linear ? "linear" : "hellinger"; }

}  // namespace cuot
