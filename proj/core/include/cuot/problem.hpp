#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cuot/constraints.hpp"
#include "cuot/grid.hpp"

namespace cuot {

enum class InitMode { linear, hellinger };

struct SolverConfig {
    double alpha = 1.8;
    /// Prox step; empty means max(max rho0, max rho1) / 2.
    std::optional<double> gamma;
    long iterations = 1000;
    long snapshot_stride = 10;
    /// CE residual below which the feasibility probe accepts the continuity equation.
    double ce_tolerance = 1e-6;
    /// Stop early once the relative change of x between iterations drops below this (0 disables).
    double residual_target = 0.0;
    std::size_t thread_count = 1;
    InitMode init = InitMode::linear;
    /// Upper bound on memory spent on iterate snapshots; the stride grows to respect it.
    std::size_t snapshot_memory_limit = std::size_t{768} << 20;

    friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// Endpoint densities live on the spatial centered grid and become the
/// rho_bar values at time faces 0 and N0.
struct ProblemSpec {
    std::string name;
    GridSpec grid;
    double delta = 1.0;
    Array rho0;
    Array rho1;
    std::vector<AffineBoxConstraint> constraints;
    SolverConfig solver;

    friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

/// Grid, endpoint, delta, constraint and solver checks. Throws InvalidField,
/// ParameterError or InfeasibleConstraint.
void validate_problem(const ProblemSpec& problem);

double resolve_gamma(const ProblemSpec& problem);

const char* init_mode_name(InitMode mode);

}  // namespace cuot
