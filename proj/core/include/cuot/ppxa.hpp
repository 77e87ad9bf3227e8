#pragma once

#include <cstddef>
#include <functional>
#include <stop_token>
#include <string>
#include <vector>

#include "cuot/problem.hpp"

namespace cuot {

/// A point of the product space: the staggered and centered variables together.
struct Iterate {
    StaggeredField u;
    CenteredField v;

    static Iterate zeros(const GridSpec& grid);
    std::size_t size() const;
    /// Concatenation of every component array in a fixed order.
    std::vector<double> flatten() const;
    friend bool operator==(const Iterate&, const Iterate&) = default;
};

/// Linear or Hellinger interpolation of the endpoints on the time faces, zero
/// momentum, and the source that closes the continuity equation; V = I(U).
Iterate init_path(const GridSpec& grid, const Array& rho0, const Array& rho1, InitMode mode);

struct RateFit {
    double q = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

/// Least-squares line through (k, log10 e_k) over entries with e_k > 0.
/// q = 10^slope. Fewer than two usable points give NaN for both outputs.
RateFit fit_convergence_rate(const std::vector<long>& iterations, const std::vector<double>& errors);

struct Diagnostics {
    long stride = 0;
    std::vector<long> iterations;
    /// Energy of the energy-block output at each snapshot.
    std::vector<double> energy;
    /// max violation per constraint at each snapshot, evaluated on the consensus V.
    std::vector<std::vector<double>> violations;
    std::vector<double> ce_residual;
    std::vector<double> relative_error;
    /// Flattened consensus iterates; emptied after the error trace is built
    /// unless the caller asked to keep them.
    std::vector<std::vector<double>> snapshots;
    RateFit rate;
};

RateFit fit_convergence_rate(const Diagnostics& diagnostics);

struct SolveResult {
    Iterate x;
    /// V part of the last energy-block output: nonnegative density, finite energy.
    CenteredField energy_point;
    Diagnostics diagnostics;
    double gamma = 0.0;
    double alpha = 0.0;
    long iterations_run = 0;
    bool cancelled = false;
    double wall_seconds = 0.0;
    double energy = 0.0;
    double init_energy = 0.0;
    double ce_residual = 0.0;
    double consistency_residual = 0.0;
    ConstraintReport constraints;
};

struct ProgressInfo {
    long iteration = 0;
    double energy = 0.0;
    double max_violation = 0.0;
    double ce_residual = 0.0;
};

struct SolveOptions {
    std::function<void(const ProgressInfo&)> progress;
    std::stop_token stop;
    bool keep_snapshots = false;
};

/// PPXA on the blocks (energy prox + CE projection), (V = I(U)), and one box
/// projection per constraint. Returns the consensus iterate x.
SolveResult ppxa_solve(const ProblemSpec& problem, const SolveOptions& options = {});

enum class FeasibilityVerdict { likely_feasible, likely_infeasible, inconclusive };

const char* verdict_name(FeasibilityVerdict verdict);

struct FeasibilityOptions {
    long iterations = 5000;
    long check_every = 10;
    double feasible_below = 1e-6;
    double infeasible_above = 1e-3;
    std::stop_token stop;
};

struct FeasibilityReport {
    FeasibilityVerdict verdict = FeasibilityVerdict::inconclusive;
    double max_violation = 0.0;
    double constraint_violation = 0.0;
    double ce_residual = 0.0;
    double consistency_residual = 0.0;
    double negativity = 0.0;
    long iterations_run = 0;
    std::vector<long> iterations;
    std::vector<double> violation_trace;
};

/// Heuristic probe. Minimizes the summed squared distances of I(U) to the sets
/// {rho >= 0} and each constraint box over paths U that satisfy the continuity
/// equation and endpoint values exactly (accelerated projected gradient). A
/// violation that vanishes suggests feasibility; one that plateaus well above
/// zero suggests an empty intersection.
FeasibilityReport feasibility_probe(const ProblemSpec& problem, const FeasibilityOptions& options = {});

}  // namespace cuot
