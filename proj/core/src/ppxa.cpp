#include "cuot/ppxa.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>

#include "cuot/parallel.hpp"
#include "cuot/wfr.hpp"

namespace cuot {

namespace {

constexpr long kNanCheckEvery = 100;
constexpr std::size_t kReduceChunk = 4096;

std::vector<Array*> components(Iterate& it) {
    std::vector<Array*> out{&it.u.rho_bar};
    for (auto& a : it.u.omega_bar) out.push_back(&a);
    out.push_back(&it.u.zeta_bar);
    out.push_back(&it.v.rho);
    for (auto& a : it.v.omega) out.push_back(&a);
    out.push_back(&it.v.zeta);
    return out;
}

std::vector<const Array*> components(const Iterate& it) {
    std::vector<const Array*> out;
    for (Array* a : components(const_cast<Iterate&>(it))) out.push_back(a);
    return out;
}

bool all_finite(const Iterate& it) {
    for (const Array* a : components(it)) {
        for (double x : a->values()) {
            if (!std::isfinite(x)) return false;
        }
    }
    return true;
}

double consistency_gap(const GridSpec& grid, const Iterate& x) {
    const CenteredField iu = interpolate(grid, x.u);
    double m = 0.0;
    auto gap = [&](const Array& a, const Array& b) {
        for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    };
    gap(iu.rho, x.v.rho);
    for (std::size_t k = 0; k < iu.omega.size(); ++k) gap(iu.omega[k], x.v.omega[k]);
    gap(iu.zeta, x.v.zeta);
    return m;
}

/// State and blocks of the consensus iteration. The V half of the first block
/// is supplied by the caller.
class Splitting {
public:
    using FirstBlock = std::function<void(const CenteredField& in, CenteredField& out)>;

    Splitting(const GridSpec& grid, BoundaryValues b0, const std::vector<AffineBoxConstraint>& constraints,
              Iterate start, double alpha, ThreadPool* pool)
        : grid_(grid), b0_(std::move(b0)), consistency_(grid), continuity_(grid), alpha_(alpha), pool_(pool) {
        x = std::move(start);
        for (const auto& c : constraints) boxes_.emplace_back(grid, c);
        const std::size_t blocks = 2 + boxes_.size();
        y.assign(blocks, x);
        pi.assign(blocks, x);
    }

    /// One iteration; returns the squared norm of the change of x when asked.
    double step(const FirstBlock& first, bool want_change) {
        continuity_.project(y[0].u, b0_, pi[0].u, pool_);
        first(y[0].v, pi[0].v);
        consistency_.project(y[1].u, y[1].v, pi[1].u, pi[1].v, pool_);
        for (std::size_t i = 0; i < boxes_.size(); ++i) {
            Iterate& p = pi[i + 2];
            p = y[i + 2];
            boxes_[i].project(p.v);
        }
        return update(want_change);
    }

    const Iterate& energy_block_output() const { return pi[0]; }

    Iterate x;
    std::vector<Iterate> y;
    std::vector<Iterate> pi;

private:
    double update(bool want_change) {
        const std::size_t blocks = y.size();
        const double inv = 1.0 / static_cast<double>(blocks);
        const double a = alpha_;
        // The projections may reallocate component storage, so the views are rebuilt every time.
        const std::vector<Array*> x_parts = components(x);
        std::vector<std::vector<Array*>> y_parts, pi_parts;
        for (std::size_t b = 0; b < blocks; ++b) {
            y_parts.push_back(components(y[b]));
            pi_parts.push_back(components(pi[b]));
        }
        double change = 0.0;
        for (std::size_t c = 0; c < x_parts.size(); ++c) {
            double* xs = x_parts[c]->data();
            const std::size_t n = x_parts[c]->size();
            std::vector<const double*> ps(blocks);
            std::vector<double*> ys(blocks);
            for (std::size_t b = 0; b < blocks; ++b) {
                ps[b] = pi_parts[b][c]->data();
                ys[b] = y_parts[b][c]->data();
            }
            const std::size_t chunks = (n + kReduceChunk - 1) / kReduceChunk;
            std::vector<double> partial(chunks, 0.0);
            parallel_for(pool_, chunks, [&](std::size_t cb, std::size_t ce) {
                for (std::size_t ch = cb; ch < ce; ++ch) {
                    double acc = 0.0;
                    const std::size_t end = std::min(n, (ch + 1) * kReduceChunk);
                    for (std::size_t e = ch * kReduceChunk; e < end; ++e) {
                        double sum = 0.0;
                        for (std::size_t b = 0; b < blocks; ++b) sum += ps[b][e];
                        const double mean = sum * inv;
                        const double xe = xs[e];
                        for (std::size_t b = 0; b < blocks; ++b) {
                            ys[b][e] += a * (2.0 * mean - xe - ps[b][e]);
                        }
                        const double dx = a * (mean - xe);
                        xs[e] = xe + dx;
                        acc += dx * dx;
                    }
                    partial[ch] = acc;
                }
            });
            if (want_change) {
                for (double p : partial) change += p;
            }
        }
        return change;
    }

    GridSpec grid_;
    BoundaryValues b0_;
    ConsistencyProjector consistency_;
    ContinuityProjector continuity_;
    std::vector<BoxProjector> boxes_;
    double alpha_;
    ThreadPool* pool_;
};

double squared_norm(const std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return s;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<double> max_violations(const GridSpec& grid, const std::vector<AffineBoxConstraint>& constraints,
                                   const CenteredField& v) {
    const ConstraintReport r = evaluate_constraints(grid, constraints, v);
    std::vector<double> out;
    for (const auto& viol : r.violations) out.push_back(viol.empty() ? 0.0 : *std::max_element(viol.begin(), viol.end()));
    return out;
}

}  // namespace

Iterate Iterate::zeros(const GridSpec& grid) { return {StaggeredField::zeros(grid), CenteredField::zeros(grid)}; }

std::size_t Iterate::size() const {
    std::size_t n = 0;
    for (const Array* a : components(*this)) n += a->size();
    return n;
}

std::vector<double> Iterate::flatten() const {
    std::vector<double> out;
    out.reserve(size());
    for (const Array* a : components(*this)) out.insert(out.end(), a->values().begin(), a->values().end());
    return out;
}

Iterate init_path(const GridSpec& grid, const Array& rho0, const Array& rho1, InitMode mode) {
    grid.validate();
    require_shape(rho0, grid.spatial_shape(), "rho0");
    require_shape(rho1, grid.spatial_shape(), "rho1");
    for (std::size_t i = 0; i < rho0.size(); ++i) {
        if (!(rho0[i] >= 0.0) || !(rho1[i] >= 0.0)) throw InvalidField("init_path: endpoint densities must be nonnegative");
    }
    Iterate it = Iterate::zeros(grid);
    const std::size_t s = grid.spatial_size();
    const std::size_t n0 = grid.time_cells;
    for (std::size_t f = 0; f <= n0; ++f) {
        const double t = static_cast<double>(f) / static_cast<double>(n0);
        for (std::size_t i = 0; i < s; ++i) {
            double value;
            if (f == 0) value = rho0[i];
            else if (f == n0) value = rho1[i];
            else if (mode == InitMode::linear) value = (1.0 - t) * rho0[i] + t * rho1[i];
            else {
                const double r = (1.0 - t) * std::sqrt(rho0[i]) + t * std::sqrt(rho1[i]);
                value = r * r;
            }
            it.u.rho_bar[f * s + i] = value;
        }
    }
    for (std::size_t j0 = 0; j0 < n0; ++j0) {
        for (std::size_t i = 0; i < s; ++i) {
            it.u.zeta_bar[j0 * s + i] =
                mode == InitMode::linear
                    ? rho1[i] - rho0[i]
                    : (it.u.rho_bar[(j0 + 1) * s + i] - it.u.rho_bar[j0 * s + i]) / grid.time_step();
        }
    }
    it.v = interpolate(grid, it.u);
    return it;
}

RateFit fit_convergence_rate(const std::vector<long>& iterations, const std::vector<double>& errors) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < iterations.size() && i < errors.size(); ++i) {
        if (errors[i] > 0.0 && std::isfinite(errors[i])) {
            xs.push_back(static_cast<double>(iterations[i]));
            ys.push_back(std::log10(errors[i]));
        }
    }
    RateFit fit;
    fit.points = xs.size();
    if (xs.size() < 2) {
        fit.q = fit.r_squared = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    fit.q = std::pow(10.0, slope);
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

RateFit fit_convergence_rate(const Diagnostics& diagnostics) {
    return fit_convergence_rate(diagnostics.iterations, diagnostics.relative_error);
}

SolveResult ppxa_solve(const ProblemSpec& problem, const SolveOptions& options) {
    validate_problem(problem);
    const auto started = std::chrono::steady_clock::now();
    const GridSpec& grid = problem.grid;
    const SolverConfig& cfg = problem.solver;

    std::unique_ptr<ThreadPool> pool;
    if (cfg.thread_count > 1) pool = std::make_unique<ThreadPool>(cfg.thread_count);

    SolveResult result;
    result.gamma = resolve_gamma(problem);
    result.alpha = cfg.alpha;
    const double gamma = result.gamma;
    const double delta = problem.delta;

    Iterate start = init_path(grid, problem.rho0, problem.rho1, cfg.init);
    result.init_energy = total_cost(grid, delta, start.v);
    Splitting split(grid, endpoint_boundary(grid, problem.rho0, problem.rho1), problem.constraints, std::move(start),
                    cfg.alpha, pool.get());
    const Splitting::FirstBlock prox = [&](const CenteredField& in, CenteredField& out) {
        prox_cost_field_into(grid, gamma, delta, in, out, pool.get());
    };

    Diagnostics& diag = result.diagnostics;
    const std::size_t snapshot_bytes = split.x.size() * sizeof(double);
    long stride = cfg.snapshot_stride;
    const auto planned = static_cast<std::size_t>(cfg.iterations / stride + 2);
    if (planned * snapshot_bytes > cfg.snapshot_memory_limit) {
        const std::size_t fit = std::max<std::size_t>(cfg.snapshot_memory_limit / snapshot_bytes, 3) - 2;
        stride = (cfg.iterations + static_cast<long>(fit) - 1) / static_cast<long>(fit);
    }
    diag.stride = stride;

    auto record = [&](long k) {
        const CenteredField& ev = k == 0 ? split.x.v : split.energy_block_output().v;
        diag.iterations.push_back(k);
        diag.energy.push_back(total_cost(grid, delta, ev));
        diag.violations.push_back(max_violations(grid, problem.constraints, split.x.v));
        diag.ce_residual.push_back(continuity_residual_norm(grid, split.x.u));
        diag.snapshots.push_back(split.x.flatten());
        if (options.progress) {
            ProgressInfo info;
            info.iteration = k;
            info.energy = diag.energy.back();
            for (double v : diag.violations.back()) info.max_violation = std::max(info.max_violation, v);
            info.ce_residual = diag.ce_residual.back();
            options.progress(info);
        }
    };
    record(0);

    long k = 0;
    const bool want_change = cfg.residual_target > 0.0;
    while (k < cfg.iterations) {
        if (options.stop.stop_requested()) {
            result.cancelled = true;
            break;
        }
        const double change = split.step(prox, want_change);
        ++k;
        if (k % kNanCheckEvery == 0 && !all_finite(split.x)) {
            throw NumericalError("non-finite iterate at iteration " + std::to_string(k), k);
        }
        bool done = false;
        if (want_change) {
            const double scale = squared_norm(split.x.flatten());
            done = scale > 0.0 && std::sqrt(change / scale) < cfg.residual_target;
        }
        if (k % stride == 0 || k == cfg.iterations || done) record(k);
        if (done) break;
    }
    if (diag.iterations.back() != k) record(k);
    if (!all_finite(split.x)) throw NumericalError("non-finite iterate at iteration " + std::to_string(k), k);

    const std::vector<double>& final_flat = diag.snapshots.back();
    const double final_norm = std::sqrt(squared_norm(final_flat));
    for (const auto& snap : diag.snapshots) {
        diag.relative_error.push_back(final_norm > 0.0 ? distance(snap, final_flat) / final_norm : 0.0);
    }
    diag.rate = fit_convergence_rate(diag);
    if (!options.keep_snapshots) {
        diag.snapshots.clear();
        diag.snapshots.shrink_to_fit();
    }

    result.iterations_run = k;
    result.x = std::move(split.x);
    result.energy_point = split.energy_block_output().v;
    result.energy = k == 0 ? result.init_energy : total_cost(grid, delta, result.energy_point);
    result.ce_residual = continuity_residual_norm(grid, result.x.u);
    result.consistency_residual = consistency_gap(grid, result.x);
    result.constraints = evaluate_constraints(grid, problem.constraints, result.x.v);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

const char* verdict_name(FeasibilityVerdict verdict) {
    switch (verdict) {
        case FeasibilityVerdict::likely_feasible: return "likely feasible";
        case FeasibilityVerdict::likely_infeasible: return "likely infeasible";
        case FeasibilityVerdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

FeasibilityReport feasibility_probe(const ProblemSpec& problem, const FeasibilityOptions& options) {
    validate_problem(problem);
    const GridSpec& grid = problem.grid;
    std::unique_ptr<ThreadPool> pool;
    if (problem.solver.thread_count > 1) pool = std::make_unique<ThreadPool>(problem.solver.thread_count);

    const BoundaryValues b0 = endpoint_boundary(grid, problem.rho0, problem.rho1);
    const ContinuityProjector continuity(grid);
    std::vector<BoxProjector> boxes;
    for (const auto& c : problem.constraints) boxes.emplace_back(grid, c);
    // Sets on V: rho >= 0 and one per constraint. ||I|| <= 1, so the gradient is m-Lipschitz.
    const double step = 1.0 / static_cast<double>(1 + boxes.size());

    // f(U) = 1/2 sum_s dist(I(U), S_s)^2 with U kept on the continuity affine set.
    auto residual = [&](const StaggeredField& u, CenteredField& r) {
        const CenteredField v = interpolate(grid, u);
        r = CenteredField::zeros(grid);
        double f = 0.0;
        auto accumulate = [&](const CenteredField& p) {
            auto add = [&](const Array& a, const Array& b, Array& out) {
                for (std::size_t i = 0; i < a.size(); ++i) {
                    const double d = a[i] - b[i];
                    out[i] += d;
                    f += 0.5 * d * d;
                }
            };
            add(v.rho, p.rho, r.rho);
            for (std::size_t k = 0; k < v.omega.size(); ++k) add(v.omega[k], p.omega[k], r.omega[k]);
            add(v.zeta, p.zeta, r.zeta);
        };
        CenteredField p = v;
        for (double& x : p.rho.values()) x = std::max(x, 0.0);
        accumulate(p);
        for (const auto& box : boxes) {
            p = v;
            box.project(p);
            accumulate(p);
        }
        return f;
    };
    auto combine = [](StaggeredField& out, const StaggeredField& a, double ca, const StaggeredField& b, double cb) {
        auto mix = [&](Array& o, const Array& x, const Array& y) {
            for (std::size_t i = 0; i < o.size(); ++i) o[i] = ca * x[i] + cb * y[i];
        };
        mix(out.rho_bar, a.rho_bar, b.rho_bar);
        for (std::size_t k = 0; k < out.omega_bar.size(); ++k) mix(out.omega_bar[k], a.omega_bar[k], b.omega_bar[k]);
        mix(out.zeta_bar, a.zeta_bar, b.zeta_bar);
    };

    FeasibilityReport report;
    StaggeredField u = init_path(grid, problem.rho0, problem.rho1, problem.solver.init).u;
    auto measure = [&](long k) {
        const CenteredField v = interpolate(grid, u);
        report.constraint_violation = 0.0;
        for (double x : max_violations(grid, problem.constraints, v)) {
            report.constraint_violation = std::max(report.constraint_violation, x);
        }
        report.ce_residual = continuity_residual_norm(grid, u);
        report.consistency_residual = 0.0;
        report.negativity = 0.0;
        for (double r : v.rho.values()) report.negativity = std::max(report.negativity, -r);
        report.max_violation = std::max({report.constraint_violation, report.ce_residual, report.negativity});
        report.iterations.push_back(k);
        report.violation_trace.push_back(report.max_violation);
    };

    const double feasible_below = std::min(options.feasible_below, std::max(problem.solver.ce_tolerance, 0.0));
    measure(0);

    // Accelerated projected gradient with function-value restart.
    StaggeredField z = u;
    StaggeredField previous = u;
    StaggeredField trial = u;
    CenteredField r;
    double momentum = 1.0;
    double f_previous = residual(u, r);
    long k = 0;
    const long every = std::max(1L, options.check_every);
    while (report.max_violation >= feasible_below && k < options.iterations && !options.stop.stop_requested()) {
        residual(z, r);
        combine(trial, z, 1.0, interpolate_adjoint(grid, r), -step);
        previous = u;
        continuity.project(trial, b0, u, pool.get());
        const double f = residual(u, r);
        if (f > f_previous) {
            momentum = 1.0;
            z = u;
        } else {
            const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            const double beta = (momentum - 1.0) / next;
            combine(z, u, 1.0 + beta, previous, -beta);
            momentum = next;
        }
        f_previous = f;
        ++k;
        if (!std::isfinite(f)) throw NumericalError("non-finite iterate at iteration " + std::to_string(k), k);
        if (k % every == 0 || k == options.iterations) measure(k);
    }
    report.iterations_run = k;

    if (report.max_violation < feasible_below) {
        report.verdict = FeasibilityVerdict::likely_feasible;
    } else if (report.max_violation > options.infeasible_above) {
        // Plateau: the second half of the run removed less than 10% of the violation.
        const std::size_t mid = report.violation_trace.size() / 2;
        const double halfway = report.violation_trace[mid];
        report.verdict = report.max_violation >= 0.9 * halfway ? FeasibilityVerdict::likely_infeasible
                                                               : FeasibilityVerdict::inconclusive;
    }
    return report;
}

}  // namespace cuot
