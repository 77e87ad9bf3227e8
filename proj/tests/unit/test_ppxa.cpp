#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <stop_token>

#include "cuot/ppxa.hpp"
#include "cuot/wfr.hpp"
#include "fields.hpp"
#include "properties.hpp"

namespace cuot {
namespace {

using testing::make_grid;
using testing::Random;

constexpr double kInf = std::numeric_limits<double>::infinity();

ProblemSpec small_problem(std::size_t time_cells = 6, std::size_t cells = 8) {
    ProblemSpec p;
    p.name = "small";
    p.grid = make_grid(time_cells, {cells}, {Boundary::neumann});
    p.delta = 0.7;
    p.rho0 = Array({cells});
    p.rho1 = Array({cells});
    for (std::size_t i = 0; i < cells; ++i) {
        const double x = p.grid.cell_center(0, i);
        p.rho0[i] = 0.2 + std::exp(-40 * (x - 0.3) * (x - 0.3));
        p.rho1[i] = 0.1 + 2 * std::exp(-40 * (x - 0.7) * (x - 0.7));
    }
    p.solver.iterations = 50;
    p.solver.snapshot_stride = 5;
    return p;
}

AffineBoxConstraint mass_band(const GridSpec& g, double lower, double upper) {
    AffineBoxConstraint c;
    c.name = "mass";
    c.rho_weight = Array(g.centered_shape(), 1.0);
    c.lower.assign(g.time_cells, lower);
    c.upper.assign(g.time_cells, upper);
    return c;
}

TEST(InitPath, LinearSatisfiesContinuityAndBoundary) {
    const ProblemSpec p = small_problem();
    const Iterate it = init_path(p.grid, p.rho0, p.rho1, InitMode::linear);
    EXPECT_LT(continuity_residual_norm(p.grid, it.u), 1e-12);
    EXPECT_EQ(boundary_extract(p.grid, it.u), endpoint_boundary(p.grid, p.rho0, p.rho1));
    EXPECT_EQ(it.v, interpolate(p.grid, it.u));
    for (double x : it.u.omega_bar[0].values()) EXPECT_EQ(x, 0.0);
}

TEST(InitPath, EqualEndpointsGiveConstantPath) {
    ProblemSpec p = small_problem();
    p.rho1 = p.rho0;
    for (InitMode mode : {InitMode::linear, InitMode::hellinger}) {
        const Iterate it = init_path(p.grid, p.rho0, p.rho1, mode);
        for (double x : it.u.zeta_bar.values()) EXPECT_NEAR(x, 0.0, 1e-14);
        EXPECT_NEAR(total_cost(p.grid, p.delta, it.v), 0.0, 1e-14);
    }
}

TEST(InitPath, HellingerEnergyNearAnalytic) {
    const GridSpec g = make_grid(15, {64}, {Boundary::periodic});
    const Array one({64}, 1.0), four({64}, 4.0);
    const Iterate it = init_path(g, one, four, InitMode::hellinger);
    EXPECT_LT(continuity_residual_norm(g, it.u), 1e-12);
    EXPECT_NEAR(total_cost(g, 1.0, it.v), 2.0, 0.02 * 2.0);
}

TEST(InitPath, RejectsNegativeEndpoints) {
    ProblemSpec p = small_problem();
    p.rho0[2] = -1.0;
    EXPECT_THROW(init_path(p.grid, p.rho0, p.rho1, InitMode::linear), InvalidField);
}

TEST(RateFit, GeometricSequence) {
    std::vector<long> its;
    std::vector<double> errs;
    for (long k = 0; k <= 1000; k += 10) {
        its.push_back(k);
        errs.push_back(std::pow(0.999, static_cast<double>(k)));
    }
    its.push_back(1010);
    errs.push_back(0.0);
    const RateFit fit = fit_convergence_rate(its, errs);
    EXPECT_NEAR(fit.q, 0.999, 1e-12);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
    EXPECT_EQ(fit.points, its.size() - 1);
    EXPECT_TRUE(std::isnan(fit_convergence_rate({1}, {0.5}).q));
}

// Straight transcription of the consensus iteration with dense projections.
Iterate reference_iterations(const ProblemSpec& p, long iterations) {
    const GridSpec& g = p.grid;
    const double gamma = resolve_gamma(p);
    const Iterate start = init_path(g, p.rho0, p.rho1, p.solver.init);
    auto pack = [](const Iterate& it) {
        const Eigen::VectorXd u = testing::flatten(it.u), v = testing::flatten(it.v);
        Eigen::VectorXd z(u.size() + v.size());
        z << u, v;
        return z;
    };
    const auto nu = testing::flatten(start.u).size();
    auto unpack = [&](const Eigen::VectorXd& z) {
        return Iterate{testing::unflatten_staggered(g, z.head(nu)), testing::unflatten_centered(g, z.tail(z.size() - nu))};
    };

    const Eigen::MatrixXd div = testing::dense_divergence(g);
    const Eigen::MatrixXd sel = testing::dense_boundary_selector(g);
    const auto m = div.rows();
    Eigen::MatrixXd ce = Eigen::MatrixXd::Zero(m + sel.rows(), nu);
    ce.topRows(m) = div;
    ce.block(0, nu - m, m, m) -= Eigen::MatrixXd::Identity(m, m);
    ce.bottomRows(sel.rows()) = sel;
    const BoundaryValues b0 = endpoint_boundary(g, p.rho0, p.rho1);
    Eigen::VectorXd ce_rhs = Eigen::VectorXd::Zero(ce.rows());
    for (std::size_t i = 0; i < b0.values.size(); ++i) ce_rhs(m + static_cast<Eigen::Index>(i)) = b0.values[i];

    const Eigen::MatrixXd interp = testing::dense_interpolation(g);
    Eigen::MatrixXd cons(interp.rows(), interp.cols() + interp.rows());
    cons << interp, -Eigen::MatrixXd::Identity(interp.rows(), interp.rows());

    const std::size_t blocks = 2 + p.constraints.size();
    Eigen::VectorXd x = pack(start);
    std::vector<Eigen::VectorXd> y(blocks, x);
    for (long k = 0; k < iterations; ++k) {
        std::vector<Eigen::VectorXd> pi(blocks);
        const Iterate y0 = unpack(y[0]);
        Iterate first;
        first.u = testing::unflatten_staggered(g, testing::dense_affine_projection(ce, ce_rhs, y[0].head(nu)));
        first.v = prox_cost_field(g, gamma, p.delta, y0.v);
        pi[0] = pack(first);
        pi[1] = testing::dense_affine_projection(cons, Eigen::VectorXd::Zero(cons.rows()), y[1]);
        for (std::size_t c = 0; c < p.constraints.size(); ++c) {
            Iterate it = unpack(y[c + 2]);
            it.v = project_box(g, p.constraints[c], it.v);
            pi[c + 2] = pack(it);
        }
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.size());
        for (const auto& q : pi) mean += q;
        mean /= static_cast<double>(blocks);
        for (std::size_t b = 0; b < blocks; ++b) y[b] += p.solver.alpha * (2 * mean - x - pi[b]);
        x += p.solver.alpha * (mean - x);
    }
    return unpack(x);
}

TEST(Solve, MatchesReferenceTranscription) {
    ProblemSpec p = small_problem(4, 5);
    p.constraints.push_back(mass_band(p.grid, 0.5, 0.8));
    for (long its : {1L, 2L, 7L}) {
        p.solver.iterations = its;
        const SolveResult r = ppxa_solve(p);
        const Iterate ref = reference_iterations(p, its);
        EXPECT_LT(testing::max_abs_diff(r.x.u, ref.u), 1e-10) << its;
        EXPECT_LT(testing::max_abs_diff(r.x.v, ref.v), 1e-10) << its;
    }
}

TEST(Solve, EqualEndpointsStayAtZeroCost) {
    ProblemSpec p = small_problem();
    p.rho1 = p.rho0;
    p.solver.iterations = 200;
    const SolveResult r = ppxa_solve(p);
    EXPECT_LE(r.energy, 1e-8);
    const std::size_t s = p.grid.spatial_size();
    for (std::size_t t = 0; t <= p.grid.time_cells; ++t) {
        for (std::size_t i = 0; i < s; ++i) EXPECT_NEAR(r.x.u.rho_bar[t * s + i], p.rho0[i], 1e-8);
    }
}

TEST(Solve, DiagnosticsShape) {
    ProblemSpec p = small_problem();
    p.constraints.push_back(mass_band(p.grid, 0.0, kInf));
    const SolveResult r = ppxa_solve(p);
    const Diagnostics& d = r.diagnostics;
    EXPECT_EQ(d.iterations.front(), 0);
    EXPECT_EQ(d.iterations.back(), 50);
    EXPECT_EQ(d.iterations.size(), 11u);
    EXPECT_EQ(d.energy.size(), d.iterations.size());
    EXPECT_EQ(d.violations.size(), d.iterations.size());
    EXPECT_EQ(d.violations.front().size(), 1u);
    EXPECT_EQ(d.relative_error.back(), 0.0);
    EXPECT_GT(d.relative_error.front(), 0.0);
    EXPECT_TRUE(d.snapshots.empty());
    EXPECT_EQ(r.iterations_run, 50);
    EXPECT_EQ(r.diagnostics.rate.points, d.iterations.size() - 1);
    EXPECT_TRUE(std::isfinite(r.energy));
}

TEST(Solve, SnapshotStrideRespectsMemoryCap) {
    ProblemSpec p = small_problem();
    p.solver.iterations = 100;
    p.solver.snapshot_stride = 1;
    const std::size_t bytes = init_path(p.grid, p.rho0, p.rho1, InitMode::linear).size() * sizeof(double);
    p.solver.snapshot_memory_limit = 12 * bytes;
    SolveOptions options;
    options.keep_snapshots = true;
    const SolveResult r = ppxa_solve(p, options);
    EXPECT_EQ(r.diagnostics.stride, 10);
    EXPECT_LE(r.diagnostics.snapshots.size(), 12u);
}

TEST(Solve, CancellationStopsEarly) {
    ProblemSpec p = small_problem();
    p.solver.iterations = 100000;
    std::stop_source source;
    SolveOptions options;
    options.stop = source.get_token();
    options.progress = [&](const ProgressInfo& info) {
        if (info.iteration >= 20) source.request_stop();
    };
    const SolveResult r = ppxa_solve(p, options);
    EXPECT_TRUE(r.cancelled);
    EXPECT_EQ(r.iterations_run, 20);
    EXPECT_EQ(r.diagnostics.iterations.back(), 20);
}

TEST(Solve, BitIdenticalAcrossThreadCounts) {
    ProblemSpec p = small_problem(8, 40);
    p.constraints.push_back(mass_band(p.grid, 0.5, 0.9));
    p.solver.iterations = 30;
    EXPECT_TRUE(testing::bit_identical_across_threads(p, {1, 4}));
}

TEST(Solve, RejectsBadParameters) {
    ProblemSpec p = small_problem();
    p.solver.alpha = 2.0;
    EXPECT_THROW(ppxa_solve(p), ParameterError);
    p = small_problem();
    p.solver.gamma = -1.0;
    EXPECT_THROW(ppxa_solve(p), ParameterError);
}

TEST(Probe, NoConstraintsIsFeasible) {
    const FeasibilityReport r = feasibility_probe(small_problem());
    EXPECT_EQ(r.verdict, FeasibilityVerdict::likely_feasible);
    EXPECT_LE(r.max_violation, 1e-6);
}

TEST(Probe, ContradictoryMassIsInfeasible) {
    ProblemSpec p = small_problem();
    p.constraints.push_back(mass_band(p.grid, 1.0, 1.0));
    p.constraints.push_back(mass_band(p.grid, 2.0, 2.0));
    p.constraints[1].name = "mass_two";
    const FeasibilityReport r = feasibility_probe(p);
    EXPECT_EQ(r.verdict, FeasibilityVerdict::likely_infeasible);
    EXPECT_GT(r.constraint_violation, 1e-3);
}

TEST(Probe, AttainableBandIsFeasible) {
    ProblemSpec p = small_problem();
    p.constraints.push_back(mass_band(p.grid, 0.6, 0.9));
    const FeasibilityReport r = feasibility_probe(p);
    EXPECT_EQ(r.verdict, FeasibilityVerdict::likely_feasible);
}

}  // namespace
}  // namespace cuot
