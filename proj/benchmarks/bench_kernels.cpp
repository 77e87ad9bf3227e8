#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "cuot/constraints.hpp"
#include "cuot/ppxa.hpp"
#include "cuot/scenarios.hpp"
#include "cuot/wfr.hpp"

namespace {

using namespace cuot;

GridSpec grid_2d(std::size_t n) {
    GridSpec g;
    g.time_cells = 15;
    g.cells = {n, n};
    g.lengths = {1.0, 1.0};
    g.boundary = {Boundary::neumann, Boundary::neumann};
    return g;
}

void fill(Array& a, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& x : a.values()) x = u(rng);
}

CenteredField random_centered(const GridSpec& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    CenteredField v = CenteredField::zeros(g);
    fill(v.rho, rng);
    for (auto& w : v.omega) fill(w, rng);
    fill(v.zeta, rng);
    return v;
}

StaggeredField random_staggered(const GridSpec& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    StaggeredField u = StaggeredField::zeros(g);
    fill(u.rho_bar, rng);
    for (auto& w : u.omega_bar) fill(w, rng);
    fill(u.zeta_bar, rng);
    return u;
}

void BM_ProxPointwise(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const double delta = state.range(0) == 1 ? 1.0 : 0.5;
    std::vector<double> omega{u(rng), u(rng)};
    for (auto _ : state) {
        const PointValue p = prox_pointwise(0.7, delta, u(rng), omega, u(rng));
        benchmark::DoNotOptimize(p.rho);
    }
}
BENCHMARK(BM_ProxPointwise)->Arg(1)->Arg(0);

void BM_ProxField(benchmark::State& state) {
    const GridSpec g = grid_2d(static_cast<std::size_t>(state.range(0)));
    const CenteredField v = random_centered(g, 2);
    CenteredField out = CenteredField::zeros(g);
    for (auto _ : state) {
        prox_cost_field_into(g, 0.5, 2.0, v, out);
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(g.centered_size()));
}
BENCHMARK(BM_ProxField)->Arg(30)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_ContinuityProjection(benchmark::State& state) {
    const GridSpec g = grid_2d(static_cast<std::size_t>(state.range(0)));
    const ContinuityProjector projector(g);
    const StaggeredField u = random_staggered(g, 3);
    const BoundaryValues b0 = boundary_extract(g, u);
    StaggeredField out = StaggeredField::zeros(g);
    for (auto _ : state) {
        projector.project(u, b0, out);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_ContinuityProjection)->Arg(30)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_ConsistencyProjection(benchmark::State& state) {
    const GridSpec g = grid_2d(static_cast<std::size_t>(state.range(0)));
    const ConsistencyProjector projector(g);
    const StaggeredField u = random_staggered(g, 4);
    const CenteredField v = random_centered(g, 5);
    StaggeredField u_out = StaggeredField::zeros(g);
    CenteredField v_out = CenteredField::zeros(g);
    for (auto _ : state) {
        projector.project(u, v, u_out, v_out);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_ConsistencyProjection)->Arg(30)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_BoxProjection(benchmark::State& state) {
    const GridSpec g = grid_2d(static_cast<std::size_t>(state.range(0)));
    AffineBoxConstraint c;
    c.name = "mass";
    c.rho_weight = Array(g.centered_shape(), 1.0);
    c.lower.assign(g.time_cells, 0.0);
    c.upper.assign(g.time_cells, 0.0);
    const BoxProjector projector(g, c);
    const CenteredField v = random_centered(g, 6);
    for (auto _ : state) {
        CenteredField w = v;
        projector.project(w);
        benchmark::DoNotOptimize(w.rho.data());
    }
}
BENCHMARK(BM_BoxProjection)->Arg(30)->Arg(64)->Unit(benchmark::kMicrosecond);

// Cost of consensus iterations on a preset, setup excluded by differencing two lengths.
void BM_PpxaIterations(benchmark::State& state) {
    ProblemSpec p = build_scenario("barrier_static");
    p.solver.snapshot_stride = 1000;
    p.solver.thread_count = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        p.solver.iterations = 20;
        const SolveResult r = ppxa_solve(p);
        benchmark::DoNotOptimize(r.energy);
    }
    state.counters["iterations"] = benchmark::Counter(20.0 * static_cast<double>(state.iterations()),
                                                      benchmark::Counter::kIsRate);
}
BENCHMARK(BM_PpxaIterations)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
