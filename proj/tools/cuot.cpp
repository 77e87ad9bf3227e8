#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cuot/config.hpp"
#include "cuot/errors.hpp"
#include "cuot/io.hpp"
#include "cuot/ppxa.hpp"
#include "cuot/scenarios.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

// Turns Ctrl-C into a stop request honored at the next iteration boundary.
class InterruptWatch {
public:
    InterruptWatch() {
        std::signal(SIGINT, on_interrupt);
        watcher_ = std::jthread([this](std::stop_token self) {
            while (!self.stop_requested()) {
                if (g_interrupted.load()) {
                    source_.request_stop();
                    return;
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            }
        });
    }
    ~InterruptWatch() { std::signal(SIGINT, SIG_DFL); }
    std::stop_token token() const { return source_.get_token(); }

private:
    std::stop_source source_;
    std::jthread watcher_;
};

struct RunFlags {
    fs::path out;
    long iterations = -1;
    long snapshot_every = -1;
    long threads = -1;
    bool quiet = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("--out", flags.out, "Output directory")->required();
    cmd->add_option("--iters", flags.iterations, "Iteration count")->check(CLI::PositiveNumber);
    cmd->add_option("--snapshot-every", flags.snapshot_every, "Snapshot stride")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--quiet", flags.quiet, "No progress output");
}

void apply_run_flags(cuot::ProblemSpec& problem, const RunFlags& flags) {
    if (flags.iterations > 0) problem.solver.iterations = flags.iterations;
    if (flags.snapshot_every > 0) problem.solver.snapshot_stride = flags.snapshot_every;
    if (flags.threads > 0) problem.solver.thread_count = static_cast<std::size_t>(flags.threads);
    cuot::validate_problem(problem);
}

void print_constraints(const cuot::ProblemSpec& problem, const cuot::ConstraintReport& report) {
    for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
        double worst = 0.0;
        for (double v : report.violations[i]) worst = std::max(worst, v);
        std::printf("  constraint %-20s max violation %.3e\n", problem.constraints[i].name.c_str(), worst);
    }
}

int run_solve(const cuot::ProblemSpec& problem, const RunFlags& flags) {
    InterruptWatch interrupt;
    cuot::SolveOptions options;
    options.stop = interrupt.token();
    const long every = std::max(problem.solver.iterations / 20, problem.solver.snapshot_stride);
    if (!flags.quiet) {
        options.progress = [every](const cuot::ProgressInfo& p) {
            if (p.iteration % every != 0) return;
            std::fprintf(stderr, "iter %7ld  energy %.8g  max violation %.3e  CE residual %.3e\n", p.iteration,
                         p.energy, p.max_violation, p.ce_residual);
        };
    }
    const cuot::SolveResult result = cuot::ppxa_solve(problem, options);
    cuot::export_result(problem, result, flags.out);

    std::printf("%s: %ld iterations in %.2f s%s\n", problem.name.c_str(), result.iterations_run,
                result.wall_seconds, result.cancelled ? " (interrupted)" : "");
    std::printf("  energy %.10g (initial path %.10g)\n", result.energy, result.init_energy);
    std::printf("  CE residual %.3e  consistency gap %.3e\n", result.ce_residual, result.consistency_residual);
    print_constraints(problem, result.constraints);
    std::printf("  rate q = %.6f  R^2 = %.4f (%zu points)\n", result.diagnostics.rate.q,
                result.diagnostics.rate.r_squared, result.diagnostics.rate.points);
    std::printf("  wrote %s\n", flags.out.string().c_str());
    return kExitOk;
}

int run_feasibility(const cuot::ProblemSpec& problem, long iterations) {
    InterruptWatch interrupt;
    cuot::FeasibilityOptions options;
    if (iterations > 0) options.iterations = iterations;
    options.stop = interrupt.token();
    const cuot::FeasibilityReport r = cuot::feasibility_probe(problem, options);
    std::printf("%s: %s after %ld iterations\n", problem.name.c_str(), cuot::verdict_name(r.verdict),
                r.iterations_run);
    std::printf("  max violation %.3e (constraints %.3e, CE %.3e, consistency %.3e, negativity %.3e)\n",
                r.max_violation, r.constraint_violation, r.ce_residual, r.consistency_residual, r.negativity);
    return r.verdict == cuot::FeasibilityVerdict::likely_infeasible ? kExitInfeasible : kExitOk;
}

int run_rate(const fs::path& dir, long from) {
    const fs::path path = dir / "diagnostics.json";
    std::ifstream in(path);
    if (!in) throw cuot::ConfigError(path.string() + ": cannot open");
    json diag;
    try {
        diag = json::parse(in);
    } catch (const json::exception& e) {
        throw cuot::ConfigError(path.string() + ": " + e.what());
    }
    std::vector<long> iterations;
    std::vector<double> errors;
    try {
        const auto& its = diag.at("iterations");
        const auto& errs = diag.at("relative_error");
        if (its.size() != errs.size()) throw cuot::ConfigError(path.string() + ": trace lengths differ");
        for (std::size_t i = 0; i < its.size(); ++i) {
            const long k = its[i].get<long>();
            if (k < from || errs[i].is_null()) continue;
            iterations.push_back(k);
            errors.push_back(errs[i].get<double>());
        }
    } catch (const json::exception& e) {
        throw cuot::ConfigError(path.string() + ": " + e.what());
    }
    const cuot::RateFit fit = cuot::fit_convergence_rate(iterations, errors);
    std::printf("q = %.6f\nR^2 = %.6f\npoints = %zu\n", fit.q, fit.r_squared, fit.points);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained unbalanced optimal transport geodesics"};
    app.require_subcommand(1);

    RunFlags solve_flags;
    fs::path solve_config;
    auto* solve = app.add_subcommand("solve", "Solve the problem described by a config file");
    solve->add_option("--config", solve_config, "Problem config (JSON)")->required()->check(CLI::ExistingFile);
    add_run_flags(solve, solve_flags);

    RunFlags scenario_flags;
    std::string scenario_name;
    std::vector<std::string> overrides;
    fs::path data_dir = cuot::default_data_dir();
    bool print_config = false;
    auto* scenario = app.add_subcommand("scenario", "Solve a named preset");
    scenario->add_option("name", scenario_name, "Preset name")
        ->required()
        ->check(CLI::IsMember(cuot::scenario_names()));
    scenario->add_option("overrides", overrides, "key.path=VALUE assignments applied to the preset document");
    scenario->add_option("--data-dir", data_dir, "Directory holding preset data files");
    scenario->add_flag("--print-config", print_config, "Print the resolved preset document and exit");
    add_run_flags(scenario, scenario_flags);
    scenario->get_option("--out")->required(false);

    fs::path feasibility_config;
    long feasibility_iters = -1;
    auto* feasibility = app.add_subcommand("feasibility", "Heuristic check that the constraint set is nonempty");
    feasibility->add_option("--config", feasibility_config, "Problem config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    feasibility->add_option("--iters", feasibility_iters, "Probe iterations")->check(CLI::PositiveNumber);

    fs::path run_dir;
    long rate_from = 0;
    auto* rate = app.add_subcommand("rate", "Refit the convergence rate of an exported run");
    rate->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    rate->add_option("--from", rate_from, "Ignore snapshots before this iteration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*solve) {
            cuot::ProblemSpec problem = cuot::load_config(solve_config);
            apply_run_flags(problem, solve_flags);
            return run_solve(problem, solve_flags);
        }
        if (*scenario) {
            const std::string document = cuot::apply_overrides(cuot::scenario_document(scenario_name), overrides);
            if (print_config) {
                std::cout << document << "\n";
                return kExitOk;
            }
            if (scenario_flags.out.empty()) throw cuot::ConfigError("--out is required unless --print-config is given");
            cuot::ProblemSpec problem = cuot::parse_config(document, data_dir);
            apply_run_flags(problem, scenario_flags);
            return run_solve(problem, scenario_flags);
        }
        if (*feasibility) return run_feasibility(cuot::load_config(feasibility_config), feasibility_iters);
        if (*rate) return run_rate(run_dir, rate_from);
    } catch (const cuot::InfeasibleConstraint& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const cuot::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const cuot::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cuot::InvalidField& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cuot::ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}
