// starfw: Frank-Wolfe runs, benchmarks, star-convexity checks and rate audits.

#include <starfw/cli.hpp>

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    using namespace starfw::cli;

    CLI::App app{"Frank-Wolfe solver and rate auditor for star-convex objectives"};
    app.require_subcommand(1);

    RunOptions run;
    std::string run_strategy, run_out;
    std::uint64_t run_seed = 0;
    auto* run_cmd = app.add_subcommand("run", "Solve a problem spec with one or more stepsize strategies");
    run_cmd->add_option("--spec", run.spec_path, "Experiment spec (JSON)")->required();
    auto* strategy_opt = run_cmd->add_option("--strategy", run_strategy, "armijo | adaptive | known-l | diminishing");
    auto* seed_opt = run_cmd->add_option("--seed", run_seed, "Seed for x0 sampling (default: spec, then STARFW_SEED)");
    auto* out_opt = run_cmd->add_option("--out", run_out, "Output directory");

    BenchOptions bench;
    int bench_workers = 1;
    std::string bench_out;
    auto* bench_cmd = app.add_subcommand("bench", "Run a suite of problems x strategies and write summary.csv");
    bench_cmd->add_option("--suite", bench.suite_path, "Suite spec (JSON)")->required();
    auto* workers_opt = bench_cmd->add_option("--workers", bench_workers, "Concurrent runs");
    auto* bench_out_opt = bench_cmd->add_option("--out", bench_out, "Output directory");

    CheckOptions check;
    bool no_star = false;
    auto* check_cmd = app.add_subcommand("check", "Sampling checks: star-convexity, convexity witness, L, gradients");
    check_cmd->add_option("--spec", check.spec_path, "Problem spec (JSON)")->required();
    check_cmd->add_option("--samples", check.samples, "Sample count")->check(CLI::PositiveNumber);
    check_cmd->add_option("--lambdas", check.lambdas, "Lambda grid size")->check(CLI::Range(2L, 100000L));
    check_cmd->add_option("--tol", check.tol, "Star-convexity tolerance");
    auto* check_seed_opt = check_cmd->add_option("--seed", check.seed, "Sampling seed (default: STARFW_SEED, then 0)");
    check_cmd->add_flag("--no-star", no_star, "Skip the star-convexity check");

    AuditOptions audit;
    auto* audit_cmd = app.add_subcommand("audit", "Audit a recorded run against the iteration-complexity bounds");
    audit_cmd->add_option("--report", audit.report_path, "report.json written by `run`")->required();
    audit_cmd->add_flag("--estimate-l", audit.allow_estimate, "Estimate L by sampling when no trusted value exists");
    audit_cmd->add_option("--tol", audit.tol_rel, "Relative tolerance");
    audit_cmd->add_option("--samples", audit.samples, "Samples for rho / L estimation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run_cmd) {
            if (*strategy_opt) run.strategy = run_strategy;
            if (*seed_opt) run.seed = run_seed;
            if (*out_opt) run.out_dir = run_out;
            return cmd_run(run);
        }
        if (*bench_cmd) {
            if (*workers_opt) bench.workers = bench_workers;
            if (*bench_out_opt) bench.out_dir = bench_out;
            return cmd_bench(bench);
        }
        if (*check_cmd) {
            check.star = !no_star;
            if (!*check_seed_opt) {
                try {
                    if (auto s = env_seed()) check.seed = *s;
                } catch (const starfw::SpecError& e) {
                    std::cerr << "error: " << e.what() << '\n';
                    return kUsage;
                }
            }
            return cmd_check(check);
        }
        if (*audit_cmd) return cmd_audit(audit);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}
