#pragma once

#include <starfw/errors.hpp>
#include <starfw/estimates.hpp>
#include <starfw/geometry.hpp>
#include <starfw/objectives.hpp>
#include <starfw/stepsizes.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace starfw {

struct SolverConfig {
    long max_iters = 1000;
    double gap_tol = 1e-8;          // stop once |omega(x^k)| <= gap_tol
    double feasibility_tol = 1e-9;
    StrategyConfig strategy;
    std::uint64_t seed = 0;         // x0 = set.sample(seed) unless x0 is given
    std::optional<Vector> x0;
    bool keep_iterates = false;

    void validate() const
    {
        if (max_iters < 1) throw SpecError("max_iters: must be >= 1");
        if (!(gap_tol >= 0.0)) throw SpecError("gap_tol: must be >= 0");
        if (!(feasibility_tol >= 0.0)) throw SpecError("feasibility_tol: must be >= 0");
    }
};

enum class Termination { GapTolReached, MaxIters, LineSearchFailure };

inline std::string to_string(Termination t)
{
    switch (t) {
    case Termination::GapTolReached: return "gap_tol_reached";
    case Termination::MaxIters: return "max_iters";
    case Termination::LineSearchFailure: return "line_search_failure";
    }
    return "unknown";
}

inline Termination termination_from_string(const std::string& s)
{
    if (s == "gap_tol_reached") return Termination::GapTolReached;
    if (s == "max_iters") return Termination::MaxIters;
    if (s == "line_search_failure") return Termination::LineSearchFailure;
    throw SpecError("termination: unknown value '" + s + "'");
}

/// One row of the trace. The terminal row carries no stepsize.
struct IterationRecord {
    long k = 0;
    double f = 0.0;
    double gap = 0.0;                    // omega(x^k), clamped to <= 0
    std::optional<double> lambda;
    std::optional<double> l_estimate;    // L_k in force at iteration k
    int fevals_iter = 0;
    long fevals_cum = 0;
};

struct RunReport {
    SolverConfig config;
    std::vector<IterationRecord> records;
    Vector final_x;
    Termination termination = Termination::MaxIters;
    std::string failure_message;
    double wall_time_ms = 0.0;
    std::vector<Vector> iterates;        // filled when config.keep_iterates

    const std::string& strategy() const { return config.strategy.name; }
};

// -----------------------------------------------------------------------

struct GapResult {
    double omega;   // grad f(x)'(p - x), unclamped
    Vector p;       // lmo(grad f(x))
    Vector grad;
};

/// Frank-Wolfe gap at a feasible x: p = lmo(grad f(x)), omega = grad'(p - x) <= 0.
inline GapResult gap(const Objective& f, const FeasibleSet& set, const Vector& x, double feasibility_tol = 1e-9)
{
    detail::require_dim(f.dimension(), set.dimension(), "gap");
    if (!set.contains(x, feasibility_tol)) throw DomainError("gap: x is not feasible");
    Vector g = f.gradient(x);
    Vector p = set.lmo(g);
    double omega = g.dot(p - x);
    return {omega, std::move(p), std::move(g)};
}

/*
 * Frank-Wolfe main loop. Each iteration computes one gradient and one oracle
 * call; the gap doubles as the stopping test and as input to the stepsize.
 * Line-search failures end the run with a partial trace instead of throwing.
 */
inline RunReport solve(const Objective& f, const FeasibleSet& set, const SolverConfig& cfg)
{
    cfg.validate();
    if (f.checker_only()) throw SpecError("objective is checker-only");
    detail::require_dim(f.dimension(), set.dimension(), "solve");

    const auto t_start = std::chrono::steady_clock::now();
    RunReport report;
    report.config = cfg;

    Vector x = cfg.x0 ? *cfg.x0 : set.sample(cfg.seed);
    detail::require_dim(x.size(), set.dimension(), "x0");
    if (!set.contains(x, cfg.feasibility_tol)) throw DomainError("x0: initial point is not feasible");

    auto strategy = make_strategy(cfg.strategy, f.lipschitz_on(set));
    long fevals_cum = 0;

    for (long k = 0;; ++k) {
        if (cfg.keep_iterates) report.iterates.push_back(x);
        const double fx = f.value(x);
        GapResult gr = gap(f, set, x, cfg.feasibility_tol);
        Vector d = gr.p - x;

        IterationRecord rec;
        rec.k = k;
        rec.f = fx;
        rec.gap = std::min(gr.omega, 0.0);
        rec.l_estimate = strategy->lipschitz_estimate();
        rec.fevals_cum = fevals_cum;

        // omega >= 0 or d = 0 is floating-point noise around a stationary point.
        if (std::abs(gr.omega) <= cfg.gap_tol || !(gr.omega < 0.0) || d.squaredNorm() == 0.0) {
            report.records.push_back(rec);
            report.termination = Termination::GapTolReached;
            break;
        }
        if (k >= cfg.max_iters) {
            report.records.push_back(rec);
            report.termination = Termination::MaxIters;
            break;
        }

        StepContext ctx{f, x, d, gr.omega, k, fx};
        StepResult step;
        try {
            step = strategy->step(ctx);
        } catch (const LineSearchFailure& e) {
            report.records.push_back(rec);
            report.termination = Termination::LineSearchFailure;
            report.failure_message = e.what();
            break;
        }
        fevals_cum += step.f_evals;
        rec.lambda = step.lambda;
        rec.fevals_iter = step.f_evals;
        rec.fevals_cum = fevals_cum;
        report.records.push_back(rec);

        x = ctx.point(step.lambda);
        if (!set.contains(x, cfg.feasibility_tol)) {
            throw Error("solve: iterate " + std::to_string(k + 1) + " left the feasible set");
        }
    }

    report.final_x = x;
    report.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

// -----------------------------------------------------------------------
// Constants needed by the rate audits
// -----------------------------------------------------------------------

struct BoundConstants {
    double diam = 0.0;
    std::optional<double> l_used;      // trusted (or inflated estimated) Lipschitz constant
    std::string l_source;              // "objective", "config", "estimate"
    double l0 = 1.0;
    double zeta = 0.1;
    double beta = 0.5;
    std::optional<double> rho;         // inflated sampled sup ||grad f|| (armijo only)
    std::optional<double> gamma;       // min{1/(rho diam), 2(1-zeta)/(beta L diam^2)} (armijo only)
    std::optional<double> f_star;
};

struct ReplayOptions {
    bool allow_estimate = false;       // estimate L by sampling when no trusted value exists
    long samples = 10000;
    std::uint64_t seed = 12345;
    double inflation = 1.1;
    std::optional<double> f_star;      // overrides the objective's declared optimum
};

inline double armijo_gamma(double rho, double diam, double l, double zeta, double beta)
{
    return std::min(1.0 / (rho * diam), 2.0 * (1.0 - zeta) / (beta * l * diam * diam));
}

inline BoundConstants replay_bound_inputs(const RunReport& report, const Objective& f, const FeasibleSet& set,
                                          const ReplayOptions& opts = {})
{
    const StrategyConfig& sc = report.config.strategy;
    BoundConstants c;
    c.diam = set.diameter();
    c.l0 = sc.l0;
    c.zeta = sc.zeta;
    c.beta = sc.beta;

    if (auto l = f.lipschitz_on(set)) {
        c.l_used = *l;
        c.l_source = "objective";
    } else if (sc.l) {
        c.l_used = *sc.l;
        c.l_source = "config";
    } else if (opts.allow_estimate) {
        c.l_used = opts.inflation * estimate_lipschitz(f, set, opts.samples, opts.seed);
        c.l_source = "estimate";
    }

    if (opts.f_star) {
        c.f_star = opts.f_star;
    } else if (auto xs = f.minimizer(); xs && set.contains(*xs, report.config.feasibility_tol)) {
        c.f_star = f.optimal_value();
    }

    if (sc.name == "armijo") {
        if (!c.l_used) {
            throw Error("replay_bound_inputs: no trusted Lipschitz constant; enable estimation (--estimate-l)");
        }
        c.rho = opts.inflation * estimate_gradient_bound(f, set, opts.samples, opts.seed);
        c.gamma = armijo_gamma(*c.rho, c.diam, *c.l_used, c.zeta, c.beta);
    } else if (sc.name != "diminishing" && !c.l_used) {
        throw Error("replay_bound_inputs: no trusted Lipschitz constant; enable estimation (--estimate-l)");
    }
    return c;
}

} // namespace starfw
