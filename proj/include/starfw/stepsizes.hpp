#pragma once

#include <starfw/errors.hpp>
#include <starfw/objectives.hpp>
#include <starfw/types.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>

namespace starfw {

/// Inputs shared by every stepsize rule at iteration k.
struct StepContext {
    const Objective& objective;
    const Vector& x;   // current iterate
    const Vector& d;   // lmo(grad f(x)) - x
    double gap;        // omega(x) < 0
    long k;
    double f_x;        // cached f(x)

    double abs_gap() const { return std::abs(gap); }
    double d_norm_sq() const { return d.squaredNorm(); }
    Vector point(double lambda) const { return x + lambda * d; }
};

namespace detail {

inline void require_descent_context(const StepContext& ctx, const char* rule)
{
    if (!(ctx.gap < 0.0)) {
        throw DomainError(std::string(rule) + ": gap must be negative (stationary points stop earlier)");
    }
}

inline void require_nonzero_direction(const StepContext& ctx, const char* rule)
{
    if (!(ctx.d_norm_sq() > 0.0)) throw DomainError(std::string(rule) + ": zero search direction");
}

} // namespace detail

// =======================================================================
// Armijo backtracking with a carried trial stepsize
// =======================================================================

struct ArmijoState {
    double beta = 0.5;
    double zeta = 0.1;
    double trial = 1.0;   // in (0,1]
    long clamp_hits = 0;  // times beta^(l-1)*trial exceeded 1 and was clamped
};

struct ArmijoOutcome {
    double lambda;
    ArmijoState next;
    int f_evals;
    int backtracks;  // l_k
};

/*
 * lambda = beta^l * trial with l >= 0 the smallest integer such that
 *   f(x + lambda d) <= f(x) - zeta * lambda * |omega|.
 * Next trial is min(1, beta^(l-1) * trial), so a first-try acceptance lets
 * the following iteration start from a larger step.
 */
inline ArmijoOutcome armijo_step(const StepContext& ctx, const ArmijoState& state, int max_backtracks = 60)
{
    detail::require_descent_context(ctx, "armijo");
    if (!(state.beta > 0.0 && state.beta < 1.0)) throw DomainError("armijo: beta must lie in (0,1)");
    if (!(state.zeta > 0.0 && state.zeta < 1.0)) throw DomainError("armijo: zeta must lie in (0,1)");
    if (!(state.trial > 0.0 && state.trial <= 1.0)) throw DomainError("armijo: trial stepsize must lie in (0,1]");

    const double decrease = state.zeta * ctx.abs_gap();
    double lambda = state.trial;
    for (int ell = 0; ell <= max_backtracks; ++ell) {
        lambda = std::pow(state.beta, ell) * state.trial;
        if (ctx.objective.value(ctx.point(lambda)) <= ctx.f_x - decrease * lambda) {
            ArmijoState next = state;
            double grown = std::pow(state.beta, ell - 1) * state.trial;
            if (grown > 1.0) ++next.clamp_hits;
            next.trial = std::min(1.0, grown);
            return {lambda, next, ell + 1, ell};
        }
    }
    throw LineSearchFailure("armijo: no sufficient decrease after " + std::to_string(max_backtracks) +
                                " backtracks",
                            lambda);
}

// =======================================================================
// Adaptive Lipschitz estimate
// =======================================================================

struct AdaptiveLipschitzState {
    double l_current = 1.0;   // L_k
    double l0 = 1.0;
    // Restrict trials to 2^j L_k >= 2 L0 so that L_{k+1} never drops below L0.
    bool enforce_floor = true;
};

struct AdaptiveOutcome {
    double lambda;
    AdaptiveLipschitzState next;
    int f_evals;
    int doublings;  // j_k
};

/*
 * For j = j_min, j_min+1, ...:
 *   lambda_j = min{1, |omega| / (2^j L_k ||d||^2)}
 * accepted once f(x + lambda_j d) <= f(x) - |omega| lambda_j + 2^(j-1) L_k ||d||^2 lambda_j^2.
 * Then L_{k+1} = 2^(j_k - 1) L_k.
 */
inline AdaptiveOutcome adaptive_lipschitz_step(const StepContext& ctx, const AdaptiveLipschitzState& state,
                                               int max_doublings = 60)
{
    detail::require_descent_context(ctx, "adaptive");
    detail::require_nonzero_direction(ctx, "adaptive");
    if (!(state.l_current > 0.0) || !(state.l0 > 0.0)) throw DomainError("adaptive: L estimates must be > 0");

    const double w = ctx.abs_gap();
    const double dd = ctx.d_norm_sq();
    int j = 0;
    if (state.enforce_floor) {
        while (std::ldexp(state.l_current, j) < 2.0 * state.l0) ++j;
    }
    int evals = 0;
    double lambda = 1.0;
    for (; j <= max_doublings; ++j) {
        const double curvature = std::ldexp(state.l_current, j);
        lambda = std::min(1.0, w / (curvature * dd));
        ++evals;
        double model = ctx.f_x - w * lambda + 0.5 * curvature * dd * lambda * lambda;
        if (ctx.objective.value(ctx.point(lambda)) <= model) {
            AdaptiveLipschitzState next = state;
            next.l_current = std::ldexp(state.l_current, j - 1);
            return {lambda, next, evals, j};
        }
    }
    throw LineSearchFailure("adaptive: Lipschitz estimate exceeded 2^" + std::to_string(max_doublings) +
                                " L_k",
                            lambda);
}

// =======================================================================
// Closed-form rules
// =======================================================================

struct KnownLipschitzRule {
    double l = 1.0;
};

/// min{1, |omega| / (L ||d||^2)}; no function evaluations.
inline double known_lipschitz_step(const StepContext& ctx, const KnownLipschitzRule& rule)
{
    detail::require_descent_context(ctx, "known-l");
    detail::require_nonzero_direction(ctx, "known-l");
    if (!(rule.l > 0.0)) throw DomainError("known-l: L must be > 0");
    return std::min(1.0, ctx.abs_gap() / (rule.l * ctx.d_norm_sq()));
}

inline double diminishing_step(long k)
{
    if (k < 0) throw DomainError("diminishing: k must be >= 0");
    return 2.0 / (static_cast<double>(k) + 2.0);
}

// =======================================================================
// Stateful strategy objects used by the solver
// =======================================================================

struct StepResult {
    double lambda;
    int f_evals;
};

class StepsizeStrategy {
public:
    virtual ~StepsizeStrategy() = default;
    virtual std::string name() const = 0;
    virtual StepResult step(const StepContext& ctx) = 0;
    /// Curvature estimate in force for the next step (L_k), if the rule keeps one.
    virtual std::optional<double> lipschitz_estimate() const { return std::nullopt; }
};

class ArmijoStrategy final : public StepsizeStrategy {
public:
    explicit ArmijoStrategy(ArmijoState initial = {}, int max_backtracks = 60)
        : state_(initial), max_backtracks_(max_backtracks) {}

    std::string name() const override { return "armijo"; }

    StepResult step(const StepContext& ctx) override
    {
        ArmijoOutcome out = armijo_step(ctx, state_, max_backtracks_);
        state_ = out.next;
        return {out.lambda, out.f_evals};
    }

    const ArmijoState& state() const { return state_; }

private:
    ArmijoState state_;
    int max_backtracks_;
};

class AdaptiveLipschitzStrategy final : public StepsizeStrategy {
public:
    explicit AdaptiveLipschitzStrategy(AdaptiveLipschitzState initial = {}, int max_doublings = 60)
        : state_(initial), max_doublings_(max_doublings) {}

    std::string name() const override { return "adaptive"; }

    StepResult step(const StepContext& ctx) override
    {
        AdaptiveOutcome out = adaptive_lipschitz_step(ctx, state_, max_doublings_);
        state_ = out.next;
        return {out.lambda, out.f_evals};
    }

    std::optional<double> lipschitz_estimate() const override { return state_.l_current; }
    const AdaptiveLipschitzState& state() const { return state_; }

private:
    AdaptiveLipschitzState state_;
    int max_doublings_;
};

class KnownLipschitzStrategy final : public StepsizeStrategy {
public:
    explicit KnownLipschitzStrategy(double l) : rule_{l}
    {
        if (!(l > 0.0)) throw DomainError("known-l: L must be > 0");
    }

    std::string name() const override { return "known-l"; }
    StepResult step(const StepContext& ctx) override { return {known_lipschitz_step(ctx, rule_), 0}; }
    std::optional<double> lipschitz_estimate() const override { return rule_.l; }

private:
    KnownLipschitzRule rule_;
};

class DiminishingStrategy final : public StepsizeStrategy {
public:
    std::string name() const override { return "diminishing"; }
    StepResult step(const StepContext& ctx) override { return {diminishing_step(ctx.k), 0}; }
};

// -----------------------------------------------------------------------

/// Strategy selection as read from configs ("armijo", "adaptive", "known-l", "diminishing").
struct StrategyConfig {
    std::string name = "armijo";
    double zeta = 0.1;
    double beta = 0.5;
    double l0 = 1.0;
    std::optional<double> l;  // known-l: overrides the objective's trusted L
    bool enforce_floor = true;
    int max_backtracks = 60;
    int max_doublings = 60;
};

inline bool is_strategy_name(const std::string& s)
{
    return s == "armijo" || s == "adaptive" || s == "known-l" || s == "diminishing";
}

/// `trusted_l` is used by "known-l" when the config does not carry an explicit L.
inline std::unique_ptr<StepsizeStrategy> make_strategy(const StrategyConfig& cfg,
                                                       std::optional<double> trusted_l = std::nullopt)
{
    if (cfg.name == "armijo") {
        ArmijoState st;
        st.beta = cfg.beta;
        st.zeta = cfg.zeta;
        if (!(st.beta > 0.0 && st.beta < 1.0)) throw SpecError("beta: must lie in (0,1)");
        if (!(st.zeta > 0.0 && st.zeta < 1.0)) throw SpecError("zeta: must lie in (0,1)");
        return std::make_unique<ArmijoStrategy>(st, cfg.max_backtracks);
    }
    if (cfg.name == "adaptive") {
        if (!(cfg.l0 > 0.0)) throw SpecError("l0: must be > 0");
        return std::make_unique<AdaptiveLipschitzStrategy>(
            AdaptiveLipschitzState{cfg.l0, cfg.l0, cfg.enforce_floor}, cfg.max_doublings);
    }
    if (cfg.name == "known-l") {
        std::optional<double> l = cfg.l ? cfg.l : trusted_l;
        if (!l) throw SpecError("l: known-l strategy needs a Lipschitz constant (config key 'l')");
        if (!(*l > 0.0)) throw SpecError("l: must be > 0");
        return std::make_unique<KnownLipschitzStrategy>(*l);
    }
    if (cfg.name == "diminishing") return std::make_unique<DiminishingStrategy>();
    throw SpecError("strategy: unknown strategy '" + cfg.name + "'");
}

} // namespace starfw
