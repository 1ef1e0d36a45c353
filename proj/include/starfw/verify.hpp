#pragma once

#include <starfw/errors.hpp>
#include <starfw/estimates.hpp>
#include <starfw/geometry.hpp>
#include <starfw/objectives.hpp>
#include <starfw/solver.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace starfw {

// =======================================================================
// Sampling checkers for objectives
// =======================================================================

struct StarViolation {
    Vector x;
    double lambda;
    double lhs;  // f(lambda x* + (1 - lambda) x)
    double rhs;  // lambda f(x*) + (1 - lambda) f(x)
};

struct StarConvexityReport {
    long n_samples = 0;
    long n_lambdas = 0;
    long n_violations = 0;
    std::vector<StarViolation> violations;  // first max_recorded violations
    double max_violation = 0.0;   // max(lhs - rhs) over all tested pairs
    // Samples with f(x) < f(x*) - tol: x* is not a global minimizer.
    long n_below_minimum = 0;
    std::vector<Vector> below_minimum;      // first max_recorded such samples
    bool passed() const { return n_violations == 0 && n_below_minimum == 0; }
};

/*
 * Secant test of star-convexity about x_star:
 *   f(l x* + (1 - l) x) <= l f(x*) + (1 - l) f(x)
 * for n_samples feasible x and the uniform grid l = i / (n_lambdas - 1).
 * Also counts samples below f(x*), since x* must be a global minimizer
 * (a convex f passes the secant test about any point).
 */
inline StarConvexityReport check_star_convexity(const Objective& f, const FeasibleSet& set, const Vector& x_star,
                                                long n_samples, long n_lambdas, double tol, std::uint64_t seed,
                                                std::size_t max_recorded = 100)
{
    detail::require_dim(f.dimension(), set.dimension(), "check_star_convexity");
    detail::require_dim(x_star.size(), set.dimension(), "check_star_convexity x_star");
    if (!set.contains(x_star, 1e-9)) throw DomainError("check_star_convexity: x_star is not feasible");
    if (n_lambdas < 2) throw DomainError("check_star_convexity: need at least 2 lambda values");

    StarConvexityReport rep;
    rep.n_samples = n_samples;
    rep.n_lambdas = n_lambdas;
    rep.max_violation = -std::numeric_limits<double>::infinity();
    const double f_star = f.value(x_star);
    Rng rng(seed);
    for (long s = 0; s < n_samples; ++s) {
        Vector x = set.sample(rng);
        const double fx = f.value(x);
        if (fx < f_star - tol) {
            ++rep.n_below_minimum;
            if (rep.below_minimum.size() < max_recorded) rep.below_minimum.push_back(x);
        }
        for (long i = 0; i < n_lambdas; ++i) {
            const double lam = static_cast<double>(i) / static_cast<double>(n_lambdas - 1);
            const double lhs = f.value(lam * x_star + (1.0 - lam) * x);
            const double rhs = lam * f_star + (1.0 - lam) * fx;
            rep.max_violation = std::max(rep.max_violation, lhs - rhs);
            if (lhs > rhs + tol) {
                ++rep.n_violations;
                if (rep.violations.size() < max_recorded) rep.violations.push_back({x, lam, lhs, rhs});
            }
        }
    }
    return rep;
}

struct GradientInequalityReport {
    long n_samples = 0;
    long n_violations = 0;
    double max_violation = 0.0;  // max of grad f(x)'(x* - x) - (f* - f(x))
    bool passed() const { return n_violations == 0; }
};

/// Sampled check of f* - f(x) >= grad f(x)'(x* - x), implied by star-convexity.
inline GradientInequalityReport check_star_gradient_inequality(const Objective& f, const FeasibleSet& set,
                                                              const Vector& x_star, long n_samples, double tol,
                                                              std::uint64_t seed)
{
    detail::require_dim(x_star.size(), set.dimension(), "check_star_gradient_inequality");
    if (!set.contains(x_star, 1e-9)) throw DomainError("check_star_gradient_inequality: x_star is not feasible");
    GradientInequalityReport rep;
    rep.n_samples = n_samples;
    rep.max_violation = -std::numeric_limits<double>::infinity();
    const double f_star = f.value(x_star);
    Rng rng(seed);
    for (long s = 0; s < n_samples; ++s) {
        Vector x = set.sample(rng);
        double excess = f.gradient(x).dot(x_star - x) - (f_star - f.value(x));
        rep.max_violation = std::max(rep.max_violation, excess);
        if (excess > tol) ++rep.n_violations;
    }
    return rep;
}

struct ConvexityWitness {
    Vector x;
    Vector y;
    double violation;  // f(x) + grad f(x)'(y - x) - f(y) > 0
};

/// Sampled pair breaking f(y) >= f(x) + grad f(x)'(y - x) by more than 1e-9, if any.
inline std::optional<ConvexityWitness> find_convexity_violation(const Objective& f, const FeasibleSet& set,
                                                                long n_samples, std::uint64_t seed)
{
    detail::require_dim(f.dimension(), set.dimension(), "find_convexity_violation");
    Rng rng(seed);
    for (long s = 0; s < n_samples; ++s) {
        Vector x = set.sample(rng);
        Vector y = set.sample(rng);
        Vector g;
        try {
            g = f.gradient(x);
        } catch (const SingularityError&) {
            continue;
        }
        double excess = f.value(x) + g.dot(y - x) - f.value(y);
        if (excess > 1e-9) return ConvexityWitness{x, y, excess};
    }
    return std::nullopt;
}

struct GradientCheckReport {
    long n_points = 0;
    long n_skipped = 0;           // points at gradient singularities
    double max_rel_error = 0.0;   // ||g - g_fd|| / max(1, ||g||)
};

/// Central finite differences against the analytic gradient at sampled points.
inline GradientCheckReport gradient_check(const Objective& f, const FeasibleSet& set, long n_points, double step,
                                          std::uint64_t seed)
{
    detail::require_dim(f.dimension(), set.dimension(), "gradient_check");
    GradientCheckReport rep;
    rep.n_points = n_points;
    Rng rng(seed);
    const Index n = f.dimension();
    for (long s = 0; s < n_points; ++s) {
        Vector x = set.sample(rng);
        Vector g;
        try {
            g = f.gradient(x);
        } catch (const SingularityError&) {
            ++rep.n_skipped;
            continue;
        }
        Vector fd(n);
        for (Index i = 0; i < n; ++i) {
            Vector xp = x, xm = x;
            xp[i] += step;
            xm[i] -= step;
            fd[i] = (f.value(xp) - f.value(xm)) / (2.0 * step);
        }
        rep.max_rel_error = std::max(rep.max_rel_error, (g - fd).norm() / std::max(1.0, g.norm()));
    }
    return rep;
}

// =======================================================================
// Bound audits over recorded runs
// =======================================================================

struct BoundRow {
    long k;
    double observed;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
};

/*
 * A row violates its upper bound when observed > upper + tol*max(|upper|, |observed|)
 * (i.e. upper*(1+tol) for positive bounds), and symmetrically for lower bounds.
 */
struct BoundAuditReport {
    std::string name;
    std::vector<BoundRow> rows;
    std::optional<long> first_violation_k;
    bool passed = true;
    std::string note;
};

namespace detail {

inline bool row_violates(const BoundRow& r, double tol_rel)
{
    if (std::isnan(r.observed)) return true;
    if (r.observed > r.upper + tol_rel * std::max(std::abs(r.upper), std::abs(r.observed))) return true;
    if (r.observed < r.lower - tol_rel * std::max(std::abs(r.lower), std::abs(r.observed))) return true;
    return false;
}

inline BoundAuditReport finalize_audit(std::string name, std::vector<BoundRow> rows, double tol_rel,
                                       std::string note = {})
{
    BoundAuditReport a;
    a.name = std::move(name);
    a.rows = std::move(rows);
    a.note = std::move(note);
    for (const auto& r : a.rows) {
        if (row_violates(r, tol_rel)) {
            a.first_violation_k = r.k;
            a.passed = false;
            break;
        }
    }
    return a;
}

inline double require_f_star(const BoundConstants& c, const char* audit)
{
    if (!c.f_star) throw Error(std::string(audit) + ": optimal value f* is unknown");
    return *c.f_star;
}

inline double require_l(const BoundConstants& c, const char* audit)
{
    if (!c.l_used) throw Error(std::string(audit) + ": Lipschitz constant is missing");
    return *c.l_used;
}

} // namespace detail

/*
 * Armijo runs: f(x^k) - f* <= 1/(zeta gamma k) for k >= 1 ("armijo_rate"),
 * lambda_k >= gamma |omega_k| ("armijo_stepsize") and the accepted
 * sufficient decrease f(x^{k+1}) <= f(x^k) - zeta lambda_k |omega_k| ("armijo_descent").
 */
inline std::vector<BoundAuditReport> audit_armijo_rate(const RunReport& report, const BoundConstants& c,
                                                       double tol_rel = 1e-9)
{
    if (report.strategy() != "armijo") throw Error("audit_armijo_rate: run used strategy '" + report.strategy() + "'");
    const double f_star = detail::require_f_star(c, "audit_armijo_rate");
    if (!c.gamma) throw Error("audit_armijo_rate: gamma is missing");
    const double gamma = *c.gamma;
    const double big_gamma = c.zeta * gamma;

    std::vector<BoundRow> rate, stepsize, descent;
    const auto& recs = report.records;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        if (r.k >= 1) rate.push_back({r.k, r.f - f_star, -std::numeric_limits<double>::infinity(),
                                      1.0 / (big_gamma * static_cast<double>(r.k))});
        if (r.lambda) {
            stepsize.push_back({r.k, *r.lambda, gamma * std::abs(r.gap)});
            if (i + 1 < recs.size()) {
                descent.push_back({r.k, recs[i + 1].f, -std::numeric_limits<double>::infinity(),
                                   r.f - c.zeta * *r.lambda * std::abs(r.gap)});
            }
        }
    }
    return {detail::finalize_audit("armijo_rate", std::move(rate), tol_rel),
            detail::finalize_audit("armijo_stepsize", std::move(stepsize), tol_rel),
            detail::finalize_audit("armijo_descent", std::move(descent), tol_rel)};
}

/*
 * Lipschitz-based and diminishing runs, with A = (L + L0) diam^2:
 *   fcr_value  f(x^k) - f* <= 4A / k                         for k >= 1
 *   fcr_gap    min_{l = floor(k/2)+2 .. k} |omega_l| <= 16A / (k - 2)   for k >= 3
 */
inline std::vector<BoundAuditReport> audit_fcr_rates(const RunReport& report, const BoundConstants& c,
                                                     double tol_rel = 1e-9)
{
    const std::string& s = report.strategy();
    if (s != "adaptive" && s != "known-l" && s != "diminishing") {
        throw Error("audit_fcr_rates: run used strategy '" + s + "'");
    }
    const double f_star = detail::require_f_star(c, "audit_fcr_rates");
    const double l = detail::require_l(c, "audit_fcr_rates");
    const double a = (l + c.l0) * c.diam * c.diam;
    std::string note;
    if (s == "diminishing") note = "L0 taken from configuration; the diminishing rule does not use it";

    const auto& recs = report.records;
    std::vector<BoundRow> value, gaps;
    for (const auto& r : recs) {
        if (r.k >= 1) {
            value.push_back({r.k, r.f - f_star, -std::numeric_limits<double>::infinity(),
                             4.0 * a / static_cast<double>(r.k)});
        }
    }
    // records are indexed by k, so recs[k].k == k.
    for (std::size_t k = 3; k < recs.size(); ++k) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t l_idx = k / 2 + 2; l_idx <= k; ++l_idx) best = std::min(best, std::abs(recs[l_idx].gap));
        gaps.push_back({static_cast<long>(k), best, -std::numeric_limits<double>::infinity(),
                        16.0 * a / static_cast<double>(k - 2)});
    }
    return {detail::finalize_audit("fcr_value", std::move(value), tol_rel, note),
            detail::finalize_audit("fcr_gap", std::move(gaps), tol_rel, note)};
}

/// Adaptive runs: every recorded L_k lies in [L0, L + L0].
inline BoundAuditReport audit_lipschitz_corridor(const RunReport& report, double l_true, double l0,
                                                 double tol_rel = 1e-9)
{
    if (report.strategy() != "adaptive") {
        throw Error("audit_lipschitz_corridor: run used strategy '" + report.strategy() + "'");
    }
    std::vector<BoundRow> rows;
    for (const auto& r : report.records) {
        if (r.l_estimate) rows.push_back({r.k, *r.l_estimate, l0, l_true + l0});
    }
    return detail::finalize_audit("lipschitz_corridor", std::move(rows), tol_rel);
}

/*
 * Adaptive runs: f(x^{k+1}) <= f(x^k) - |omega_k| lambda_k / 2 ("adaptive_descent")
 * and lambda_k >= min{1, |omega_k| / (2 (L + L0) diam^2)} ("adaptive_stepsize").
 */
inline std::vector<BoundAuditReport> audit_adaptive_descent(const RunReport& report, const BoundConstants& c,
                                                            double tol_rel = 1e-9)
{
    if (report.strategy() != "adaptive") {
        throw Error("audit_adaptive_descent: run used strategy '" + report.strategy() + "'");
    }
    const double l = detail::require_l(c, "audit_adaptive_descent");
    const double alpha = 2.0 * (l + c.l0) * c.diam * c.diam;
    const auto& recs = report.records;
    std::vector<BoundRow> descent, stepsize;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        if (!r.lambda) continue;
        const double w = std::abs(r.gap);
        stepsize.push_back({r.k, *r.lambda, std::min(1.0, w / alpha)});
        if (i + 1 < recs.size()) {
            descent.push_back({r.k, recs[i + 1].f, -std::numeric_limits<double>::infinity(),
                               r.f - 0.5 * w * *r.lambda});
        }
    }
    return {detail::finalize_audit("adaptive_descent", std::move(descent), tol_rel),
            detail::finalize_audit("adaptive_stepsize", std::move(stepsize), tol_rel)};
}

/// Every audit that applies to the run's strategy.
inline std::vector<BoundAuditReport> run_audits(const RunReport& report, const BoundConstants& c,
                                                double tol_rel = 1e-9)
{
    std::vector<BoundAuditReport> out;
    auto append = [&out](std::vector<BoundAuditReport> v) {
        for (auto& a : v) out.push_back(std::move(a));
    };
    const std::string& s = report.strategy();
    if (s == "armijo") {
        append(audit_armijo_rate(report, c, tol_rel));
    } else {
        append(audit_fcr_rates(report, c, tol_rel));
        if (s == "adaptive") {
            out.push_back(audit_lipschitz_corridor(report, detail::require_l(c, "run_audits"), c.l0, tol_rel));
            append(audit_adaptive_descent(report, c, tol_rel));
        }
    }
    return out;
}

} // namespace starfw
