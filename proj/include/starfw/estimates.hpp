#pragma once

#include <starfw/errors.hpp>
#include <starfw/geometry.hpp>
#include <starfw/objectives.hpp>

#include <algorithm>
#include <cstdint>

namespace starfw {

/*
 * Sampled lower estimate of the gradient Lipschitz constant on `set`:
 * running maximum of ||grad f(x) - grad f(y)|| / ||x - y|| over independent
 * pairs drawn from one seeded stream (so the estimate is non-decreasing in
 * n_samples). Pairs touching a gradient singularity are skipped.
 */
inline double estimate_lipschitz(const Objective& f, const FeasibleSet& set, long n_samples, std::uint64_t seed)
{
    detail::require_dim(f.dimension(), set.dimension(), "estimate_lipschitz");
    Rng rng(seed);
    double best = 0.0;
    for (long i = 0; i < n_samples; ++i) {
        Vector x = set.sample(rng);
        Vector y = set.sample(rng);
        double dist = (x - y).norm();
        if (dist == 0.0) continue;
        try {
            best = std::max(best, (f.gradient(x) - f.gradient(y)).norm() / dist);
        } catch (const SingularityError&) {
        }
    }
    return best;
}

/*
 * Sampled estimate of sup_{x in set} ||grad f(x)||. Even draws are uniform
 * samples, odd draws are oracle points lmo(g) for random directions g, which
 * puts half the budget on the boundary where the supremum usually sits.
 */
inline double estimate_gradient_bound(const Objective& f, const FeasibleSet& set, long n_samples, std::uint64_t seed)
{
    detail::require_dim(f.dimension(), set.dimension(), "estimate_gradient_bound");
    Rng rng(seed);
    double best = 0.0;
    for (long i = 0; i < n_samples; ++i) {
        Vector x = (i % 2 == 0) ? set.sample(rng) : set.lmo(detail::gaussian_direction(set.dimension(), rng));
        try {
            best = std::max(best, f.gradient(x).norm());
        } catch (const SingularityError&) {
        }
    }
    return best;
}

} // namespace starfw
