#pragma once

#include <starfw/errors.hpp>
#include <starfw/types.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace starfw {

// =======================================================================
// Feasible sets
// =======================================================================

/*
 * Compact convex set accessed only through a linear minimization oracle.
 * Sets are immutable after construction. The public entry points validate
 * dimensions and finiteness, then forward to the *_impl hooks.
 */
class FeasibleSet {
public:
    virtual ~FeasibleSet() = default;

    virtual Index dimension() const = 0;
    virtual std::string type_name() const = 0;

    /// argmin_{u in set} <g, u>. Ties go to the lowest vertex/coordinate index.
    Vector lmo(const Vector& g) const
    {
        detail::require_dim(g.size(), dimension(), "lmo");
        if (!all_finite(g)) throw DomainError("lmo: non-finite gradient");
        return lmo_impl(g);
    }

    virtual double diameter() const = 0;

    bool contains(const Vector& x, double tol) const
    {
        detail::require_dim(x.size(), dimension(), "contains");
        if (!all_finite(x)) return false;
        return contains_impl(x, std::max(tol, 0.0));
    }

    /// Deterministic for a fixed seed.
    Vector sample(std::uint64_t seed) const
    {
        Rng rng(seed);
        return sample(rng);
    }
    Vector sample(Rng& rng) const { return sample_impl(rng); }

    /// Axis-aligned box containing the set: (lower, upper).
    virtual std::pair<Vector, Vector> bounding_box() const = 0;

protected:
    virtual Vector lmo_impl(const Vector& g) const = 0;
    virtual bool contains_impl(const Vector& x, double tol) const = 0;
    virtual Vector sample_impl(Rng& rng) const = 0;
};

using SetPtr = std::shared_ptr<const FeasibleSet>;

namespace detail {

inline Vector exponential_draws(Index n, Rng& rng)
{
    std::exponential_distribution<double> exp1(1.0);
    Vector e(n);
    for (Index i = 0; i < n; ++i) e[i] = exp1(rng);
    return e;
}

inline Vector gaussian_direction(Index n, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(n);
    do {
        for (Index i = 0; i < n; ++i) v[i] = normal(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

inline void require_finite(const Vector& v, const char* what)
{
    if (!all_finite(v)) throw DomainError(std::string(what) + ": non-finite entry");
}

} // namespace detail

// -----------------------------------------------------------------------

class ProbabilitySimplex final : public FeasibleSet {
public:
    explicit ProbabilitySimplex(Index n) : n_(n)
    {
        if (n < 2) throw DomainError("simplex: n must be >= 2");
    }

    Index dimension() const override { return n_; }
    std::string type_name() const override { return "simplex"; }
    double diameter() const override { return std::sqrt(2.0); }

    Vector sample_impl(Rng& rng) const override
    {
        Vector e = detail::exponential_draws(n_, rng);
        return e / e.sum();
    }

    std::pair<Vector, Vector> bounding_box() const override
    {
        return {Vector::Zero(n_), Vector::Ones(n_)};
    }

protected:
    Vector lmo_impl(const Vector& g) const override
    {
        Index best = 0;
        for (Index i = 1; i < n_; ++i) {
            if (g[i] < g[best]) best = i;
        }
        return Vector::Unit(n_, best);
    }

    bool contains_impl(const Vector& x, double tol) const override
    {
        return x.minCoeff() >= -tol && std::abs(x.sum() - 1.0) <= tol;
    }

private:
    Index n_;
};

// -----------------------------------------------------------------------

class BoxSet final : public FeasibleSet {
public:
    BoxSet(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper))
    {
        detail::require_dim(upper_.size(), lower_.size(), "box");
        if (lower_.size() < 1) throw DomainError("box: empty bounds");
        detail::require_finite(lower_, "box lower");
        detail::require_finite(upper_, "box upper");
        if ((lower_.array() > upper_.array()).any()) {
            throw DomainError("box: lower must be <= upper componentwise");
        }
    }

    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }

    Index dimension() const override { return lower_.size(); }
    std::string type_name() const override { return "box"; }
    double diameter() const override { return (upper_ - lower_).norm(); }

    Vector sample_impl(Rng& rng) const override
    {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Vector x(lower_.size());
        for (Index i = 0; i < x.size(); ++i) {
            x[i] = lower_[i] + unif(rng) * (upper_[i] - lower_[i]);
        }
        return x;
    }

    std::pair<Vector, Vector> bounding_box() const override { return {lower_, upper_}; }

protected:
    // g_i == 0 picks the lower bound.
    Vector lmo_impl(const Vector& g) const override
    {
        Vector p(lower_.size());
        for (Index i = 0; i < p.size(); ++i) p[i] = g[i] < 0.0 ? upper_[i] : lower_[i];
        return p;
    }

    bool contains_impl(const Vector& x, double tol) const override
    {
        return ((x - lower_).array() >= -tol).all() && ((upper_ - x).array() >= -tol).all();
    }

private:
    Vector lower_;
    Vector upper_;
};

// -----------------------------------------------------------------------

class L2Ball final : public FeasibleSet {
public:
    L2Ball(double radius, Vector center) : radius_(radius), center_(std::move(center))
    {
        if (!(radius_ > 0.0) || !std::isfinite(radius_)) throw DomainError("l2 ball: radius must be > 0");
        if (center_.size() < 1) throw DomainError("l2 ball: empty center");
        detail::require_finite(center_, "l2 ball center");
    }

    double radius() const { return radius_; }
    const Vector& center() const { return center_; }

    Index dimension() const override { return center_.size(); }
    std::string type_name() const override { return "l2"; }
    double diameter() const override { return 2.0 * radius_; }

    Vector sample_impl(Rng& rng) const override
    {
        Vector dir = detail::gaussian_direction(center_.size(), rng);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double r = radius_ * std::pow(unif(rng), 1.0 / static_cast<double>(center_.size()));
        return center_ + r * dir;
    }

    std::pair<Vector, Vector> bounding_box() const override
    {
        return {center_.array() - radius_, center_.array() + radius_};
    }

protected:
    Vector lmo_impl(const Vector& g) const override
    {
        double gn = g.norm();
        if (gn == 0.0) return center_;
        return center_ - (radius_ / gn) * g;
    }

    bool contains_impl(const Vector& x, double tol) const override
    {
        return (x - center_).norm() <= radius_ + tol;
    }

private:
    double radius_;
    Vector center_;
};

// -----------------------------------------------------------------------

/*
 * Cross-polytope {x : ||x - c||_1 <= r}. Its vertices are c +- r e_i, ordered
 * (+e_0, -e_0, +e_1, -e_1, ...) for tie-breaking.
 */
class L1Ball final : public FeasibleSet {
public:
    L1Ball(double radius, Vector center) : radius_(radius), center_(std::move(center))
    {
        if (!(radius_ > 0.0) || !std::isfinite(radius_)) throw DomainError("l1 ball: radius must be > 0");
        if (center_.size() < 1) throw DomainError("l1 ball: empty center");
        detail::require_finite(center_, "l1 ball center");
    }

    double radius() const { return radius_; }
    const Vector& center() const { return center_; }

    Index dimension() const override { return center_.size(); }
    std::string type_name() const override { return "l1"; }
    double diameter() const override { return 2.0 * radius_; }

    // Uniform on the ball: signed Dirichlet(1,...,1) weights with one slack.
    Vector sample_impl(Rng& rng) const override
    {
        const Index n = center_.size();
        Vector e = detail::exponential_draws(n + 1, rng);
        std::bernoulli_distribution coin(0.5);
        Vector x(n);
        for (Index i = 0; i < n; ++i) x[i] = (coin(rng) ? 1.0 : -1.0) * e[i];
        return center_ + (radius_ / e.sum()) * x;
    }

    std::pair<Vector, Vector> bounding_box() const override
    {
        return {center_.array() - radius_, center_.array() + radius_};
    }

protected:
    Vector lmo_impl(const Vector& g) const override
    {
        Index best = 0;
        for (Index i = 1; i < g.size(); ++i) {
            if (std::abs(g[i]) > std::abs(g[best])) best = i;
        }
        Vector p = center_;
        p[best] += g[best] > 0.0 ? -radius_ : radius_;
        return p;
    }

    // Residual of the l1 constraint; it bounds the Euclidean distance from above.
    bool contains_impl(const Vector& x, double tol) const override
    {
        return (x - center_).lpNorm<1>() <= radius_ + tol;
    }

private:
    double radius_;
    Vector center_;
};

// -----------------------------------------------------------------------

/// Convex hull of a finite list of vertices (stored as matrix columns).
class VertexPolytope final : public FeasibleSet {
public:
    explicit VertexPolytope(Matrix vertices) : vertices_(std::move(vertices))
    {
        if (vertices_.cols() < 1 || vertices_.rows() < 1) {
            throw DomainError("polytope: need at least one vertex");
        }
        if (!vertices_.allFinite()) throw DomainError("polytope: non-finite vertex");
        diameter_ = 0.0;
        for (Index i = 0; i < vertices_.cols(); ++i) {
            for (Index j = i + 1; j < vertices_.cols(); ++j) {
                diameter_ = std::max(diameter_, (vertices_.col(i) - vertices_.col(j)).norm());
            }
        }
    }

    explicit VertexPolytope(const std::vector<Vector>& vertices)
        : VertexPolytope(stack(vertices)) {}

    const Matrix& vertices() const { return vertices_; }
    Index num_vertices() const { return vertices_.cols(); }

    Index dimension() const override { return vertices_.rows(); }
    std::string type_name() const override { return "polytope"; }
    double diameter() const override { return diameter_; }

    Vector sample_impl(Rng& rng) const override
    {
        Vector w = detail::exponential_draws(vertices_.cols(), rng);
        return vertices_ * (w / w.sum());
    }

    std::pair<Vector, Vector> bounding_box() const override
    {
        return {vertices_.rowwise().minCoeff(), vertices_.rowwise().maxCoeff()};
    }

    /// Index of the vertex returned by lmo(g).
    Index lmo_index(const Vector& g) const
    {
        detail::require_dim(g.size(), dimension(), "lmo");
        Index best = 0;
        double best_val = g.dot(vertices_.col(0));
        for (Index i = 1; i < vertices_.cols(); ++i) {
            double v = g.dot(vertices_.col(i));
            if (v < best_val) {
                best_val = v;
                best = i;
            }
        }
        return best;
    }

protected:
    Vector lmo_impl(const Vector& g) const override { return vertices_.col(lmo_index(g)); }

    /*
     * Membership by minimizing 0.5*||V w - x||^2 over the weight simplex with
     * away-step conditional-gradient iterations (exact line search), which
     * converge linearly on this problem. The duality gap bounds the squared
     * distance from below, so the loop usually decides early.
     */
    bool contains_impl(const Vector& x, double tol) const override
    {
        const Index m = vertices_.cols();
        for (Index i = 0; i < m; ++i) {
            if ((vertices_.col(i) - x).norm() <= tol) return true;
        }
        const double tol_sq = 0.5 * tol * tol;
        const double scale = std::max(1.0, std::max(vertices_.cwiseAbs().maxCoeff(), x.cwiseAbs().maxCoeff()));
        Vector w = Vector::Constant(m, 1.0 / static_cast<double>(m));
        Vector y = vertices_ * w;
        constexpr int max_iters = 20000;
        for (int it = 0; it < max_iters; ++it) {
            const Vector r = y - x;
            const double f = 0.5 * r.squaredNorm();
            if (f <= tol_sq) return true;
            const Vector grad = vertices_.transpose() * r;
            const double gw = grad.dot(w);
            Index s = 0, a = -1;
            for (Index i = 1; i < m; ++i) {
                if (grad[i] < grad[s]) s = i;
            }
            for (Index i = 0; i < m; ++i) {
                if (w[i] > 0.0 && (a < 0 || grad[i] > grad[a])) a = i;
            }
            const double fw_gap = grad[s] - gw;
            // Slack covers rounding in the gap near the boundary.
            if (f + fw_gap > tol_sq + 1e-10 * scale * r.norm()) return false;
            const double away_gap = gw - grad[a];
            Vector d;
            double max_step;
            bool toward = fw_gap <= away_gap;
            if (toward) {
                d = vertices_.col(s) - y;
                max_step = 1.0;
            } else {
                d = y - vertices_.col(a);
                max_step = w[a] / (1.0 - w[a]);
            }
            const double dd = d.squaredNorm();
            if (dd == 0.0 || !(max_step > 0.0)) break;
            const double step = std::clamp(-r.dot(d) / dd, 0.0, max_step);
            if (step == 0.0) break;
            if (toward) {
                w *= (1.0 - step);
                w[s] += step;
            } else {
                w *= (1.0 + step);
                w[a] -= step;
                if (step == max_step) w[a] = 0.0;
            }
            y += step * d;
        }
        return (y - x).norm() <= std::max(tol, 1e-9 * scale);
    }

private:
    static Matrix stack(const std::vector<Vector>& vertices)
    {
        if (vertices.empty()) throw DomainError("polytope: need at least one vertex");
        Matrix m(vertices.front().size(), static_cast<Index>(vertices.size()));
        for (std::size_t j = 0; j < vertices.size(); ++j) {
            detail::require_dim(vertices[j].size(), m.rows(), "polytope vertex");
            m.col(static_cast<Index>(j)) = vertices[j];
        }
        return m;
    }

    Matrix vertices_;
    double diameter_ = 0.0;
};

} // namespace starfw
