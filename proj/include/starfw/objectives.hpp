#pragma once

#include <starfw/errors.hpp>
#include <starfw/geometry.hpp>
#include <starfw/types.hpp>

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace starfw {

// =======================================================================
// Objectives
// =======================================================================

/*
 * Differentiable objective f: R^n -> R. Optional metadata (global minimizer,
 * optimal value, gradient Lipschitz constant on a set) feeds the audits.
 * Objectives are immutable after construction.
 */
class Objective {
public:
    virtual ~Objective() = default;

    virtual Index dimension() const = 0;
    virtual std::string type_name() const = 0;

    double value(const Vector& x) const
    {
        detail::require_dim(x.size(), dimension(), "value");
        return value_impl(x);
    }

    Vector gradient(const Vector& x) const
    {
        detail::require_dim(x.size(), dimension(), "gradient");
        return gradient_impl(x);
    }

    virtual bool has_hessian() const { return false; }

    Matrix hessian(const Vector& x) const
    {
        if (!has_hessian()) throw CapabilityError(type_name() + ": no second-order support");
        detail::require_dim(x.size(), dimension(), "hessian");
        return hessian_impl(x);
    }

    /// Checker-only objectives violate the smoothness assumption; the solver refuses them.
    virtual bool checker_only() const { return false; }

    virtual std::optional<Vector> minimizer() const { return std::nullopt; }
    virtual std::optional<double> optimal_value() const { return std::nullopt; }

    /// Trusted gradient Lipschitz constant valid on `set`, if known.
    virtual std::optional<double> lipschitz_on(const FeasibleSet& set) const
    {
        (void)set;
        return std::nullopt;
    }

protected:
    virtual double value_impl(const Vector& x) const = 0;
    virtual Vector gradient_impl(const Vector& x) const = 0;
    virtual Matrix hessian_impl(const Vector& x) const
    {
        (void)x;
        throw CapabilityError(type_name() + ": no second-order support");
    }
};

using ObjectivePtr = std::shared_ptr<const Objective>;

namespace detail {

/// Largest eigenvalue magnitude of a symmetric matrix by power iteration.
inline double power_iteration_norm(const Matrix& q, double tol = 1e-10, int max_iters = 10000)
{
    const Index n = q.rows();
    if (n == 0 || q.isZero(0.0)) return 0.0;
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
    v.normalize();
    double est = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Vector w = q * v;
        double nw = w.norm();
        if (nw == 0.0) {
            // Start vector fell into the null space; restart on a coordinate axis.
            v = Vector::Unit(n, it % n);
            continue;
        }
        double prev = est;
        est = nw;
        v = w / nw;
        if (it > 0 && std::abs(est - prev) <= tol * std::max(1.0, est)) break;
    }
    return est;
}

} // namespace detail

// -----------------------------------------------------------------------

/// f(x) = 0.5 x'Qx + b'x + c with symmetric Q.
class Quadratic final : public Objective {
public:
    Quadratic(Matrix q, Vector b, double c = 0.0,
              std::optional<Vector> minimizer = std::nullopt,
              std::optional<double> optimal_value = std::nullopt)
        : q_(std::move(q)), b_(std::move(b)), c_(c), minimizer_(std::move(minimizer))
    {
        if (q_.rows() != q_.cols()) throw DimensionError("quadratic: Q must be square");
        detail::require_dim(b_.size(), q_.rows(), "quadratic b");
        if (q_.rows() < 1) throw DimensionError("quadratic: empty Q");
        if (!q_.allFinite() || !b_.allFinite() || !std::isfinite(c_)) {
            throw DomainError("quadratic: non-finite coefficient");
        }
        double asym = (q_ - q_.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * std::max(1.0, q_.cwiseAbs().maxCoeff())) {
            throw DomainError("quadratic: Q must be symmetric");
        }
        lipschitz_ = detail::power_iteration_norm(q_);
        if (minimizer_) {
            detail::require_dim(minimizer_->size(), q_.rows(), "quadratic x_star");
            optimal_value_ = optimal_value ? *optimal_value : value_impl(*minimizer_);
        } else {
            optimal_value_ = optimal_value;
        }
    }

    const Matrix& q() const { return q_; }
    const Vector& b() const { return b_; }
    double c() const { return c_; }
    double lipschitz() const { return lipschitz_; }

    Index dimension() const override { return q_.rows(); }
    std::string type_name() const override { return "quadratic"; }
    bool has_hessian() const override { return true; }

    std::optional<Vector> minimizer() const override { return minimizer_; }
    std::optional<double> optimal_value() const override { return optimal_value_; }
    std::optional<double> lipschitz_on(const FeasibleSet&) const override { return lipschitz_; }

protected:
    double value_impl(const Vector& x) const override
    {
        return 0.5 * x.dot(q_ * x) + b_.dot(x) + c_;
    }
    Vector gradient_impl(const Vector& x) const override { return q_ * x + b_; }
    Matrix hessian_impl(const Vector&) const override { return q_; }

private:
    Matrix q_;
    Vector b_;
    double c_;
    std::optional<Vector> minimizer_;
    std::optional<double> optimal_value_;
    double lipschitz_ = 0.0;
};

/// 0.5*||x - center||^2 as a Quadratic.
inline std::shared_ptr<Quadratic> squared_distance_to_point(const Vector& center,
                                                            std::optional<Vector> minimizer = std::nullopt)
{
    const Index n = center.size();
    return std::make_shared<Quadratic>(Matrix::Identity(n, n), -center, 0.5 * center.squaredNorm(),
                                       std::move(minimizer));
}

// -----------------------------------------------------------------------

/// f(t) = |t| (1 - exp(-|t|)) on R^1. Star-convex; f'' changes sign at |t| = 2.
class AbsExp1D final : public Objective {
public:
    Index dimension() const override { return 1; }
    std::string type_name() const override { return "absexp"; }
    bool has_hessian() const override { return true; }

    std::optional<Vector> minimizer() const override { return Vector::Zero(1); }
    std::optional<double> optimal_value() const override { return 0.0; }
    // sup |f''| = f''(0) = 2.
    std::optional<double> lipschitz_on(const FeasibleSet&) const override { return 2.0; }

protected:
    double value_impl(const Vector& x) const override
    {
        double a = std::abs(x[0]);
        return a * -std::expm1(-a);
    }

    // The derivative at 0 is the common one-sided limit, 0.
    Vector gradient_impl(const Vector& x) const override
    {
        double t = x[0];
        double a = std::abs(t);
        double d = -std::expm1(-a) + a * std::exp(-a);
        Vector g(1);
        g[0] = t > 0.0 ? d : (t < 0.0 ? -d : 0.0);
        return g;
    }

    Matrix hessian_impl(const Vector& x) const override
    {
        double a = std::abs(x[0]);
        Matrix h(1, 1);
        h(0, 0) = (2.0 - a) * std::exp(-a);
        return h;
    }
};

// -----------------------------------------------------------------------

/// f(s,t) = s^2 t^2 + s^2 + t^2. Star-convex about the origin, not convex.
class QuarticCross final : public Objective {
public:
    Index dimension() const override { return 2; }
    std::string type_name() const override { return "quartic_cross"; }
    bool has_hessian() const override { return true; }

    std::optional<Vector> minimizer() const override { return Vector::Zero(2); }
    std::optional<double> optimal_value() const override { return 0.0; }

    // Spectral norm of the Hessian grows with s^2 and t^2, so the corners of
    // the bounding box give the supremum over it.
    std::optional<double> lipschitz_on(const FeasibleSet& set) const override
    {
        auto [lo, hi] = set.bounding_box();
        double s2 = std::max(lo[0] * lo[0], hi[0] * hi[0]);
        double t2 = std::max(lo[1] * lo[1], hi[1] * hi[1]);
        double diff = t2 - s2;
        return s2 + t2 + 2.0 + std::sqrt(diff * diff + 16.0 * s2 * t2);
    }

protected:
    double value_impl(const Vector& x) const override
    {
        double s = x[0], t = x[1];
        return s * s * t * t + s * s + t * t;
    }

    Vector gradient_impl(const Vector& x) const override
    {
        double s = x[0], t = x[1];
        Vector g(2);
        g << 2.0 * s * t * t + 2.0 * s, 2.0 * s * s * t + 2.0 * t;
        return g;
    }

    Matrix hessian_impl(const Vector& x) const override
    {
        double s = x[0], t = x[1];
        Matrix h(2, 2);
        h << 2.0 * t * t + 2.0, 4.0 * s * t,
             4.0 * s * t, 2.0 * s * s + 2.0;
        return h;
    }
};

// -----------------------------------------------------------------------

/*
 * Positively homogeneous, nonnegative functions minimized at the origin:
 *   lp composite   f(x) = (sum |x_i|^p)^(1/p)   (degree 1; p = 0 is the
 *                  geometric mean (prod |x_i|)^(1/n))
 *   norm power     f(x) = ||x||^r, 0 < r < 1   (degree r)
 * Checker-only: the gradient is singular at the minimizer.
 */
class HomogeneousPower final : public Objective {
public:
    enum class Kind { LpComposite, NormPower };

    static HomogeneousPower lp(double p, Index n) { return HomogeneousPower(Kind::LpComposite, p, n); }
    static HomogeneousPower norm_power(double r, Index n) { return HomogeneousPower(Kind::NormPower, r, n); }

    HomogeneousPower(Kind kind, double param, Index n) : kind_(kind), param_(param), n_(n)
    {
        if (n_ < 1) throw DimensionError("homogeneous power: n must be >= 1");
        if (!std::isfinite(param_)) throw DomainError("homogeneous power: non-finite exponent");
        if (kind_ == Kind::NormPower && !(param_ > 0.0 && param_ < 1.0)) {
            throw DomainError("norm power: r must lie in (0,1)");
        }
    }

    Kind kind() const { return kind_; }
    double exponent() const { return param_; }
    double degree() const { return kind_ == Kind::LpComposite ? 1.0 : param_; }

    Index dimension() const override { return n_; }
    std::string type_name() const override { return kind_ == Kind::LpComposite ? "pnorm" : "norm_power"; }
    bool checker_only() const override { return true; }

    std::optional<Vector> minimizer() const override { return Vector::Zero(n_); }
    std::optional<double> optimal_value() const override { return 0.0; }

protected:
    double value_impl(const Vector& x) const override
    {
        if (kind_ == Kind::NormPower) return std::pow(x.norm(), param_);
        const double p = param_;
        if (p == 0.0) {
            double log_sum = 0.0;
            for (Index i = 0; i < n_; ++i) {
                if (x[i] == 0.0) return 0.0;
                log_sum += std::log(std::abs(x[i]));
            }
            return std::exp(log_sum / static_cast<double>(n_));
        }
        if (x.isZero(0.0)) return 0.0;
        double sum = 0.0;
        for (Index i = 0; i < n_; ++i) {
            if (x[i] == 0.0) {
                if (p < 0.0) return 0.0; // sum diverges, f -> 0
                continue;
            }
            sum += std::pow(std::abs(x[i]), p);
        }
        return std::pow(sum, 1.0 / p);
    }

    Vector gradient_impl(const Vector& x) const override
    {
        if (x.isZero(0.0)) throw SingularityError(type_name() + ": gradient singular at the origin");
        if (kind_ == Kind::NormPower) {
            double nx = x.norm();
            return param_ * std::pow(nx, param_ - 2.0) * x;
        }
        const double p = param_;
        if (p <= 1.0 && (x.array() == 0.0).any()) {
            throw SingularityError("pnorm: gradient singular at a zero coordinate for p <= 1");
        }
        const double f = value_impl(x);
        Vector g(n_);
        for (Index i = 0; i < n_; ++i) {
            if (p == 0.0) {
                g[i] = f / (static_cast<double>(n_) * x[i]);
            } else if (x[i] == 0.0) {
                g[i] = 0.0;
            } else {
                double sgn = x[i] > 0.0 ? 1.0 : -1.0;
                g[i] = sgn * std::pow(std::abs(x[i]) / f, p - 1.0);
            }
        }
        return g;
    }

private:
    Kind kind_;
    double param_;
    Index n_;
};

// -----------------------------------------------------------------------
// Star-shaped unions and squared distances
// -----------------------------------------------------------------------

struct BoxMember {
    Vector lower;
    Vector upper;
};

struct BallMember {
    Vector center;
    double radius = 0.0;
};

struct SegmentMember {
    Vector a;
    Vector b;
};

using UnionMember = std::variant<BoxMember, BallMember, SegmentMember>;

/// Finite union of closed convex pieces; star-shaped about their common points.
struct StarShapedSet {
    std::vector<UnionMember> members;
};

inline Index member_dimension(const UnionMember& m)
{
    return std::visit([](const auto& v) -> Index {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, BoxMember>) return v.lower.size();
        else if constexpr (std::is_same_v<T, BallMember>) return v.center.size();
        else return v.a.size();
    }, m);
}

/// Euclidean projection onto one member. Returns x itself when x is inside.
inline Vector project(const UnionMember& m, const Vector& x)
{
    return std::visit([&](const auto& v) -> Vector {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, BoxMember>) {
            return x.cwiseMax(v.lower).cwiseMin(v.upper);
        } else if constexpr (std::is_same_v<T, BallMember>) {
            Vector r = x - v.center;
            double nr = r.norm();
            if (nr <= v.radius) return x;
            return v.center + (v.radius / nr) * r;
        } else {
            Vector ab = v.b - v.a;
            double len2 = ab.squaredNorm();
            if (x == v.a || x == v.b) return x;
            if (len2 == 0.0) return v.a;
            double t = std::clamp((x - v.a).dot(ab) / len2, 0.0, 1.0);
            return v.a + t * ab;
        }
    }, m);
}

/// Squared distance to a union and the attaining point; ties go to the lowest member index.
inline std::pair<double, Vector> distance_squared(const StarShapedSet& set, const Vector& x)
{
    if (set.members.empty()) throw CapabilityError("distance_squared: empty union");
    double best = std::numeric_limits<double>::infinity();
    Vector nearest;
    for (const auto& m : set.members) {
        detail::require_dim(x.size(), member_dimension(m), "distance_squared");
        Vector p = project(m, x);
        double d2 = (x - p).squaredNorm();
        if (d2 < best) {
            best = d2;
            nearest = std::move(p);
        }
    }
    return {best, nearest};
}

struct WeightedPiece {
    double weight = 0.0;
    StarShapedSet set;
};

/*
 * f(x) = sum_i w_i d^2(x, S_i) where each S_i is a union of boxes/balls/segments
 * that all contain the declared common points. f vanishes exactly on those
 * points, is nonnegative, and is star-convex about them.
 */
class StarShapedDistanceSum final : public Objective {
public:
    StarShapedDistanceSum(std::vector<WeightedPiece> pieces, std::vector<Vector> common_points)
        : pieces_(std::move(pieces)), common_(std::move(common_points))
    {
        if (pieces_.empty()) throw DomainError("star_distance: no pieces");
        if (common_.empty()) throw DomainError("star_distance: need at least one common point");
        n_ = common_.front().size();
        if (n_ < 1) throw DimensionError("star_distance: empty common point");
        double wsum = 0.0;
        for (const auto& piece : pieces_) {
            if (!(piece.weight >= 0.0)) throw DomainError("star_distance: negative weight");
            if (piece.set.members.empty()) throw DomainError("star_distance: empty union");
            wsum += piece.weight;
            for (const auto& m : piece.set.members) {
                detail::require_dim(member_dimension(m), n_, "star_distance member");
                for (const auto& cp : common_) {
                    detail::require_dim(cp.size(), n_, "star_distance common point");
                    if ((project(m, cp) - cp).norm() > 1e-12) {
                        throw DomainError("star_distance: a union member does not contain a common point");
                    }
                }
            }
        }
        if (std::abs(wsum - 1.0) > 1e-12 * static_cast<double>(pieces_.size())) {
            throw DomainError("star_distance: weights must sum to 1");
        }
    }

    const std::vector<WeightedPiece>& pieces() const { return pieces_; }
    const std::vector<Vector>& common_points() const { return common_; }

    Index dimension() const override { return n_; }
    std::string type_name() const override { return "star_distance"; }

    std::optional<Vector> minimizer() const override { return common_.front(); }
    std::optional<double> optimal_value() const override { return 0.0; }

protected:
    double value_impl(const Vector& x) const override
    {
        double f = 0.0;
        for (const auto& piece : pieces_) f += piece.weight * distance_squared(piece.set, x).first;
        return f;
    }

    Vector gradient_impl(const Vector& x) const override
    {
        Vector g = Vector::Zero(n_);
        for (const auto& piece : pieces_) {
            g += (2.0 * piece.weight) * (x - distance_squared(piece.set, x).second);
        }
        return g;
    }

private:
    std::vector<WeightedPiece> pieces_;
    std::vector<Vector> common_;
    Index n_ = 0;
};

} // namespace starfw
