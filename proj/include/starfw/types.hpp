#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace starfw {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

inline bool all_finite(const Vector& v) { return v.allFinite(); }

} // namespace starfw
