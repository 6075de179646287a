#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rbmlearn {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Row-major matrix of ±1 spins, one sample per row.
using SpinMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SpinVector = Eigen::Matrix<std::int8_t, Eigen::Dynamic, 1>;

/// A sorted set of coordinate indices.
using Subset = std::vector<int>;

/// Thrown when an exact enumeration would exceed its configured size cap.
class CapExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Thrown when a dataset cannot support the requested estimate.
class DegenerateData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Hypercube configurations are indexed by bit masks: bit k set <=> x_k = -1.
inline int spin_at(std::uint64_t config, int k) { return ((config >> k) & 1U) ? -1 : 1; }

inline int parity_sign(std::uint64_t mask) { return (__builtin_popcountll(mask) & 1) ? -1 : 1; }

}  // namespace rbmlearn
