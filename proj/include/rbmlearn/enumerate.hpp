#pragma once

// Brute-force oracles over the hypercube. Everything here is exact up to
// floating-point rounding and is meant for small models and verification.

#include <cmath>
#include <cstdint>
#include <limits>

#include "rbmlearn/rbm.hpp"

namespace rbmlearn {

inline constexpr int kMaxJointEnumeration = 24;   // n_visible + n_hidden for exact pmfs
inline constexpr int kMaxHiddenEnumeration = 20;  // n_hidden for the conditional oracle

/// Streaming log-sum-exp with a running maximum.
template <typename Scalar>
class LogSumExp {
 public:
  void add(Scalar v) {
    using std::exp;
    if (v <= max_) {
      sum_ += exp(v - max_);
    } else {
      sum_ = sum_ * exp(max_ - v) + Scalar(1);
      max_ = v;
    }
  }
  Scalar value() const {
    using std::log;
    return max_ + log(sum_);
  }

 private:
  Scalar max_ = -std::numeric_limits<Scalar>::infinity();
  Scalar sum_ = 0;
};

inline SpinVector config_spins(std::uint64_t config, int n) {
  SpinVector x(n);
  for (int k = 0; k < n; ++k) x(k) = static_cast<std::int8_t>(spin_at(config, k));
  return x;
}

template <typename Derived>
std::uint64_t config_index(const Eigen::MatrixBase<Derived>& x) {
  std::uint64_t idx = 0;
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (x(k) < 0) idx |= (std::uint64_t{1} << k);
  return idx;
}

/// E[X_i | X_{~i} = x_rest] by direct summation of the joint law over X_i and
/// every hidden configuration.
template <typename Scalar, typename Derived>
Scalar conditional_mean_oracle(const BasicRbm<Scalar>& model, int i, const Eigen::MatrixBase<Derived>& x_rest) {
  const int n = model.n_visible();
  const int nh = model.n_hidden();
  if (i < 0 || i >= n) throw std::out_of_range("conditional_mean_oracle: visible index out of range");
  if (x_rest.size() != n - 1) throw std::invalid_argument("conditional_mean_oracle: x_rest has wrong length");
  if (nh > kMaxHiddenEnumeration) throw CapExceeded("conditional_mean_oracle: too many hidden units to enumerate");

  Vector<Scalar> field = model.hidden_bias;
  for (int k = 0, r = 0; k < n; ++k) {
    if (k == i) continue;
    field += model.weights.row(k).transpose() * Scalar(x_rest(r++));
  }
  LogSumExp<Scalar> plus, minus;
  const std::uint64_t states = std::uint64_t{1} << nh;
  for (std::uint64_t hm = 0; hm < states; ++hm) {
    Scalar hidden_term = 0;
    Scalar coupling = model.visible_bias(i);
    for (int j = 0; j < nh; ++j) {
      const int h = spin_at(hm, j);
      hidden_term += field(j) * Scalar(h);
      coupling += model.weights(i, j) * Scalar(h);
    }
    plus.add(hidden_term + coupling);
    minus.add(hidden_term - coupling);
  }
  using std::tanh;
  // P(+)/(P(+)+P(-)) - P(-)/(...) = tanh((log P+ - log P-)/2)
  return tanh((plus.value() - minus.value()) / 2);
}

/// Unnormalized log marginal of the visible configuration, Σ_h summed in
/// closed form: <b_vis, x> + Σ_j log 2cosh(b_hid_j + <W_j, x>).
template <typename Scalar, typename Derived>
Scalar visible_log_potential(const BasicRbm<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  using std::abs;
  using std::exp;
  using std::log;
  const Vector<Scalar> xs = x.template cast<Scalar>();
  const Vector<Scalar> field = model.hidden_bias + model.weights.transpose() * xs;
  Scalar out = model.visible_bias.dot(xs);
  for (Eigen::Index j = 0; j < field.size(); ++j) {
    const Scalar a = abs(field(j));
    out += a + log(Scalar(1) + exp(Scalar(-2) * a));  // log 2cosh(a)
  }
  return out;
}

/// Normalizes a table of log weights into probabilities.
template <typename Scalar>
Vector<Scalar> normalize_log_table(const Vector<Scalar>& log_weights) {
  LogSumExp<Scalar> lse;
  for (Eigen::Index k = 0; k < log_weights.size(); ++k) lse.add(log_weights(k));
  const Scalar log_z = lse.value();
  return (log_weights.array() - log_z).exp().matrix();
}

/// Exact visible pmf by enumerating every (x, h) pair of the joint law.
template <typename Scalar>
Vector<Scalar> exact_visible_pmf(const BasicRbm<Scalar>& model) {
  const int n = model.n_visible();
  const int nh = model.n_hidden();
  if (n + nh > kMaxJointEnumeration) throw CapExceeded("exact_visible_pmf: n_visible + n_hidden exceeds 24");
  const std::uint64_t vis_states = std::uint64_t{1} << n;
  const std::uint64_t hid_states = std::uint64_t{1} << nh;
  Vector<Scalar> log_weights(static_cast<Eigen::Index>(vis_states));
  for (std::uint64_t xm = 0; xm < vis_states; ++xm) {
    const SpinVector x = config_spins(xm, n);
    const Vector<Scalar> xs = x.cast<Scalar>();
    const Vector<Scalar> field = model.hidden_bias + model.weights.transpose() * xs;
    // Gray-code walk over h starting from all +1.
    Scalar pot = field.sum();
    std::uint64_t h_mask = 0;
    LogSumExp<Scalar> lse;
    lse.add(pot);
    for (std::uint64_t g = 1; g < hid_states; ++g) {
      const int j = __builtin_ctzll(g);
      const int before = spin_at(h_mask, j);
      pot -= Scalar(2 * before) * field(j);
      h_mask ^= (std::uint64_t{1} << j);
      lse.add(pot);
    }
    log_weights(static_cast<Eigen::Index>(xm)) = model.visible_bias.dot(xs) + lse.value();
  }
  return normalize_log_table(log_weights);
}

/// Exact visible pmf with hidden units summed in closed form; only the
/// visible layer is enumerated.
template <typename Scalar>
Vector<Scalar> marginal_visible_pmf(const BasicRbm<Scalar>& model) {
  const int n = model.n_visible();
  if (n > kMaxJointEnumeration) throw CapExceeded("marginal_visible_pmf: n_visible exceeds 24");
  const std::uint64_t states = std::uint64_t{1} << n;
  Vector<Scalar> log_weights(static_cast<Eigen::Index>(states));
  for (std::uint64_t xm = 0; xm < states; ++xm)
    log_weights(static_cast<Eigen::Index>(xm)) = visible_log_potential(model, config_spins(xm, n));
  return normalize_log_table(log_weights);
}

/// Number of coordinates of a pmf table of size 2^n.
template <typename Scalar>
int table_dimension(const Vector<Scalar>& pmf) {
  const auto size = static_cast<std::uint64_t>(pmf.size());
  if (size == 0 || (size & (size - 1)) != 0) throw std::invalid_argument("pmf table size is not a power of two");
  return __builtin_ctzll(size);
}

/// E_P[X_S] for a pmf table.
template <typename Scalar>
Scalar exact_moment(const Vector<Scalar>& pmf, std::uint64_t subset_mask) {
  Scalar out = 0;
  for (Eigen::Index k = 0; k < pmf.size(); ++k)
    out += pmf(k) * Scalar(parity_sign(static_cast<std::uint64_t>(k) & subset_mask));
  return out;
}

/// Exact E[X_i | X_cond = cell] for every cell of the conditioning subset. Cell
/// bit b set <=> x_{cond[b]} = -1. Cells of zero probability map to 0.
template <typename Scalar>
Vector<Scalar> exact_conditional_table(const Vector<Scalar>& pmf, int i, const Subset& cond) {
  const int k = static_cast<int>(cond.size());
  Vector<Scalar> num = Vector<Scalar>::Zero(Eigen::Index{1} << k);
  Vector<Scalar> den = Vector<Scalar>::Zero(Eigen::Index{1} << k);
  for (Eigen::Index c = 0; c < pmf.size(); ++c) {
    const auto cfg = static_cast<std::uint64_t>(c);
    std::uint64_t cell = 0;
    for (int b = 0; b < k; ++b)
      if ((cfg >> cond[b]) & 1U) cell |= (std::uint64_t{1} << b);
    num(static_cast<Eigen::Index>(cell)) += pmf(c) * Scalar(spin_at(cfg, i));
    den(static_cast<Eigen::Index>(cell)) += pmf(c);
  }
  for (Eigen::Index c = 0; c < num.size(); ++c) num(c) = den(c) > 0 ? num(c) / den(c) : Scalar(0);
  return num;
}

/// Exact E[X_i | X_{~i} = x] from a pmf table, for x given as a configuration index.
template <typename Scalar>
Scalar exact_conditional_mean(const Vector<Scalar>& pmf, int i, std::uint64_t config) {
  const std::uint64_t bit = std::uint64_t{1} << i;
  const Scalar p_plus = pmf(static_cast<Eigen::Index>(config & ~bit));
  const Scalar p_minus = pmf(static_cast<Eigen::Index>(config | bit));
  return (p_plus - p_minus) / (p_plus + p_minus);
}

}  // namespace rbmlearn
