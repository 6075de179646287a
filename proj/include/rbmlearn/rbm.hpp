#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "rbmlearn/types.hpp"

namespace rbmlearn {

/// Restricted Boltzmann machine over ±1 visible and hidden spins:
///   P(x, h) ∝ exp(<x, W h> + <b_vis, x> + <b_hid, h>).
template <typename Scalar>
struct BasicRbm {
  Matrix<Scalar> weights;       // n_visible x n_hidden
  Vector<Scalar> visible_bias;  // n_visible
  Vector<Scalar> hidden_bias;   // n_hidden

  BasicRbm() = default;

  BasicRbm(Matrix<Scalar> w, Vector<Scalar> b_vis, Vector<Scalar> b_hid)
      : weights(std::move(w)), visible_bias(std::move(b_vis)), hidden_bias(std::move(b_hid)) {
    validate();
  }

  /// Zero model with the given shape.
  static BasicRbm zeros(int n_visible, int n_hidden) {
    return BasicRbm(Matrix<Scalar>::Zero(n_visible, n_hidden), Vector<Scalar>::Zero(n_visible),
                    Vector<Scalar>::Zero(n_hidden));
  }

  int n_visible() const { return static_cast<int>(weights.rows()); }
  int n_hidden() const { return static_cast<int>(weights.cols()); }

  void validate() const {
    if (weights.rows() < 1) throw std::invalid_argument("rbm: n_visible must be >= 1");
    if (visible_bias.size() != weights.rows() || hidden_bias.size() != weights.cols())
      throw std::invalid_argument("rbm: bias dimensions do not match weight matrix");
    if (!weights.allFinite() || !visible_bias.allFinite() || !hidden_bias.allFinite())
      throw std::invalid_argument("rbm: non-finite parameter");
  }

  template <typename NewScalar>
  BasicRbm<NewScalar> cast() const {
    return BasicRbm<NewScalar>(weights.template cast<NewScalar>(),
                               visible_bias.template cast<NewScalar>(),
                               hidden_bias.template cast<NewScalar>());
  }
};

using Rbm = BasicRbm<double>;

/// Index of the activation family member; β ∈ [0, 1].
struct FBetaParam {
  double beta = 0.0;

  explicit FBetaParam(double b) : beta(b) {
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("f_beta: beta must lie in [0, 1]");
  }
};

/// Below this β the activation is evaluated as its β → 0 limit, tanh.
inline constexpr double kSmallBeta = 1e-8;

/// f_β(x) = atanh(β tanh x) / β, interpolating tanh (β = 0) and the identity (β = 1).
template <typename Scalar>
Scalar f_beta(Scalar beta, Scalar x) {
  using std::abs;
  using std::atanh;
  using std::exp;
  using std::log;
  using std::tanh;
  if (beta < Scalar(kSmallBeta)) return tanh(x);
  if (beta <= Scalar(0.5)) return atanh(beta * tanh(x)) / beta;
  // 1 - β tanh(x) cancels for large |x| and β near 1; use the exponential form.
  const Scalar ax = abs(x);
  const Scalar u = exp(Scalar(-2) * ax);
  const Scalar value =
      (log((1 + beta) + (1 - beta) * u) - log((1 - beta) + (1 + beta) * u)) / (2 * beta);
  return x < 0 ? -value : value;
}

inline double f_beta_eval(FBetaParam p, double x) { return f_beta(p.beta, x); }

/// Copy of `x_rest` with spin `xi` inserted at position i.
template <typename Derived>
SpinVector insert_spin(const Eigen::MatrixBase<Derived>& x_rest, int i, int xi) {
  const auto n = x_rest.size() + 1;
  SpinVector x(n);
  for (Eigen::Index k = 0, r = 0; k < n; ++k)
    x(k) = (k == i) ? static_cast<std::int8_t>(xi) : static_cast<std::int8_t>(x_rest(r++));
  return x;
}

/// Bayes-optimal prediction E[X_i | X_{~i} = x_rest], evaluated as the two-layer
/// network with f_β hidden activations, β_ij = |tanh W_ij|.
template <typename Scalar, typename Derived>
Scalar conditional_mean(const BasicRbm<Scalar>& model, int i, const Eigen::MatrixBase<Derived>& x_rest) {
  using std::abs;
  using std::tanh;
  const int n = model.n_visible();
  if (i < 0 || i >= n) throw std::out_of_range("conditional_mean: visible index out of range");
  if (x_rest.size() != n - 1) throw std::invalid_argument("conditional_mean: x_rest has wrong length");
  Scalar outer = model.visible_bias(i);
  for (int j = 0; j < model.n_hidden(); ++j) {
    Scalar field = model.hidden_bias(j);
    for (int k = 0, r = 0; k < n; ++k) {
      if (k == i) continue;
      field += model.weights(k, j) * Scalar(x_rest(r++));
    }
    const Scalar t = tanh(model.weights(i, j));
    outer += t * f_beta(abs(t), field);
  }
  return tanh(outer);
}

/// Same as conditional_mean, taking a full-length configuration and ignoring x_i.
template <typename Scalar, typename Derived>
Scalar conditional_mean_full(const BasicRbm<Scalar>& model, int i, const Eigen::MatrixBase<Derived>& x) {
  const int n = model.n_visible();
  if (i < 0 || i >= n) throw std::out_of_range("conditional_mean: visible index out of range");
  SpinVector rest(n - 1);
  for (int k = 0, r = 0; k < n; ++k)
    if (k != i) rest(r++) = static_cast<std::int8_t>(x(k));
  return conditional_mean(model, i, rest);
}

struct NormBounds {
  double lambda1 = 0.0;      // max_i Σ_j |tanh W_ij| + |b_vis_i|
  double lambda2 = 0.0;      // max column ℓ1 norm of W
  double field_bound = 0.0;  // max_i Σ_j |W_ij| + |b_vis_i|, bounds |atanh E[X_i | X_~i]|
};

template <typename Scalar>
NormBounds norm_bounds(const BasicRbm<Scalar>& model) {
  NormBounds out;
  for (int i = 0; i < model.n_visible(); ++i) {
    const Scalar row = model.weights.row(i).array().tanh().abs().sum() + std::abs(model.visible_bias(i));
    out.lambda1 = std::max(out.lambda1, static_cast<double>(row));
    const Scalar raw = model.weights.row(i).cwiseAbs().sum() + std::abs(model.visible_bias(i));
    out.field_bound = std::max(out.field_bound, static_cast<double>(raw));
  }
  for (int j = 0; j < model.n_hidden(); ++j)
    out.lambda2 = std::max(out.lambda2, static_cast<double>(model.weights.col(j).cwiseAbs().sum()));
  return out;
}

/// Lower bound (1 - tanh λ1)^d on δ_P(d), the worst ratio of a d-coordinate
/// marginal to the uniform one.
inline double min_marginal_bound(const NormBounds& bounds, int d) {
  if (d < 0) throw std::invalid_argument("min_marginal_bound: d must be >= 0");
  return std::pow(1.0 - std::tanh(bounds.lambda1), d);
}

/// Clip level for conditional-mean estimates. λ1 alone can sit below the true
/// |E[X_i | X_~i]|, so the larger of λ1 and the raw field bound is used.
inline double clip_level(const NormBounds& bounds) { return std::tanh(std::max(bounds.lambda1, bounds.field_bound)); }

/// Two-layer tanh network g(x) = tanh(u0 + Σ_j u_j tanh(c_j + <M_j, x>)).
struct TanhNetwork {
  double top_bias = 0.0;
  Vector<double> top_weights;     // T
  Vector<double> hidden_biases;   // T
  Matrix<double> hidden_weights;  // T x n

  int inputs() const { return static_cast<int>(hidden_weights.cols()); }
  int width() const { return static_cast<int>(top_weights.size()); }

  template <typename Derived>
  double operator()(const Eigen::MatrixBase<Derived>& x) const {
    const Vector<double> pre = hidden_biases + hidden_weights * x.template cast<double>();
    return std::tanh(top_bias + top_weights.dot(pre.array().tanh().matrix()));
  }
};

struct EmbeddedNetwork {
  Rbm model;
  int target = 0;  // visible index whose conditional mean realizes the network
};

inline constexpr int kDefaultReplication = 64;

/// Embeds a tanh network as the Bayes predictor of one visible unit: each of the
/// T network units is replicated K times as a hidden unit with coupling u_j / K
/// to the target and weights M_j to the inputs. Inputs occupy visible indices
/// 0..n-1; the target is index n.
inline EmbeddedNetwork rbm_from_tanh_network(const TanhNetwork& net, int replication = kDefaultReplication) {
  if (replication < 1) throw std::invalid_argument("rbm_from_tanh_network: K must be >= 1");
  const int n = net.inputs();
  const int t = net.width();
  if (net.hidden_biases.size() != t || net.hidden_weights.rows() != t)
    throw std::invalid_argument("rbm_from_tanh_network: inconsistent network dimensions");
  Rbm model = Rbm::zeros(n + 1, replication * t);
  model.visible_bias(n) = net.top_bias;
  for (int k = 0; k < replication; ++k) {
    for (int j = 0; j < t; ++j) {
      const int h = k * t + j;
      model.weights.col(h).head(n) = net.hidden_weights.row(j).transpose();
      model.weights(n, h) = net.top_weights(j) / replication;
      model.hidden_bias(h) = net.hidden_biases(j);
    }
  }
  model.validate();
  return {std::move(model), n};
}

/// sup over x ∈ {±1}^n of |E[X_target | x] - g(x)| for the embedding with K replicas.
double embedding_deviation(const TanhNetwork& net, int replication);

}  // namespace rbmlearn
