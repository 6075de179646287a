#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "rbmlearn/dataset.hpp"
#include "rbmlearn/monomials.hpp"
#include "rbmlearn/rbm.hpp"
#include "rbmlearn/types.hpp"

namespace rbmlearn {

/// ℓ(v, y) = log(1 + e^{-2vy}).
inline double logistic_loss(double v, int y) {
  const double z = -2.0 * v * y;
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

/// ∂ℓ/∂v = -2y e^{-2vy} / (1 + e^{-2vy}).
inline double logistic_grad(double v, int y) {
  const double z = 2.0 * v * y;
  return -2.0 * y / (1.0 + std::exp(z));
}

/// ∂²ℓ/∂v² = 2 / (1 + cosh 2v).
inline double logistic_curvature(double v) { return 2.0 / (1.0 + std::cosh(2.0 * v)); }

enum class Solver {
  kAcceleratedProjected,   // FISTA with ℓ1-ball projection, backtracking and restart
  kExponentiatedGradient,  // EG on the 2p-simplex scaled by R, averaged iterates
};

Solver parse_solver(const std::string& name);
std::string solver_name(Solver s);

struct RegressionConfig {
  int degree = 2;
  double radius = 10.0;  // ℓ1 budget R over all coefficients, constant included
  int max_iters = 20000;
  double tol = 1e-6;     // target duality gap
  std::uint64_t seed = 0;
  Solver solver = Solver::kAcceleratedProjected;

  void validate() const;
};

/// The budget that contains the surrogate of every (λ1, λ2)-bounded node
/// predictor at degree D: |b| <= λ1, Σ_j |tanh W_ij| <= λ1, ‖W_j‖₁ <= λ2.
double radius_from_bounds(const NormBounds& bounds, int degree);

/// 4R sqrt(2 log(2p)/m) + 2R sqrt(2 log(2/δ)/m).
double excess_loss_bound(double radius, double m, double p, double delta);

/// Weighted logistic problem: row r carries weight_plus(r) copies with label
/// +1 and weight_minus(r) copies with label -1.
struct WeightedDesign {
  Matrix<double> features;  // rows x p, entries in [-1, 1]
  Vector<double> weight_plus;
  Vector<double> weight_minus;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }
  double total_weight() const { return weight_plus.sum() + weight_minus.sum(); }
};

struct FitResult {
  Vector<double> coeffs;
  double loss = 0.0;       // weighted mean logistic loss at coeffs
  double gap = 0.0;        // ⟨∇L, w⟩ + R ‖∇L‖∞, bounds loss - min over the ball
  int iterations = 0;
  bool converged = false;  // gap <= tol, or stationary within the ball
  bool degenerate = false; // single-label data; constant predictor returned
};

/// Weighted mean loss, gradient and duality gap at w.
double weighted_loss(const WeightedDesign& d, const Vector<double>& w, Vector<double>* grad = nullptr);
double duality_gap(const Vector<double>& grad, const Vector<double>& w, double radius);

/// Euclidean projection onto {w : ‖w‖₁ <= R}.
Vector<double> project_l1_ball(const Vector<double>& v, double radius);

/// min over ‖w‖₁ <= R of the weighted mean logistic loss. Column 0 is taken to
/// be the constant feature when the single-label fallback applies.
FitResult fit_weighted(const WeightedDesign& design, const RegressionConfig& cfg);

/// min over ‖w‖₁ <= R of (1/m) Σ ℓ(⟨w, φ_k⟩, y_k).
FitResult fit_l1_logistic(const Matrix<double>& features, const SpinVector& labels, const RegressionConfig& cfg);

/// Monomial design over `columns` of a pattern table; subsets refer to
/// positions in `columns`.
WeightedDesign design_from_patterns(const PatternTable& table, const MonomialBasis& basis);

struct NetworkPredictor {
  SparsePolynomial poly;  // over the global coordinates
  double loss = 0.0;      // held-in (training) loss
  FitResult fit;
};

/// Fits X_target from the monomials of degree <= D over every coordinate not
/// in `excluded` and not equal to target.
NetworkPredictor learn_network_predictor(const SpinDataset& data, int target, const Subset& excluded,
                                         const RegressionConfig& cfg);

/// Same fit from an already compressed table whose patterns are the given
/// global columns.
NetworkPredictor fit_pattern_predictor(const PatternTable& table, const Subset& columns, int n,
                                       const RegressionConfig& cfg);

/// Mean logistic loss of a predictor for X_target on a dataset.
double predictor_loss(const SparsePolynomial& poly, const SpinDataset& data, int target);
/// Population loss under an exact pmf over {±1}^n.
double predictor_loss(const SparsePolynomial& poly, const Vector<double>& pmf, int target);

/// Coordinates 0..n-1 other than target and the excluded ones.
Subset predictor_columns(int n, int target, const Subset& excluded);

}  // namespace rbmlearn
