#include "rbmlearn/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rbmlearn/chebyshev.hpp"
#include "rbmlearn/enumerate.hpp"

namespace rbmlearn {

Solver parse_solver(const std::string& name) {
  if (name == "fista" || name == "accelerated") return Solver::kAcceleratedProjected;
  if (name == "eg" || name == "exponentiated-gradient") return Solver::kExponentiatedGradient;
  throw std::invalid_argument("unknown solver '" + name + "' (expected fista or eg)");
}

std::string solver_name(Solver s) { return s == Solver::kAcceleratedProjected ? "fista" : "eg"; }

void RegressionConfig::validate() const {
  if (degree < 0) throw std::invalid_argument("regression.degree must be >= 0");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw std::invalid_argument("regression.radius must be finite and >= 0");
  if (!(tol > 0.0)) throw std::invalid_argument("regression.tol must be > 0");
  if (max_iters < 1) throw std::invalid_argument("regression.max_iters must be >= 1");
}

double radius_from_bounds(const NormBounds& bounds, int degree) {
  Vector<double> w(1), cols(1);
  w << bounds.lambda1;
  cols << bounds.lambda2;
  return l1_budget(bounds.lambda1, w, cols, degree);
}

double excess_loss_bound(double radius, double m, double p, double delta) {
  if (!(m > 0.0) || !(p >= 1.0) || !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("excess_loss_bound: need m > 0, p >= 1, 0 < delta < 1");
  return 4.0 * radius * std::sqrt(2.0 * std::log(2.0 * p) / m) + 2.0 * radius * std::sqrt(2.0 * std::log(2.0 / delta) / m);
}

double weighted_loss(const WeightedDesign& d, const Vector<double>& w, Vector<double>* grad) {
  const Vector<double> v = d.features * w;
  const double total = d.total_weight();
  double loss = 0.0;
  Vector<double> residual(v.size());
  for (Eigen::Index r = 0; r < v.size(); ++r) {
    const double wp = d.weight_plus(r), wm = d.weight_minus(r);
    loss += wp * logistic_loss(v(r), 1) + wm * logistic_loss(v(r), -1);
    residual(r) = wp * logistic_grad(v(r), 1) + wm * logistic_grad(v(r), -1);
  }
  if (grad) *grad = d.features.transpose() * residual / total;
  return loss / total;
}

double duality_gap(const Vector<double>& grad, const Vector<double>& w, double radius) {
  const double sup = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  return std::max(0.0, grad.dot(w) + radius * sup);
}

Vector<double> project_l1_ball(const Vector<double>& v, double radius) {
  if (v.lpNorm<1>() <= radius) return v;
  if (radius <= 0.0) return Vector<double>::Zero(v.size());
  std::vector<double> mu(v.data(), v.data() + v.size());
  for (double& x : mu) x = std::abs(x);
  std::sort(mu.begin(), mu.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    cumsum += mu[k];
    const double t = (cumsum - radius) / static_cast<double>(k + 1);
    if (mu[k] - t > 0.0) theta = t;
  }
  Vector<double> out(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) out(k) = std::copysign(std::max(std::abs(v(k)) - theta, 0.0), v(k));
  return out;
}

namespace {

double curvature_upper_bound(const WeightedDesign& d) {
  // Largest eigenvalue of Xᵀ C X / W by power iteration, C the row weights.
  const Vector<double> c = (d.weight_plus + d.weight_minus) / d.total_weight();
  Vector<double> q = Vector<double>::Ones(d.cols()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vector<double> next = d.features.transpose() * (c.cwiseProduct(d.features * q));
    const double norm = next.norm();
    if (norm == 0.0) return 1e-12;
    lambda = norm;
    q = next / norm;
  }
  return std::max(lambda, 1e-12);
}

constexpr Eigen::Index kNewtonMaxFeatures = 600;

/// Damped Newton from zero. Succeeds only if it reaches a stationary point
/// strictly inside the l1 ball, which is then the constrained optimum.
bool newton_interior(const WeightedDesign& d, const RegressionConfig& cfg, FitResult& out) {
  const Eigen::Index p = d.cols();
  const double total = d.total_weight();
  const Vector<double> row_weight = d.weight_plus + d.weight_minus;
  Vector<double> w = Vector<double>::Zero(p), grad;
  double loss = weighted_loss(d, w, &grad);
  for (int it = 1; it <= 100; ++it) {
    const Vector<double> v = d.features * w;
    Vector<double> c(v.size());
    for (Eigen::Index r = 0; r < v.size(); ++r) c(r) = row_weight(r) * logistic_curvature(v(r)) / total;
    Matrix<double> hess = d.features.transpose() * c.asDiagonal() * d.features;
    hess.diagonal().array() += 1e-12 * (1.0 + hess.diagonal().maxCoeff());
    const Eigen::LDLT<Matrix<double>> ldlt(hess);
    if (ldlt.info() != Eigen::Success) return false;
    const Vector<double> dir = -ldlt.solve(grad);
    const double slope = grad.dot(dir);
    if (!dir.allFinite() || !(slope < 0.0)) return false;
    double step = 1.0, next_loss = 0.0;
    Vector<double> next, next_grad;
    for (;;) {
      next = w + step * dir;
      next_loss = weighted_loss(d, next, &next_grad);
      if (next_loss <= loss + 1e-4 * step * slope) break;
      step *= 0.5;
      if (step < 1e-10) return false;
    }
    w = std::move(next);
    loss = next_loss;
    grad = std::move(next_grad);
    if (w.lpNorm<1>() >= cfg.radius) return false;
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-2 * cfg.tol) {
      out.coeffs = std::move(w);
      out.loss = loss;
      out.gap = duality_gap(grad, out.coeffs, cfg.radius);
      out.iterations = it;
      out.converged = true;
      return true;
    }
  }
  return false;
}

FitResult fit_accelerated(const WeightedDesign& d, const RegressionConfig& cfg) {
  const Eigen::Index p = d.cols();
  FitResult out;
  if (p <= kNewtonMaxFeatures && newton_interior(d, cfg, out)) return out;
  double lip = curvature_upper_bound(d);
  Vector<double> w = Vector<double>::Zero(p), y = w, grad_w, grad_y;
  double loss_w = weighted_loss(d, w, &grad_w);
  double t = 1.0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const double loss_y = weighted_loss(d, y, &grad_y);
    Vector<double> next, step;
    double loss_next = 0.0;
    Vector<double> grad_next;
    while (true) {
      next = project_l1_ball(y - grad_y / lip, cfg.radius);
      step = next - y;
      loss_next = weighted_loss(d, next, &grad_next);
      if (loss_next <= loss_y + grad_y.dot(step) + 0.5 * lip * step.squaredNorm() + 1e-15) break;
      lip *= 2.0;
    }
    const double mapping = lip * step.lpNorm<Eigen::Infinity>();
    if (step.dot(next - w) > 0.0 || loss_next > loss_w) {
      t = 1.0;
      y = next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / t_next) * (next - w);
      t = t_next;
    }
    w = std::move(next);
    loss_w = loss_next;
    grad_w = std::move(grad_next);
    out.iterations = it;
    out.gap = duality_gap(grad_w, w, cfg.radius);
    if (out.gap <= cfg.tol || mapping <= 1e-2 * cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.coeffs = std::move(w);
  out.loss = loss_w;
  out.gap = duality_gap(grad_w, out.coeffs, cfg.radius);
  return out;
}

FitResult fit_exponentiated(const WeightedDesign& d, const RegressionConfig& cfg) {
  const Eigen::Index p = d.cols();
  // u lives on the simplex over 2p coordinates; w = R (u⁺ - u⁻).
  Vector<double> log_u = Vector<double>::Zero(2 * p);
  Vector<double> avg = Vector<double>::Zero(p);
  const double feature_sup = d.features.size() ? d.features.cwiseAbs().maxCoeff() : 1.0;
  const double eta = std::sqrt(2.0 * std::log(2.0 * p) / cfg.max_iters) / (2.0 * feature_sup * cfg.radius);
  FitResult out;
  Vector<double> grad;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    Vector<double> u = (log_u.array() - log_u.maxCoeff()).exp();
    u /= u.sum();
    const Vector<double> w = cfg.radius * (u.head(p) - u.tail(p));
    avg += (w - avg) / it;
    weighted_loss(d, w, &grad);
    log_u.head(p) -= eta * cfg.radius * grad;
    log_u.tail(p) += eta * cfg.radius * grad;
    out.iterations = it;
    if (it % 100 == 0 || it == cfg.max_iters) {
      Vector<double> g_avg;
      weighted_loss(d, avg, &g_avg);
      if (duality_gap(g_avg, avg, cfg.radius) <= cfg.tol) {
        out.converged = true;
        break;
      }
    }
  }
  out.coeffs = project_l1_ball(avg, cfg.radius);
  Vector<double> g;
  out.loss = weighted_loss(d, out.coeffs, &g);
  out.gap = duality_gap(g, out.coeffs, cfg.radius);
  return out;
}

}  // namespace

FitResult fit_weighted(const WeightedDesign& design, const RegressionConfig& cfg) {
  cfg.validate();
  if (design.weight_plus.size() != design.rows() || design.weight_minus.size() != design.rows())
    throw std::invalid_argument("fit_weighted: weight vectors do not match feature rows");
  if (design.rows() == 0 || !(design.total_weight() > 0.0)) throw DegenerateData("fit_weighted: no samples");
  const Eigen::Index p = design.cols();
  const double plus = design.weight_plus.sum(), minus = design.weight_minus.sum();
  if (plus == 0.0 || minus == 0.0 || cfg.radius == 0.0 || p == 0) {
    FitResult out;
    out.coeffs = Vector<double>::Zero(p);
    out.degenerate = plus == 0.0 || minus == 0.0;
    if (out.degenerate && p > 0) {
      const double m = plus + minus;
      const double mean = std::max(0.0, 1.0 - 1.0 / m);
      out.coeffs(0) = std::copysign(std::min(std::atanh(mean), cfg.radius), plus > 0.0 ? 1.0 : -1.0);
    }
    Vector<double> g;
    out.loss = weighted_loss(design, out.coeffs, &g);
    out.gap = p ? duality_gap(g, out.coeffs, cfg.radius) : 0.0;
    out.converged = true;
    return out;
  }
  return cfg.solver == Solver::kAcceleratedProjected ? fit_accelerated(design, cfg) : fit_exponentiated(design, cfg);
}

FitResult fit_l1_logistic(const Matrix<double>& features, const SpinVector& labels, const RegressionConfig& cfg) {
  if (features.rows() != labels.size()) throw std::invalid_argument("fit_l1_logistic: feature rows != label count");
  if (features.rows() == 0) throw DegenerateData("fit_l1_logistic: m must be >= 1");
  WeightedDesign d{features, Vector<double>::Zero(labels.size()), Vector<double>::Zero(labels.size())};
  for (Eigen::Index r = 0; r < labels.size(); ++r) {
    if (labels(r) == 1) d.weight_plus(r) = 1.0;
    else if (labels(r) == -1) d.weight_minus(r) = 1.0;
    else throw std::invalid_argument("fit_l1_logistic: labels must be ±1");
  }
  return fit_weighted(d, cfg);
}

WeightedDesign design_from_patterns(const PatternTable& table, const MonomialBasis& basis) {
  return {monomial_feature_matrix(basis, table.patterns), table.weight_plus, table.weight_minus};
}

Subset predictor_columns(int n, int target, const Subset& excluded) {
  if (target < 0 || target >= n) throw std::out_of_range("predictor_columns: target out of range");
  if (std::find(excluded.begin(), excluded.end(), target) != excluded.end())
    throw std::invalid_argument("predictor_columns: target must not be excluded");
  Subset cols;
  for (int k = 0; k < n; ++k)
    if (k != target && std::find(excluded.begin(), excluded.end(), k) == excluded.end()) cols.push_back(k);
  return cols;
}

NetworkPredictor fit_pattern_predictor(const PatternTable& table, const Subset& columns, int n,
                                       const RegressionConfig& cfg) {
  if (static_cast<Eigen::Index>(columns.size()) != table.patterns.cols())
    throw std::invalid_argument("fit_pattern_predictor: column list does not match table width");
  const MonomialBasis basis(static_cast<int>(columns.size()), cfg.degree);
  NetworkPredictor out;
  out.fit = fit_weighted(design_from_patterns(table, basis), cfg);
  out.loss = out.fit.loss;
  out.poly = SparsePolynomial(n);
  for (int k = 0; k < basis.size(); ++k) {
    Subset s;
    for (int local : basis[k]) s.push_back(columns[static_cast<std::size_t>(local)]);
    std::sort(s.begin(), s.end());
    out.poly.set(std::move(s), out.fit.coeffs(k));
  }
  return out;
}

NetworkPredictor learn_network_predictor(const SpinDataset& data, int target, const Subset& excluded,
                                         const RegressionConfig& cfg) {
  if (data.m() == 0) throw DegenerateData("learn_network_predictor: dataset is empty");
  const Subset cols = predictor_columns(data.n(), target, excluded);
  return fit_pattern_predictor(compress_patterns(data, cols, target), cols, data.n(), cfg);
}

double predictor_loss(const SparsePolynomial& poly, const SpinDataset& data, int target) {
  if (data.m() == 0) throw DegenerateData("predictor_loss: dataset is empty");
  double total = 0.0;
  for (int r = 0; r < data.m(); ++r) total += logistic_loss(poly(data.samples().row(r)), data.spin(r, target));
  return total / data.m();
}

double predictor_loss(const SparsePolynomial& poly, const Vector<double>& pmf, int target) {
  const int n = table_dimension(pmf);
  double total = 0.0;
  for (std::uint64_t cfg = 0; cfg < (std::uint64_t{1} << n); ++cfg) {
    if (pmf(static_cast<Eigen::Index>(cfg)) == 0.0) continue;
    const SpinVector x = config_spins(cfg, n);
    total += pmf(static_cast<Eigen::Index>(cfg)) * logistic_loss(poly(x), spin_at(cfg, target));
  }
  return total;
}

}  // namespace rbmlearn
