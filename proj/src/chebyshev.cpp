#include "rbmlearn/chebyshev.hpp"

#include <algorithm>
#include <cmath>

namespace rbmlearn {

Vector<double> chebyshev_coefficients(FBetaParam p, const IntervalSpec& iv, int degree) {
  if (degree < 0) throw std::invalid_argument("best_poly_approx: degree must be >= 0");
  const int nodes = 4 * (degree + 1);
  Vector<double> c = Vector<double>::Zero(degree + 1);
  for (int k = 0; k < nodes; ++k) {
    const double theta = M_PI * (k + 0.5) / nodes;
    const double f = f_beta(p.beta, iv.half_width * std::cos(theta) + iv.center);
    // T_j(cos θ) = cos(jθ)
    for (int j = 0; j <= degree; ++j) c(j) += f * std::cos(j * theta);
  }
  c *= 2.0 / nodes;
  c(0) *= 0.5;
  return c;
}

Polynomial1D chebyshev_to_power(const Vector<double>& cheb) {
  const int d = static_cast<int>(cheb.size()) - 1;
  Polynomial1D out{Vector<double>::Zero(d + 1)};
  if (d < 0) return out;
  // Three-term recurrence on power-basis representations of T_j.
  Vector<double> prev = Vector<double>::Zero(d + 1), cur = Vector<double>::Zero(d + 1);
  prev(0) = 1.0;  // T_0
  out.coeffs += cheb(0) * prev;
  if (d == 0) return out;
  cur(1) = 1.0;  // T_1
  out.coeffs += cheb(1) * cur;
  for (int j = 2; j <= d; ++j) {
    Vector<double> next = -prev;
    for (int k = 0; k < d; ++k) next(k + 1) += 2.0 * cur(k);
    out.coeffs += cheb(j) * next;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return out;
}

Polynomial1D best_poly_approx(FBetaParam p, const IntervalSpec& iv, int degree) {
  return chebyshev_to_power(chebyshev_coefficients(p, iv, degree));
}

double grid_sup_error(FBetaParam p, const IntervalSpec& iv, const Polynomial1D& q, int points) {
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    const double t = -1.0 + 2.0 * k / (points - 1);
    worst = std::max(worst, std::abs(f_beta(p.beta, iv.half_width * t + iv.center) - q(t)));
  }
  return worst;
}

double grid_sup_norm(const Polynomial1D& q, int points) {
  double worst = 0.0;
  for (int k = 0; k < points; ++k) worst = std::max(worst, std::abs(q(-1.0 + 2.0 * k / (points - 1))));
  return worst;
}

DegreeChoice choose_degree(double lambda, double w1, double eps, int max_degree) {
  if (!(eps > 0.0)) throw std::invalid_argument("choose_degree: eps must be positive");
  if (!(lambda >= 2.0)) throw std::invalid_argument("choose_degree: lambda must be >= 2");
  if (w1 < 0.0) throw std::invalid_argument("choose_degree: w1 must be non-negative");
  const double scale = 8.0 * w1 * (lambda + 2.0 * lambda * lambda);
  const double ratio = 1.0 + 2.0 / lambda;
  for (int d = 0; d <= max_degree; ++d)
    if (scale / std::pow(ratio, d) <= eps / 2.0) return {d, true};
  return {max_degree, false};
}

double l1_budget(double b1_abs, const Vector<double>& w_abs, const Vector<double>& col_norms, int degree) {
  if (w_abs.size() != col_norms.size()) throw std::invalid_argument("l1_budget: size mismatch");
  if (degree < 0) throw std::invalid_argument("l1_budget: degree must be >= 0");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < w_abs.size(); ++j)
    sum += std::abs(w_abs(j)) * std::pow(1.0 + std::abs(col_norms(j)), degree + 1);
  return std::abs(b1_abs) + std::sqrt(degree + 1.0) * std::pow(4.0 * M_E, degree + 1) * sum;
}

}  // namespace rbmlearn
