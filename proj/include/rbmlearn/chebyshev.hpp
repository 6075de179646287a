#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "rbmlearn/rbm.hpp"
#include "rbmlearn/types.hpp"

namespace rbmlearn {

/// The interval [h - R, h + R], parametrized as t -> R t + h for t in [-1, 1].
struct IntervalSpec {
  double half_width = 1.0;  // R
  double center = 0.0;      // h

  IntervalSpec(double r, double h) : half_width(r), center(h) {
    if (!(r > 0.0) || !std::isfinite(r) || !std::isfinite(h))
      throw std::invalid_argument("IntervalSpec: R must be finite and positive");
  }
};

/// Polynomial in the power basis, coeffs(k) multiplying t^k.
struct Polynomial1D {
  Vector<double> coeffs;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }

  double operator()(double t) const {
    double acc = 0.0;
    for (Eigen::Index k = coeffs.size() - 1; k >= 0; --k) acc = acc * t + coeffs(k);
    return acc;
  }
};

/// Near-best degree-D approximation of t -> f_β(R t + h) on [-1, 1] by
/// Chebyshev projection with 4(D+1) Chebyshev-Gauss nodes.
Polynomial1D best_poly_approx(FBetaParam p, const IntervalSpec& iv, int degree);

/// Chebyshev coefficients c_0..c_D of the same projection.
Vector<double> chebyshev_coefficients(FBetaParam p, const IntervalSpec& iv, int degree);

/// Chebyshev series -> power basis.
Polynomial1D chebyshev_to_power(const Vector<double>& cheb);

inline constexpr int kCertificationGrid = 2001;

/// max over an equispaced grid on [-1, 1] of |f_β(R t + h) - q(t)|.
double grid_sup_error(FBetaParam p, const IntervalSpec& iv, const Polynomial1D& q, int points = kCertificationGrid);

/// max over an equispaced grid on [-1, 1] of |q(t)|.
double grid_sup_norm(const Polynomial1D& q, int points = kCertificationGrid);

/// 4R(1 + 2R) / (1 + 1/(2R))^D, an upper bound on E_D(f_β(R x + h)) for every β and h.
inline double approx_error_bound(double r, int degree) {
  if (r < 0.0 || degree < 0) throw std::invalid_argument("approx_error_bound: need R >= 0 and D >= 0");
  if (r == 0.0) return 0.0;
  return 4.0 * r * (1.0 + 2.0 * r) / std::pow(1.0 + 1.0 / (2.0 * r), degree);
}

inline constexpr int kDefaultMaxDegree = 20;

struct DegreeChoice {
  int degree = 0;
  bool feasible = true;  // false when the cap was hit before the target was met
};

/// Smallest D with 8 w1 (λ + 2λ²) / (1 + 2/λ)^D <= eps / 2, capped at max_degree.
DegreeChoice choose_degree(double lambda, double w1, double eps, int max_degree = kDefaultMaxDegree);

/// ℓ1 radius |b1| + sqrt(D+1) (4e)^(D+1) Σ_j |w_j| (1 + ‖W_j‖₁)^(D+1) that contains
/// the polynomial surrogate of the network.
double l1_budget(double b1_abs, const Vector<double>& w_abs, const Vector<double>& col_norms, int degree);

/// Σ_k a_k² <= (D+1)(4e)^{2D} M² for a degree-D polynomial bounded by M on [-1, 1].
inline double coefficient_energy_bound(int degree, double sup_norm) {
  return (degree + 1) * std::pow(4.0 * M_E, 2.0 * degree) * sup_norm * sup_norm;
}

}  // namespace rbmlearn
