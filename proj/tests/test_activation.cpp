#include <doctest.h>

#include <cmath>

#include "rbmlearn/chebyshev.hpp"
#include "rbmlearn/monomials.hpp"

using namespace rbmlearn;

TEST_SUITE("activation-approx") {

TEST_CASE("identity activation is reproduced at degree 1") {
  const IntervalSpec iv(2.0, 0.3);
  const Polynomial1D q = best_poly_approx(FBetaParam(1.0), iv, 1);
  CHECK(q.coeffs(0) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(q.coeffs(1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(grid_sup_error(FBetaParam(1.0), iv, q) <= 1e-13);
}

TEST_CASE("degree 0 approximation of tanh on [-1, 1] is zero") {
  const IntervalSpec iv(1.0, 0.0);
  const Polynomial1D q = best_poly_approx(FBetaParam(0.0), iv, 0);
  CHECK(std::abs(q.coeffs(0)) <= 1e-15);
  CHECK(grid_sup_error(FBetaParam(0.0), iv, q) == doctest::Approx(0.76159).epsilon(1e-5));
}

TEST_CASE("reference case beta 0.5, R 2, D 15") {
  const IntervalSpec iv(2.0, 0.0);
  CHECK(grid_sup_error(FBetaParam(0.5), iv, best_poly_approx(FBetaParam(0.5), iv, 15)) <= approx_error_bound(2.0, 15));
}

TEST_CASE("error bound closed form") {
  CHECK(approx_error_bound(1.0, 10) == doctest::Approx(12.0 / std::pow(1.5, 10)).epsilon(1e-14));
  CHECK(approx_error_bound(1.0, 10) == doctest::Approx(0.20810).epsilon(1e-4));
  CHECK(approx_error_bound(1.0, 0) == doctest::Approx(12.0));
  for (double r : {0.5, 1.0, 3.0})
    CHECK(approx_error_bound(r, 8) / approx_error_bound(r, 7) == doctest::Approx(1.0 / (1.0 + 1.0 / (2.0 * r))).epsilon(1e-14));
}

TEST_CASE("certified error over a shifted grid") {
  for (double beta : {0.0, 0.5, 0.9})
    for (double h : {-1.5, 0.0, 2.0})
      for (double r : {0.5, 2.0})
        for (int d : {3, 9, 17}) {
          const IntervalSpec iv(r, h);
          CHECK(grid_sup_error(FBetaParam(beta), iv, best_poly_approx(FBetaParam(beta), iv, d)) <= 2.0 * approx_error_bound(r, d));
        }
}

TEST_CASE("derivative bound on the real line") {
  for (double beta : {0.0, 0.3, 0.7, 1.0})
    for (double x = -4.0; x <= 4.0; x += 0.01)
      for (double dx : {1e-3, 1e-2, 0.1}) {
        const double diff = std::abs(f_beta_eval(FBetaParam(beta), x + dx) - f_beta_eval(FBetaParam(beta), x));
        CHECK(diff <= 2.0 * dx + 1e-15);
      }
}

TEST_CASE("coefficient energy stays within the Sherstov bound") {
  for (double beta : {0.0, 0.5, 1.0})
    for (double r : {0.5, 1.0, 4.0})
      for (int d = 0; d <= 20; d += 4) {
        const Polynomial1D q = best_poly_approx(FBetaParam(beta), IntervalSpec(r, 0.0), d);
        CHECK(q.coeffs.squaredNorm() <= coefficient_energy_bound(d, grid_sup_norm(q)));
      }
}

TEST_CASE("chebyshev to power basis round trip") {
  Vector<double> cheb = Vector<double>::Zero(4);
  cheb(3) = 1.0;  // T3 = 4t^3 - 3t
  const Polynomial1D q = chebyshev_to_power(cheb);
  CHECK(q.coeffs(1) == doctest::Approx(-3.0));
  CHECK(q.coeffs(3) == doctest::Approx(4.0));
  CHECK(std::abs(q.coeffs(0)) + std::abs(q.coeffs(2)) <= 1e-15);
}

TEST_CASE("choose_degree") {
  CHECK(choose_degree(3.0, 0.0, 0.1).degree == 0);
  const DegreeChoice c = choose_degree(2.0, 1.0, 0.1);
  CHECK(c.degree == 11);
  CHECK(c.feasible);
  int prev = 0;
  for (double eps : {1.0, 0.1, 0.01, 1e-3}) {
    const int d = choose_degree(4.0, 2.0, eps, 60).degree;
    CHECK(d >= prev);
    prev = d;
  }
  const DegreeChoice capped = choose_degree(10.0, 5.0, 1e-6);
  CHECK(!capped.feasible);
  CHECK(capped.degree == kDefaultMaxDegree);
  CHECK_THROWS(choose_degree(2.0, 1.0, 0.0));
}

TEST_CASE("l1 budget") {
  CHECK(l1_budget(0.3, Vector<double>(), Vector<double>(), 3) == doctest::Approx(0.3));
  Vector<double> w(1), c(1);
  w << 1.0;
  c << 1.0;
  const double r = l1_budget(0.0, w, c, 1);
  CHECK(r == doctest::Approx(std::sqrt(2.0) * std::pow(4.0 * M_E, 2) * 4.0).epsilon(1e-14));
  CHECK(r == doctest::Approx(668.9).epsilon(1e-3));
  Vector<double> w2(1), c2(1);
  w2 << 1.5;
  c2 << 1.2;
  CHECK(l1_budget(0.1, w, c, 2) > l1_budget(0.0, w, c, 2));
  CHECK(l1_budget(0.0, w2, c, 2) > l1_budget(0.0, w, c, 2));
  CHECK(l1_budget(0.0, w, c2, 2) > l1_budget(0.0, w, c, 2));
  CHECK(l1_budget(0.0, w, c, 3) > l1_budget(0.0, w, c, 2));
}

TEST_CASE("monomial basis order and size") {
  const MonomialBasis b(3, 2);
  REQUIRE(b.size() == 7);
  CHECK(b[0].empty());
  CHECK(b[1] == Subset{0});
  CHECK(b[3] == Subset{2});
  CHECK(b[4] == Subset{0, 1});
  CHECK(b[6] == Subset{1, 2});
  for (int n = 0; n <= 9; ++n)
    for (int d = 0; d <= 4; ++d) {
      long long expect = 0, binom = 1;
      for (int k = 0; k <= std::min(n, d); ++k) {
        expect += binom;
        binom = binom * (n - k) / (k + 1);
      }
      CHECK(MonomialBasis(n, d).size() == expect);
      CHECK(monomial_count(n, d) == expect);
    }
}

TEST_CASE("monomial features") {
  const MonomialBasis b(3, 2);
  SpinVector x(3);
  x << 1, -1, 1;
  const Vector<double> f = monomial_features(b, x);
  Vector<double> expect(7);
  expect << 1, 1, -1, 1, -1, 1, -1;
  CHECK(f == expect);
  CHECK(monomial_features(b, SpinVector::Ones(3)) == Vector<double>::Ones(7));

  const MonomialBasis b4(5, 4);
  SpinVector y(5);
  y << -1, 1, -1, -1, 1;
  const Vector<double> g = monomial_features(b4, y);
  auto index_of = [&](const Subset& s) {
    for (int k = 0; k < b4.size(); ++k)
      if (b4[k] == s) return k;
    return -1;
  };
  CHECK(g(index_of({0, 2, 3})) == g(index_of({0})) * g(index_of({2, 3})));
  CHECK(g(index_of({1, 4})) == g(index_of({1})) * g(index_of({4})));
  for (Eigen::Index k = 0; k < g.size(); ++k) CHECK(std::abs(g(k)) == 1.0);
}

TEST_CASE("sparse polynomial basics") {
  SparsePolynomial p(4);
  p.set({1, 3}, 0.5);
  p.set({}, -0.25);
  p.set({2}, 0.0);
  CHECK(p.size() == 2);
  CHECK(p.coefficient({1, 3}) == 0.5);
  CHECK(p.coefficient({0}) == 0.0);
  SpinVector x(4);
  x << 1, -1, 1, 1;
  CHECK(p(x) == doctest::Approx(-0.75));
  CHECK(p.l1_norm() == doctest::Approx(0.75));
  CHECK(p.l1_norm(false) == doctest::Approx(0.5));
  CHECK_THROWS(p.set({3, 1}, 1.0));
  CHECK_THROWS(p.set({4}, 1.0));
  SparsePolynomial q(4);
  q.set({1, 3}, 0.25);
  q.set({0, 1}, -1.0);
  CHECK(l1_distance(p, q) == doctest::Approx(1.25));
  CHECK(l1_distance(p, q, true) == doctest::Approx(1.5));
}

}  // TEST_SUITE
