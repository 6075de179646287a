#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rbmlearn/dataset.hpp"
#include "rbmlearn/distribution.hpp"
#include "rbmlearn/enumerate.hpp"
#include "rbmlearn/rng.hpp"
#include "support.hpp"

using namespace rbmlearn;

namespace {

MrfPotential ising_potential(int n, const std::vector<std::pair<int, int>>& edges, const std::vector<double>& j,
                             const std::vector<double>& h = {}) {
  MrfPotential p(n);
  for (std::size_t e = 0; e < edges.size(); ++e) p.set({edges[e].first, edges[e].second}, j[e]);
  for (std::size_t k = 0; k < h.size(); ++k) p.set({static_cast<int>(k)}, h[k]);
  return p;
}

double max_coeff_diff(const SparsePolynomial& a, const SparsePolynomial& b) {
  double worst = 0.0;
  for (const auto& [s, c] : a.terms()) worst = std::max(worst, std::abs(c - b.coefficient(s)));
  for (const auto& [s, c] : b.terms()) worst = std::max(worst, std::abs(c - a.coefficient(s)));
  return worst;
}

ConditionalTable make_table(int node, Subset nbhd, std::vector<double> values) {
  ConditionalTable t;
  t.node = node;
  t.nbhd = std::move(nbhd);
  t.values = Eigen::Map<Vector<double>>(values.data(), static_cast<Eigen::Index>(values.size()));
  return t;
}

}  // namespace

TEST_SUITE("dist-learn") {

TEST_CASE("independent node gives flat cells") {
  Xoshiro256 rng(2);
  SpinMatrix s(50000, 3);
  for (int r = 0; r < s.rows(); ++r)
    for (int c = 0; c < 3; ++c) s(r, c) = static_cast<std::int8_t>(rng.spin(c == 0 ? 0.3 : 0.0));
  const SpinDataset data(s);
  const ConditionalTable t = empirical_conditional_table(data, 0, {1, 2}, ClipSpec(0.9));
  const double mean = data.column_mean()[0];
  for (Eigen::Index c = 0; c < 4; ++c) CHECK(std::abs(t.values(c) - mean) <= 0.03);
  CHECK(t.unobserved == 0);
}

TEST_CASE("two-spin Ising conditional table") {
  const Vector<double> pmf = testsupport::ising_pmf(2, {{0, 1}}, {0.3});
  const SpinDataset data = exact_sample(pmf, 100000, 4);
  const ConditionalTable t = empirical_conditional_table(data, 0, {1}, ClipSpec(0.99));
  CHECK(std::abs(t.values(0) - 0.29131) <= 0.02);
  CHECK(std::abs(t.values(1) + 0.29131) <= 0.02);
  const ConditionalTable e = exact_neighborhood_table(pmf, 0, {1});
  CHECK(e.values(0) == doctest::Approx(std::tanh(0.3)).epsilon(1e-12));
}

TEST_CASE("cells are clipped and unobserved cells are zero") {
  SpinMatrix s(4, 3);
  s << 1, 1, 1, 1, 1, 1, -1, -1, 1, -1, -1, 1;
  const ConditionalTable t = empirical_conditional_table(SpinDataset(s), 0, {1, 2}, ClipSpec(0.4));
  CHECK(t.values.cwiseAbs().maxCoeff() <= 0.4);
  CHECK(t.values(0) == 0.4);
  CHECK(t.values(1) == -0.4);  // x_1 = -1, x_2 = +1
  CHECK(t.unobserved == 2);
  CHECK(t.values(2) == 0.0);
  CHECK_THROWS(ClipSpec(1.0));
}

TEST_CASE("neighbourhood cap") {
  SpinMatrix s = SpinMatrix::Ones(3, 18);
  Subset big;
  for (int k = 1; k <= kMaxNeighborhood + 1; ++k) big.push_back(k);
  CHECK_THROWS_AS(empirical_conditional_table(SpinDataset(s), 0, big, ClipSpec(0.5)), CapExceeded);
}

TEST_CASE("fourier of a constant table") {
  const SparsePolynomial p = fourier_from_predictor(make_table(1, {0, 2}, {0.4, 0.4, 0.4, 0.4}), 3);
  CHECK(p.coefficient({1}) == doctest::Approx(std::atanh(0.4)).epsilon(1e-14));
  CHECK(std::abs(p.coefficient({0, 1})) <= 1e-15);
  CHECK(std::abs(p.coefficient({0, 1, 2})) <= 1e-15);
}

TEST_CASE("fourier of tanh(0.3 x_j)") {
  const double t = std::tanh(0.3);
  const SparsePolynomial p = fourier_from_predictor(make_table(0, {2}, {t, -t}), 3);
  CHECK(std::abs(p.coefficient({0, 2}) - 0.3) <= 1e-12);
  CHECK(std::abs(p.coefficient({0})) <= 1e-12);
  CHECK_THROWS(fourier_from_predictor(make_table(0, {2}, {1.0, -t}), 3));
}

TEST_CASE("Parseval") {
  Xoshiro256 rng(9);
  std::vector<double> v(8);
  for (double& x : v) x = rng.uniform(-0.9, 0.9);
  const SparsePolynomial p = fourier_from_predictor(make_table(3, {0, 1, 4}, v), 5);
  double energy = 0.0, mean_sq = 0.0;
  for (const auto& [s, c] : p.terms()) energy += c * c;
  for (double x : v) mean_sq += std::atanh(x) * std::atanh(x) / 8.0;
  CHECK(energy == doctest::Approx(mean_sq).epsilon(1e-12));
}

TEST_CASE("walsh-hadamard needs a power of two") {
  Vector<double> v = Vector<double>::Ones(3);
  CHECK_THROWS(walsh_hadamard(v));
  Vector<double> w(2);
  w << 1, 2;
  walsh_hadamard(w);
  CHECK(w(0) == 3.0);
  CHECK(w(1) == -1.0);
}

TEST_CASE("zero predictors give the zero potential") {
  std::vector<ConditionalTable> tables;
  for (int i = 0; i < 3; ++i) tables.push_back(make_table(i, {(i + 1) % 3}, {0.0, 0.0}));
  CHECK(distribution_from_predictors(tables, 3).size() == 0);
}

TEST_CASE("disagreeing estimates are averaged") {
  const std::vector<ConditionalTable> tables{make_table(0, {1}, {std::tanh(0.2), -std::tanh(0.2)}),
                                             make_table(1, {0}, {std::tanh(0.6), -std::tanh(0.6)})};
  CHECK(distribution_from_predictors(tables, 2).coefficient({0, 1}) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("sets reached by one node are dropped") {
  const double t = std::tanh(0.3);
  // Node 1 sees {0, 2}; nodes 0 and 2 see only node 1.
  const std::vector<ConditionalTable> tables{make_table(0, {1}, {t, -t}), make_table(1, {0, 2}, {0.2, 0.1, -0.1, -0.3}),
                                             make_table(2, {1}, {t, -t})};
  const MrfPotential p = distribution_from_predictors(tables, 3);
  CHECK(p.coefficient({0, 2}) == 0.0);
  CHECK(p.coefficient({0, 1, 2}) == 0.0);
  CHECK(p.coefficient({0, 1}) != 0.0);
  CHECK(p.coefficient({1}) != 0.0);
}

TEST_CASE("exact tables reproduce the Ising potential") {
  const auto edges = testsupport::chain_edges(5);
  const std::vector<double> j{0.4, -0.3, 0.5, 0.2}, h{0.1, 0.0, -0.2, 0.3, 0.05};
  const Vector<double> pmf = testsupport::ising_pmf(5, edges, j, h);
  const MrfPotential truth = ising_potential(5, edges, j, h);
  std::vector<ConditionalTable> tables;
  for (int i = 0; i < 5; ++i) {
    Subset nb;
    if (i > 0) nb.push_back(i - 1);
    if (i < 4) nb.push_back(i + 1);
    tables.push_back(exact_neighborhood_table(pmf, i, nb));
  }
  CHECK(max_coeff_diff(distribution_from_predictors(tables, 5), truth) <= 1e-9);
  CHECK(max_coeff_diff(potential_from_pmf(pmf), truth) <= 1e-9);
  CHECK((mrf_pmf(truth, 5) - pmf).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("exact tables reproduce a random RBM potential") {
  const Rbm m = testsupport::random_rbm(11, 5, 3);
  const Vector<double> pmf = exact_visible_pmf(m);
  std::vector<ConditionalTable> tables;
  for (int i = 0; i < 5; ++i) {
    Subset nb;
    for (int k = 0; k < 5; ++k)
      if (k != i) nb.push_back(k);
    tables.push_back(exact_neighborhood_table(pmf, i, nb));
  }
  const MrfPotential learned = distribution_from_predictors(tables, 5);
  CHECK(max_coeff_diff(learned, potential_from_pmf(pmf)) <= 1e-9);
  const MomentSource mom = exact_moments(pmf, mrf_pmf(learned, 5));
  CHECK(std::abs(skl_divergence(potential_from_pmf(pmf), learned, mom)) <= 1e-9);
}

TEST_CASE("empty neighbourhoods give the product of marginals") {
  const Vector<double> pmf = testsupport::ising_pmf(3, testsupport::chain_edges(3), {0.5, 0.5}, {0.3, -0.2, 0.1});
  const SpinDataset data = exact_sample(pmf, 20000, 7);
  NormBounds b;
  b.lambda1 = 2.0;
  const MrfPotential p = distribution_from_structure(data, std::vector<Subset>(3), b);
  const std::vector<double> mean = data.column_mean();
  CHECK(p.size() == 3);
  const Vector<double> q = mrf_pmf(p, 3);
  for (Eigen::Index c = 0; c < q.size(); ++c) {
    double prod = 1.0;
    for (int k = 0; k < 3; ++k) prod *= 0.5 * (1.0 + spin_at(static_cast<std::uint64_t>(c), k) * mean[k]);
    CHECK(q(c) == doctest::Approx(prod).epsilon(1e-9));
  }
}

TEST_CASE("structure route from samples on a chain") {
  const auto edges = testsupport::chain_edges(4);
  const Rbm model = testsupport::ising_rbm(4, edges, {0.4, 0.4, 0.4});
  const Vector<double> pmf = exact_visible_pmf(model);
  const SpinDataset data = exact_sample(pmf, 100000, 21);
  const std::vector<Subset> nb{{1}, {0, 2}, {1, 3}, {2}};
  const MrfPotential learned = distribution_from_structure(data, nb, norm_bounds(model), 2);
  const MrfPotential truth = potential_from_pmf(pmf);
  CHECK(std::abs(learned.coefficient({1, 2}) - 0.4) <= 0.03);
  const Vector<double> q = mrf_pmf(learned, 4);
  const double skl = skl_divergence(truth, learned, exact_moments(pmf, q));
  const double tv = tv_distance_exact(pmf, q);
  CHECK(2 * tv * tv <= skl + 1e-15);
  CHECK(skl <= 2.0 * l1_distance(truth, learned));
  CHECK(skl == doctest::Approx(kl_divergence(pmf, q) + kl_divergence(q, pmf)).epsilon(1e-9));
  CHECK(max_coeff_diff(learned, distribution_from_structure(data, nb, norm_bounds(model), 1)) == 0.0);
}

TEST_CASE("symmetrized KL") {
  MrfPotential p(1), q(1);
  p.set({0}, 0.5);
  const Vector<double> pp = mrf_pmf(p, 1), qq = mrf_pmf(q, 1);
  const double skl = skl_divergence(p, q, exact_moments(pp, qq));
  CHECK(skl == doctest::Approx(0.23106).epsilon(1e-5));
  CHECK(std::abs(skl - (kl_divergence(pp, qq) + kl_divergence(qq, pp))) <= 1e-12);
  CHECK(skl_divergence(p, p, exact_moments(pp, pp)) == 0.0);
}

TEST_CASE("SKL, KL and Pinsker on random pairs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Vector<double> a = exact_visible_pmf(testsupport::random_rbm(seed, 4, 2));
    const Vector<double> b = exact_visible_pmf(testsupport::random_rbm(seed + 100, 4, 3));
    const double skl = skl_divergence(potential_from_pmf(a), potential_from_pmf(b), exact_moments(a, b));
    CHECK(skl >= 0.0);
    CHECK(skl == doctest::Approx(kl_divergence(a, b) + kl_divergence(b, a)).epsilon(1e-9));
    const double tv = tv_distance_exact(a, b);
    CHECK(2 * tv * tv <= skl);
  }
}

TEST_CASE("sampled moments approach exact ones") {
  const Vector<double> a = exact_visible_pmf(testsupport::random_rbm(5, 3, 2));
  const Vector<double> b = exact_visible_pmf(testsupport::random_rbm(6, 3, 2));
  const MomentSource s = sampled_moments(exact_sample(a, 200000, 1), exact_sample(b, 200000, 2));
  CHECK(!s.exact);
  const double exact = skl_divergence(potential_from_pmf(a), potential_from_pmf(b), exact_moments(a, b));
  const double sampled = skl_divergence(potential_from_pmf(a), potential_from_pmf(b), s);
  CHECK(std::abs(exact - sampled) <= 0.05 * exact + 0.01);
}

TEST_CASE("total variation examples") {
  Vector<double> u(2), d(2);
  u << 0.5, 0.5;
  d << 1.0, 0.0;
  CHECK(tv_distance_exact(u, u) == 0.0);
  CHECK(tv_distance_exact(u, d) == doctest::Approx(0.5));
  CHECK(kl_divergence(u, d) == INFINITY);
}

TEST_CASE("clip level never cuts the true conditional mean") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Rbm m = testsupport::random_rbm(seed, 5, 3);
    const double r = clip_level(norm_bounds(m));
    const Vector<double> pmf = exact_visible_pmf(m);
    for (int i = 0; i < 5; ++i)
      for (std::uint64_t c = 0; c < 32; ++c) CHECK(std::abs(exact_conditional_mean(pmf, i, c)) <= r + 1e-12);
  }
}

TEST_CASE("tanh(lambda1) alone can undercut the conditional mean") {
  Matrix<double> w(2, 1);
  w << 3.0, 3.0;
  const Rbm m(w, Vector<double>::Zero(2), Vector<double>::Zero(1));
  const NormBounds b = norm_bounds(m);
  CHECK(b.lambda1 == doctest::Approx(std::tanh(3.0)));
  CHECK(b.field_bound == doctest::Approx(3.0));
  const double mu = exact_conditional_mean(exact_visible_pmf(m), 0, 0);
  CHECK(mu > std::tanh(b.lambda1));
  CHECK(mu <= clip_level(b));
}

TEST_CASE("MRF Gibbs marginals and determinism") {
  const MrfPotential p = ising_potential(3, testsupport::chain_edges(3), {0.5, -0.4}, {0.3, 0.0, -0.2});
  const Vector<double> pmf = mrf_pmf(p, 3);
  const MrfSampleResult a = mrf_gibbs(p, 3, 50, 20000, 4, 2);
  const MrfSampleResult b = mrf_gibbs(p, 3, 50, 20000, 4, 1);
  CHECK(a.states == b.states);
  for (int k = 0; k < 3; ++k) {
    const double emp = a.states.col(k).cast<double>().mean();
    CHECK(std::abs(emp - exact_moment(pmf, std::uint64_t{1} << k)) <= 0.03);
  }
  CHECK(a.probabilities.minCoeff() > 0.0);
  CHECK(a.probabilities.maxCoeff() < 1.0);
}

TEST_CASE("pmf csv layout") {
  std::ostringstream out;
  Vector<double> u(2);
  u << 0.25, 0.75;
  write_pmf_csv(out, u);
  CHECK(out.str() == "config,x_0,probability\n0,1,0.25\n1,-1,0.75\n");
}

}  // TEST_SUITE
