#include "rbmlearn/structure.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>

#include "rbmlearn/enumerate.hpp"
#include "rbmlearn/parallel.hpp"

namespace rbmlearn {

void StructureConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("structure.eta must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("structure.delta must lie in (0, 1)");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw std::invalid_argument("structure.holdout_fraction must lie in (0, 1)");
  regression.validate();
}

bool NeighborhoodMap::adjacent(int i, int j) const {
  const Subset& s = neighbors.at(static_cast<std::size_t>(i));
  return std::binary_search(s.begin(), s.end(), j);
}

int NeighborhoodMap::borderline_count() const {
  return static_cast<int>(std::count_if(pairs.begin(), pairs.end(), [](const PairResult& p) { return p.borderline; }));
}

double required_samples(double radius, double p, double delta, double eps) {
  if (radius == 0.0) return 0.0;
  const double c = 4.0 * radius * std::sqrt(2.0 * std::log(2.0 * p)) + 2.0 * radius * std::sqrt(2.0 * std::log(2.0 / delta));
  return std::ceil(c * c / (eps * eps));
}

namespace {

using LossFn = std::function<double(int target, const Subset& excluded)>;

PairResult decide(int i, int j, double full_i, double excl_i, double full_j, double excl_j, double eta) {
  PairResult r;
  r.i = i;
  r.j = j;
  r.forward = {i, j, full_i, excl_i};
  r.backward = {j, i, full_j, excl_j};
  r.drop = std::max(r.forward.drop(), r.backward.drop());
  r.neighbor = two_hop_decision(r.drop, eta);
  r.borderline = r.drop >= 0.5 * eta && r.drop <= 0.75 * eta;
  return r;
}

NeighborhoodMap run_tests(int n, const LossFn& loss, const std::vector<bool>& constant, const StructureConfig& cfg) {
  NeighborhoodMap map;
  map.n = n;
  map.eta = cfg.eta;
  std::vector<double> full(static_cast<std::size_t>(n));
  parallel_for(n, cfg.threads, [&](int t) { full[t] = constant[t] ? 0.0 : loss(t, {}); });

  std::vector<std::pair<int, int>> index;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) index.emplace_back(i, j);
  map.pairs.resize(index.size());
  parallel_for(static_cast<int>(index.size()), cfg.threads, [&](int k) {
    const auto [i, j] = index[k];
    if (constant[i] || constant[j]) {
      PairResult r = decide(i, j, full[i], full[i], full[j], full[j], cfg.eta);
      r.constant_column = true;
      r.neighbor = false;
      r.borderline = false;
      map.pairs[k] = r;
      return;
    }
    map.pairs[k] = decide(i, j, full[i], loss(i, {j}), full[j], loss(j, {i}), cfg.eta);
  });

  map.neighbors.assign(static_cast<std::size_t>(n), {});
  for (const PairResult& r : map.pairs) {
    if (!r.neighbor) continue;
    map.neighbors[r.i].push_back(r.j);
    map.neighbors[r.j].push_back(r.i);
  }
  for (Subset& s : map.neighbors) std::sort(s.begin(), s.end());
  return map;
}

SampleDiagnostics sample_diagnostics(int n, double m_train, double m_holdout, const StructureConfig& cfg) {
  SampleDiagnostics d;
  d.m_train = m_train;
  d.m_holdout = m_holdout;
  d.delta_pair = n > 1 ? cfg.delta / (static_cast<double>(n) * (n - 1)) : cfg.delta;
  const double p = static_cast<double>(monomial_count(std::max(0, n - 1), cfg.regression.degree));
  d.excess_bound = m_train > 0 ? excess_loss_bound(cfg.regression.radius, m_train, p, d.delta_pair) : INFINITY;
  d.required_m = required_samples(cfg.regression.radius, p, d.delta_pair, cfg.epsilon());
  d.sufficient = d.excess_bound <= cfg.epsilon();
  return d;
}

}  // namespace

PairResult test_two_hop(const SpinDataset& data, int i, int j, const StructureConfig& cfg) {
  cfg.validate();
  if (i == j) throw std::invalid_argument("test_two_hop: i and j must differ");
  if (i < 0 || j < 0 || i >= data.n() || j >= data.n()) throw std::out_of_range("test_two_hop: index out of range");
  if (data.m() == 0) throw DegenerateData("test_two_hop: dataset is empty");
  const auto [train, hold] = split_holdout(data, 1.0 - cfg.holdout_fraction);
  if (train.m() == 0 || hold.m() == 0) throw DegenerateData("test_two_hop: too few samples for the holdout split");
  const std::vector<double> mean = train.column_mean();
  auto loss = [&](int t, const Subset& ex) {
    return predictor_loss(learn_network_predictor(train, t, ex, cfg.regression).poly, hold, t);
  };
  if (std::abs(mean[i]) == 1.0 || std::abs(mean[j]) == 1.0) {
    PairResult r = decide(i, j, 0, 0, 0, 0, cfg.eta);
    r.constant_column = true;
    r.neighbor = false;
    return r;
  }
  const int a = std::min(i, j), b = std::max(i, j);
  return decide(a, b, loss(a, {}), loss(a, {b}), loss(b, {}), loss(b, {a}), cfg.eta);
}

NeighborhoodMap recover_structure(const SpinDataset& data, const StructureConfig& cfg) {
  cfg.validate();
  if (data.m() == 0) throw DegenerateData("recover_structure: dataset is empty");
  const auto [train, hold] = split_holdout(data, 1.0 - cfg.holdout_fraction);
  if (train.m() == 0 || hold.m() == 0) throw DegenerateData("recover_structure: too few samples for the holdout split");
  const int n = data.n();
  const std::vector<double> mean = train.column_mean();
  std::vector<bool> constant(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) constant[k] = std::abs(mean[k]) == 1.0;
  auto loss = [&](int t, const Subset& ex) {
    return predictor_loss(learn_network_predictor(train, t, ex, cfg.regression).poly, hold, t);
  };
  NeighborhoodMap map = run_tests(n, loss, constant, cfg);
  map.samples = sample_diagnostics(n, train.m(), hold.m(), cfg);
  return map;
}

NeighborhoodMap recover_structure_exact(const Vector<double>& pmf, const StructureConfig& cfg) {
  cfg.validate();
  const int n = table_dimension(pmf);
  std::vector<bool> constant(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) constant[k] = std::abs(exact_moment(pmf, std::uint64_t{1} << k)) >= 1.0 - 1e-15;
  auto loss = [&](int t, const Subset& ex) {
    const Subset cols = predictor_columns(n, t, ex);
    return fit_pattern_predictor(compress_pmf(pmf, cols, t), cols, n, cfg.regression).loss;
  };
  NeighborhoodMap map = run_tests(n, loss, constant, cfg);
  map.samples.exact = true;
  map.samples.delta_pair = n > 1 ? cfg.delta / (static_cast<double>(n) * (n - 1)) : cfg.delta;
  return map;
}

double exact_conditional_mutual_information(const Vector<double>& pmf, int i, int j) {
  const int n = table_dimension(pmf);
  if (i == j || i < 0 || j < 0 || i >= n || j >= n) throw std::out_of_range("conditional mutual information: bad indices");
  const std::uint64_t bi = std::uint64_t{1} << i, bj = std::uint64_t{1} << j;
  double info = 0.0;
  for (std::uint64_t cfg = 0; cfg < (std::uint64_t{1} << n); ++cfg) {
    const double p = pmf(static_cast<Eigen::Index>(cfg));
    if (p <= 0.0) continue;
    const double pi = pmf(static_cast<Eigen::Index>(cfg ^ bi));
    const double pj = pmf(static_cast<Eigen::Index>(cfg ^ bj));
    const double pij = pmf(static_cast<Eigen::Index>(cfg ^ bi ^ bj));
    // log P(x_i | rest) - log P(x_i | rest without j)
    info += p * (std::log(p / (p + pi)) - std::log((p + pj) / (p + pi + pj + pij)));
  }
  return info;
}

void write_pair_csv(std::ostream& out, const NeighborhoodMap& map) {
  out << "i,j,loss_full,loss_excl,drop,decision\n";
  out.precision(12);
  for (const PairResult& r : map.pairs) {
    for (const DirectedTest& t : {r.forward, r.backward}) {
      out << t.target << ',' << t.excluded << ',' << t.loss_full << ',' << t.loss_excl << ',' << t.drop() << ','
          << (r.neighbor ? "neighbor" : "non-neighbor") << '\n';
    }
  }
}

}  // namespace rbmlearn
