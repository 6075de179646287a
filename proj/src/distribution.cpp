#include "rbmlearn/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "rbmlearn/enumerate.hpp"
#include "rbmlearn/parallel.hpp"
#include "rbmlearn/rng.hpp"

namespace rbmlearn {

namespace {

void check_nbhd(int n, int i, const Subset& nbhd) {
  if (i < 0 || i >= n) throw std::out_of_range("conditional table: node out of range");
  if (static_cast<int>(nbhd.size()) > kMaxNeighborhood)
    throw CapExceeded("neighborhood of node " + std::to_string(i) + " has " + std::to_string(nbhd.size()) +
                      " members; the cap is " + std::to_string(kMaxNeighborhood) + " (raise eta to shrink it)");
  for (int k : nbhd)
    if (k < 0 || k >= n || k == i) throw std::invalid_argument("conditional table: bad neighborhood member");
}

std::uint64_t row_mask(const SpinMatrix& samples, Eigen::Index r) {
  std::uint64_t mask = 0;
  for (Eigen::Index k = 0; k < samples.cols(); ++k)
    if (samples(r, k) < 0) mask |= std::uint64_t{1} << k;
  return mask;
}

}  // namespace

ConditionalTable empirical_conditional_table(const SpinDataset& data, int i, const Subset& nbhd, ClipSpec clip) {
  check_nbhd(data.n(), i, nbhd);
  const int k = static_cast<int>(nbhd.size());
  ConditionalTable t{i, nbhd, Vector<double>::Zero(Eigen::Index{1} << k), std::vector<long long>(std::size_t{1} << k, 0), 0};
  for (int r = 0; r < data.m(); ++r) {
    std::size_t cell = 0;
    for (int b = 0; b < k; ++b)
      if (data.spin(r, nbhd[b]) < 0) cell |= std::size_t{1} << b;
    t.values(static_cast<Eigen::Index>(cell)) += data.spin(r, i);
    ++t.counts[cell];
  }
  for (std::size_t c = 0; c < t.counts.size(); ++c) {
    double& v = t.values(static_cast<Eigen::Index>(c));
    if (t.counts[c] == 0) {
      ++t.unobserved;
      v = 0.0;
    } else {
      v = std::clamp(v / static_cast<double>(t.counts[c]), -clip.r, clip.r);
    }
  }
  return t;
}

ConditionalTable exact_neighborhood_table(const Vector<double>& pmf, int i, const Subset& nbhd) {
  check_nbhd(table_dimension(pmf), i, nbhd);
  return {i, nbhd, exact_conditional_table(pmf, i, nbhd), {}, 0};
}

void walsh_hadamard(Vector<double>& v) {
  const Eigen::Index size = v.size();
  if (size == 0 || (size & (size - 1)) != 0) throw std::invalid_argument("walsh_hadamard: length must be a power of two");
  for (Eigen::Index h = 1; h < size; h <<= 1)
    for (Eigen::Index a = 0; a < size; a += 2 * h)
      for (Eigen::Index b = a; b < a + h; ++b) {
        const double x = v(b), y = v(b + h);
        v(b) = x + y;
        v(b + h) = x - y;
      }
}

SparsePolynomial fourier_from_predictor(const ConditionalTable& table, int n) {
  const int k = static_cast<int>(table.nbhd.size());
  Vector<double> g(table.values.size());
  for (Eigen::Index c = 0; c < g.size(); ++c) {
    const double v = table.values(c);
    if (!(std::abs(v) < 1.0)) throw std::invalid_argument("fourier_from_predictor: table entries must lie in (-1, 1)");
    g(c) = std::atanh(v);
  }
  walsh_hadamard(g);
  g /= static_cast<double>(g.size());
  SparsePolynomial out(n);
  for (Eigen::Index mask = 0; mask < g.size(); ++mask) {
    Subset s{table.node};
    for (int b = 0; b < k; ++b)
      if ((mask >> b) & 1) s.push_back(table.nbhd[b]);
    std::sort(s.begin(), s.end());
    out.set(std::move(s), g(mask));
  }
  return out;
}

MrfPotential distribution_from_predictors(const std::vector<ConditionalTable>& tables, int n) {
  std::map<Subset, std::pair<double, int>, SubsetOrder> sums;
  for (const ConditionalTable& t : tables) {
    const SparsePolynomial local = fourier_from_predictor(t, n);
    for (const auto& [s, c] : local.terms()) {
      auto& [sum, count] = sums[s];
      sum += c;
      ++count;
    }
  }
  MrfPotential out(n);
  for (const auto& [s, acc] : sums) {
    // A set of two or more nodes needs at least two contributing nodes.
    if (s.size() >= 2 && acc.second < 2) continue;
    out.set(s, acc.first / static_cast<double>(acc.second));
  }
  return out;
}

MrfPotential distribution_from_structure(const SpinDataset& data, const std::vector<Subset>& nbhds, const NormBounds& bounds,
                                         int threads) {
  if (static_cast<int>(nbhds.size()) != data.n())
    throw std::invalid_argument("distribution_from_structure: need one neighborhood per visible node");
  if (data.m() == 0) throw DegenerateData("distribution_from_structure: dataset is empty");
  // A zero bound would clip everything to 0.
  const ClipSpec clip(std::clamp(clip_level(bounds), 1e-12, 1.0 - 1e-12));
  std::vector<ConditionalTable> tables(nbhds.size());
  parallel_for(data.n(), threads, [&](int i) { tables[i] = empirical_conditional_table(data, i, nbhds[i], clip); });
  return distribution_from_predictors(tables, data.n());
}

MrfPotential distribution_from_structure(const SpinDataset& data, const NeighborhoodMap& nbhds, const NormBounds& bounds,
                                         int threads) {
  if (nbhds.n != data.n()) throw std::invalid_argument("distribution_from_structure: neighborhood map has the wrong size");
  return distribution_from_structure(data, nbhds.neighbors, bounds, threads);
}

MrfPotential potential_from_pmf(const Vector<double>& pmf) {
  const int n = table_dimension(pmf);
  Vector<double> g(pmf.size());
  for (Eigen::Index c = 0; c < g.size(); ++c) {
    if (!(pmf(c) > 0.0)) throw std::invalid_argument("potential_from_pmf: pmf must be strictly positive");
    g(c) = std::log(pmf(c));
  }
  walsh_hadamard(g);
  g /= static_cast<double>(g.size());
  MrfPotential out(n);
  for (Eigen::Index mask = 1; mask < g.size(); ++mask) {
    Subset s;
    for (int b = 0; b < n; ++b)
      if ((mask >> b) & 1) s.push_back(b);
    out.set(std::move(s), g(mask));
  }
  return out;
}

Vector<double> mrf_pmf(const MrfPotential& potential, int n) {
  if (n > kMaxJointEnumeration) throw CapExceeded("mrf_pmf: too many variables to enumerate");
  Vector<double> f = Vector<double>::Zero(Eigen::Index{1} << n);
  for (const auto& [s, c] : potential.terms()) {
    if (!s.empty() && s.back() >= n) throw std::out_of_range("mrf_pmf: potential refers to a variable >= n");
    f(static_cast<Eigen::Index>(subset_mask(s))) += c;
  }
  walsh_hadamard(f);
  return normalize_log_table(f);
}

MomentSource exact_moments(Vector<double> pmf_p, Vector<double> pmf_q) {
  MomentSource src;
  src.p = [pmf = std::move(pmf_p)](std::uint64_t mask) { return exact_moment(pmf, mask); };
  src.q = [pmf = std::move(pmf_q)](std::uint64_t mask) { return exact_moment(pmf, mask); };
  src.exact = true;
  return src;
}

MomentSource sampled_moments(const SpinDataset& from_p, const SpinDataset& from_q) {
  auto make = [](const SpinDataset& d) {
    if (d.m() == 0) throw DegenerateData("sampled_moments: empty dataset");
    std::vector<std::uint64_t> rows(static_cast<std::size_t>(d.m()));
    for (int r = 0; r < d.m(); ++r) rows[r] = row_mask(d.samples(), r);
    return [rows = std::move(rows)](std::uint64_t mask) {
      long long acc = 0;
      for (std::uint64_t x : rows) acc += parity_sign(x & mask);
      return static_cast<double>(acc) / static_cast<double>(rows.size());
    };
  };
  return {make(from_p), make(from_q), false};
}

double skl_divergence(const MrfPotential& p, const MrfPotential& q, const MomentSource& moments) {
  std::map<Subset, double, SubsetOrder> diff;
  for (const auto& [s, c] : p.terms()) diff[s] += c;
  for (const auto& [s, c] : q.terms()) diff[s] -= c;
  double total = 0.0;
  for (const auto& [s, d] : diff) {
    if (s.empty() || d == 0.0) continue;
    const std::uint64_t mask = subset_mask(s);
    total += d * (moments.p(mask) - moments.q(mask));
  }
  return total;
}

double kl_divergence(const Vector<double>& p, const Vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: table sizes differ");
  double total = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) == 0.0) continue;
    if (q(k) == 0.0) return INFINITY;
    total += p(k) * std::log(p(k) / q(k));
  }
  return total;
}

double tv_distance_exact(const Vector<double>& p, const Vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance_exact: table sizes differ");
  return 0.5 * (p - q).lpNorm<1>();
}

MrfSampleResult mrf_gibbs(const MrfPotential& potential, int n, int sweeps, int chains, std::uint64_t seed, int threads) {
  if (n < 1 || n > 64) throw std::invalid_argument("mrf_gibbs: n must lie in [1, 64]");
  if (sweeps < 0 || chains < 1) throw std::invalid_argument("mrf_gibbs: sweeps must be >= 0 and chains >= 1");
  // Terms touching node i, stored as (mask of S∖i, w_S).
  std::vector<std::vector<std::pair<std::uint64_t, double>>> local(static_cast<std::size_t>(n));
  for (const auto& [s, c] : potential.terms()) {
    const std::uint64_t mask = subset_mask(s);
    for (int i : s) {
      if (i >= n) throw std::out_of_range("mrf_gibbs: potential refers to a variable >= n");
      local[i].emplace_back(mask & ~(std::uint64_t{1} << i), c);
    }
  }
  MrfSampleResult out{SpinMatrix(chains, n), Matrix<double>(chains, n)};
  parallel_for(chains, threads, [&](int c) {
    Xoshiro256 rng(seed, static_cast<std::uint64_t>(c));
    std::uint64_t x = 0;
    for (int k = 0; k < n; ++k)
      if (rng.spin(0.0) < 0) x |= std::uint64_t{1} << k;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      for (int i = 0; i < n; ++i) {
        double field = 0.0;
        for (const auto& [mask, w] : local[i]) field += w * parity_sign(x & mask);
        const double mean = std::tanh(field);
        if (sweep + 1 == sweeps) out.probabilities(c, i) = 0.5 * (1.0 + mean);
        if (rng.spin(mean) > 0) x &= ~(std::uint64_t{1} << i);
        else x |= std::uint64_t{1} << i;
      }
    }
    for (int k = 0; k < n; ++k) {
      out.states(c, k) = static_cast<std::int8_t>(spin_at(x, k));
      if (sweeps == 0) out.probabilities(c, k) = 0.5;
    }
  });
  return out;
}

void write_pmf_csv(std::ostream& out, const Vector<double>& pmf) {
  const int n = table_dimension(pmf);
  out << "config";
  for (int k = 0; k < n; ++k) out << ",x_" << k;
  out << ",probability\n";
  out.precision(17);
  for (Eigen::Index c = 0; c < pmf.size(); ++c) {
    out << c;
    for (int k = 0; k < n; ++k) out << ',' << spin_at(static_cast<std::uint64_t>(c), k);
    out << ',' << pmf(c) << '\n';
  }
}

}  // namespace rbmlearn
