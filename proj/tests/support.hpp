#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "rbmlearn/enumerate.hpp"
#include "rbmlearn/rbm.hpp"
#include "rbmlearn/rng.hpp"

namespace testsupport {

using rbmlearn::Matrix;
using rbmlearn::Rbm;
using rbmlearn::Vector;

inline Rbm random_rbm(std::uint64_t seed, int n, int nh, double w_scale = 2.0, double b_scale = 1.0) {
  rbmlearn::Xoshiro256 rng(seed, 7);
  Matrix<double> w(n, nh);
  Vector<double> bv(n), bh(nh);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nh; ++j) w(i, j) = rng.uniform(-w_scale, w_scale);
  for (int i = 0; i < n; ++i) bv(i) = rng.uniform(-b_scale, b_scale);
  for (int j = 0; j < nh; ++j) bh(j) = rng.uniform(-b_scale, b_scale);
  return Rbm(w, bv, bh);
}

/// Ising pmf by direct enumeration, same configuration indexing as the library
/// (bit k set means x_k = -1).
inline Vector<double> ising_pmf(int n, const std::vector<std::pair<int, int>>& edges, const std::vector<double>& couplings,
                                const std::vector<double>& fields = {}) {
  const std::size_t states = std::size_t{1} << n;
  Vector<double> p(static_cast<Eigen::Index>(states));
  for (std::size_t c = 0; c < states; ++c) {
    auto x = [&](int k) { return ((c >> k) & 1U) ? -1.0 : 1.0; };
    double e = 0.0;
    for (std::size_t k = 0; k < edges.size(); ++k) e += couplings[k] * x(edges[k].first) * x(edges[k].second);
    for (std::size_t k = 0; k < fields.size(); ++k) e += fields[k] * x(static_cast<int>(k));
    p(static_cast<Eigen::Index>(c)) = std::exp(e);
  }
  return p / p.sum();
}

/// Hidden-degree-2 RBM whose visible marginal is the Ising model with the
/// given couplings (one hidden unit per edge).
inline Rbm ising_rbm(int n, const std::vector<std::pair<int, int>>& edges, const std::vector<double>& couplings) {
  Matrix<double> w = Matrix<double>::Zero(n, static_cast<Eigen::Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double a = std::atanh(std::sqrt(std::tanh(std::abs(couplings[e]))));
    w(edges[e].first, static_cast<Eigen::Index>(e)) = a;
    w(edges[e].second, static_cast<Eigen::Index>(e)) = couplings[e] < 0 ? -a : a;
  }
  return Rbm(w, Vector<double>::Zero(n), Vector<double>::Zero(static_cast<Eigen::Index>(edges.size())));
}

inline std::vector<std::pair<int, int>> chain_edges(int n) {
  std::vector<std::pair<int, int>> e;
  for (int k = 0; k + 1 < n; ++k) e.emplace_back(k, k + 1);
  return e;
}

}  // namespace testsupport
