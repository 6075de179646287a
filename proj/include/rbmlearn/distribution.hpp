#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "rbmlearn/dataset.hpp"
#include "rbmlearn/monomials.hpp"
#include "rbmlearn/structure.hpp"

namespace rbmlearn {

/// Unnormalized log-pmf Σ_S w_S x_S; the empty set is conventionally absent.
using MrfPotential = SparsePolynomial;

struct ClipSpec {
  double r;
  explicit ClipSpec(double value) : r(value) {
    if (!(value > 0.0 && value < 1.0)) throw std::invalid_argument("ClipSpec: r must lie in (0, 1)");
  }
};

inline constexpr int kMaxNeighborhood = 16;

/// Estimate of E[X_node | X_nbhd = cell] for every cell; cell bit b set <=>
/// x_{nbhd[b]} = -1.
struct ConditionalTable {
  int node = 0;
  Subset nbhd;
  Vector<double> values;
  std::vector<long long> counts;  // samples per cell; empty for exact tables
  int unobserved = 0;             // cells with no samples, mapped to 0
};

ConditionalTable empirical_conditional_table(const SpinDataset& data, int i, const Subset& nbhd, ClipSpec clip);
ConditionalTable exact_neighborhood_table(const Vector<double>& pmf, int i, const Subset& nbhd);

/// In-place unnormalized Walsh-Hadamard transform of a length-2^k vector.
void walsh_hadamard(Vector<double>& v);

/// ŵ_{S,i} = E_{X~Uni}[atanh(f_i(X)) X_{S∖i}] for every S ∋ i inside nbhd ∪ {i}.
SparsePolynomial fourier_from_predictor(const ConditionalTable& table, int n);

/// ŵ_S is the mean of ŵ_{S,i} over the nodes i ∈ S whose table reaches S.
/// Sets with |S| >= 2 reached by a single node are dropped.
MrfPotential distribution_from_predictors(const std::vector<ConditionalTable>& tables, int n);

/// Clipped empirical tables with r = clip_level(bounds) fed through the predictor route.
MrfPotential distribution_from_structure(const SpinDataset& data, const std::vector<Subset>& nbhds, const NormBounds& bounds,
                                         int threads = 1);
MrfPotential distribution_from_structure(const SpinDataset& data, const NeighborhoodMap& nbhds, const NormBounds& bounds,
                                         int threads = 1);

/// Fourier expansion of a log-pmf (empty set dropped), i.e. the exact potential.
MrfPotential potential_from_pmf(const Vector<double>& pmf);

/// Normalized pmf of exp(Σ_S w_S x_S) over {±1}^n.
Vector<double> mrf_pmf(const MrfPotential& potential, int n);

/// E_P[X_S] and E_Q[X_S] by subset mask.
struct MomentSource {
  std::function<double(std::uint64_t)> p;
  std::function<double(std::uint64_t)> q;
  bool exact = true;
};

MomentSource exact_moments(Vector<double> pmf_p, Vector<double> pmf_q);
MomentSource sampled_moments(const SpinDataset& from_p, const SpinDataset& from_q);

/// Σ_S (p_S - q_S)(E_P[X_S] - E_Q[X_S]).
double skl_divergence(const MrfPotential& p, const MrfPotential& q, const MomentSource& moments);

double kl_divergence(const Vector<double>& p, const Vector<double>& q);
double tv_distance_exact(const Vector<double>& p, const Vector<double>& q);

struct MrfSampleResult {
  SpinMatrix states;           // chains x n, final configuration of each chain
  Matrix<double> probabilities;  // chains x n, P(x_i = +1 | rest) at the final sweep
};

/// Single-site Gibbs sweeps from fair-spin starts; chain c uses substream (seed, c).
MrfSampleResult mrf_gibbs(const MrfPotential& potential, int n, int sweeps, int chains, std::uint64_t seed, int threads = 1);

/// CSV "config,x_0..x_{n-1},probability".
void write_pmf_csv(std::ostream& out, const Vector<double>& pmf);

}  // namespace rbmlearn
