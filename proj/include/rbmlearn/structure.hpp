#pragma once

#include <iosfwd>
#include <vector>

#include "rbmlearn/dataset.hpp"
#include "rbmlearn/logistic.hpp"

namespace rbmlearn {

struct StructureConfig {
  double eta = 0.05;               // nondegeneracy floor on I(X_i; X_j | rest)
  RegressionConfig regression;
  double delta = 0.05;             // overall failure probability
  double holdout_fraction = 0.2;   // tail of the data used to compare losses
  int threads = 1;

  void validate() const;
  double epsilon() const { return eta / 8.0; }
  double threshold() const { return 0.75 * eta; }
};

/// Neighbor iff the loss increase reaches 3η/4.
inline bool two_hop_decision(double drop, double eta) { return drop >= 0.75 * eta; }

/// Loss comparison for target X_t with and without coordinate `excluded`.
struct DirectedTest {
  int target = 0;
  int excluded = 0;
  double loss_full = 0.0;
  double loss_excl = 0.0;
  double drop() const { return loss_excl - loss_full; }
};

struct PairResult {
  int i = 0;
  int j = 0;
  DirectedTest forward;   // target i, j removed
  DirectedTest backward;  // target j, i removed
  double drop = 0.0;      // max over the two directions
  bool neighbor = false;
  bool borderline = false;       // drop within [η/2, 3η/4]
  bool constant_column = false;  // i or j never varies; declared non-neighbor
};

struct SampleDiagnostics {
  bool exact = false;        // losses are population values from an exact pmf
  double m_train = 0.0;
  double m_holdout = 0.0;
  double delta_pair = 0.0;   // δ / (n(n-1))
  double excess_bound = 0.0; // generalization term at m_train
  double required_m = 0.0;   // m_train at which the term drops below ε = η/8
  bool sufficient = true;
};

struct NeighborhoodMap {
  int n = 0;
  double eta = 0.0;
  std::vector<Subset> neighbors;  // N̂(i), sorted
  std::vector<PairResult> pairs;  // i < j, lexicographic
  SampleDiagnostics samples;

  bool adjacent(int i, int j) const;
  int borderline_count() const;
};

/// Data-driven test for one pair: four regressions on the training part,
/// losses on the holdout part.
PairResult test_two_hop(const SpinDataset& data, int i, int j, const StructureConfig& cfg);

/// All pairs, reusing the full fit for each target.
NeighborhoodMap recover_structure(const SpinDataset& data, const StructureConfig& cfg);

/// Population version: fits and losses under an exact pmf.
NeighborhoodMap recover_structure_exact(const Vector<double>& pmf, const StructureConfig& cfg);

/// I(X_i; X_j | X_rest) under an exact pmf, in nats.
double exact_conditional_mutual_information(const Vector<double>& pmf, int i, int j);

/// Sample size at which excess_loss_bound(R, m, p, δ) <= eps.
double required_samples(double radius, double p, double delta, double eps);

/// CSV with columns i,j,loss_full,loss_excl,drop,decision; one row per direction.
void write_pair_csv(std::ostream& out, const NeighborhoodMap& map);

}  // namespace rbmlearn
