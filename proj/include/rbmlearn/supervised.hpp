#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rbmlearn/dataset.hpp"
#include "rbmlearn/distribution.hpp"
#include "rbmlearn/logistic.hpp"
#include "rbmlearn/rbm.hpp"

namespace rbmlearn {

/// P(x, h, y) ∝ exp(⟨x, Wh⟩ + ⟨b_vis, x⟩ + ⟨b_hid, h⟩ + y⟨w_label, h⟩ + b_label y).
struct SupervisedRbm {
  Rbm base;
  Vector<double> w_label;
  double b_label = 0.0;

  int n_visible() const { return base.n_visible(); }
  int n_hidden() const { return base.n_hidden(); }
  void validate() const;

  /// Law of X given Y = y: an RBM with hidden bias b_hid + y w_label.
  Rbm conditional(int y) const;
};

/// Exact pmf over (x, y) as a table of dimension n_visible + 1; the label is
/// the last coordinate.
Vector<double> exact_joint_pmf(const SupervisedRbm& model);

/// Labeled dataset of i.i.d. draws from the joint table.
SpinDataset exact_labeled_sample(const Vector<double>& joint, int m, std::uint64_t seed);

/// Block Gibbs over (x, h, y); chain c uses substream (seed, c).
SpinDataset gibbs_sample_supervised(const SupervisedRbm& model, int burn_in, int n_samples, int chains, std::uint64_t seed,
                                    int threads = 1);

/// Groups labeled samples (or a joint table) into weighted (x, y) patterns.
PatternTable labeled_patterns(const SpinDataset& data);
PatternTable labeled_patterns(const Vector<double>& joint);

/// Quantities behind the structural assumptions on a supervised RBM.
struct AssumptionReport {
  bool ferromagnetic = true;  // every W_ij >= 0
  double min_weight = 0.0;    // smallest nonzero W_ij (0 when W = 0)
  double lambda = 0.0;        // max of row sums and the better label's column sums
  double label_balance = 0.0; // min_y P(Y = y)

  bool holds(double alpha, double lambda_bound, double beta) const {
    return ferromagnetic && (min_weight == 0.0 || min_weight >= alpha) && lambda <= lambda_bound && label_balance >= beta;
  }
};
AssumptionReport supervised_assumptions(const SupervisedRbm& model);

enum class StopMode { kThreshold, kVarianceShrink };

StopMode parse_stop_mode(const std::string& name);
std::string stop_mode_name(StopMode m);

struct SupervisedConfig {
  double tau = 0.0;        // covariance threshold; <= 0 means β α² e^{-12λ} / 2
  double alpha = 0.3;
  double lambda = 1.5;
  double beta_bal = 0.3;
  double bias_bound = 10.0;  // B
  int t_star = 0;            // 0 means min(8/τ², 30)
  double min_bin = 25.0;     // bins lighter than this contribute 0
  StopMode stop_mode = StopMode::kThreshold;
  double shrink_fraction = 0.01;
  int min_class_count = 10;
  int threads = 1;

  void validate() const;
  double effective_tau() const;
  int effective_t_star() const;
};

inline constexpr int kMaxGreedySteps = 30;

struct CovResult {
  double value = 0.0;
  double min_bin_cov = 0.0;       // smallest within-bin covariance among used bins
  double min_bin_fraction = 1.0;  // smallest bin weight / total among all observed bins
  int bins_used = 0;
  int bins_skipped = 0;
  double skipped_fraction = 0.0;  // weight share of skipped bins
};

/// Σ_{(x_S, y)} Pr̂[bin] Cov̂(X_u, X_v | bin) over bins of weight >= min_bin.
CovResult avg_conditional_covariance(const PatternTable& table, int u, int v, const Subset& s, double min_bin);
CovResult avg_conditional_covariance(const SpinDataset& data, int u, int v, const Subset& s, double min_bin);

struct NeighborhoodResult {
  Subset nbhd;          // sorted
  Subset added;         // greedy order
  Subset pruned;
  bool cap_hit = false;
  int bins_skipped = 0;
};

NeighborhoodResult learn_supervised_nbhd(const PatternTable& table, int u, const SupervisedConfig& cfg);
NeighborhoodResult learn_supervised_nbhd(const SpinDataset& data, int u, const SupervisedConfig& cfg);

/// Runs the greedy search for every node.
std::vector<NeighborhoodResult> learn_all_nbhds(const PatternTable& table, int n, const SupervisedConfig& cfg);

struct ConditionalMrfs {
  MrfPotential f_plus;
  MrfPotential f_minus;
  int m_plus = 0;
  int m_minus = 0;
};

ConditionalMrfs fit_conditional_mrfs(const SpinDataset& data, const std::vector<Subset>& nbhds, const NormBounds& bounds,
                                     const SupervisedConfig& cfg);

enum class BiasMode { kScalar, kExtended };

struct LabelPredictor {
  int n = 0;
  MrfPotential f_plus;
  MrfPotential f_minus;
  double bias = 0.0;
  std::optional<Vector<double>> extended_coeffs;  // per-node multipliers

  /// h(x) before the tanh.
  double logit(const SpinVector& x) const;
  /// Per-node features Σ_{S∋i} (f⁺_S - f⁻_S) x_S / 2.
  Vector<double> node_features(const SpinVector& x) const;
};

struct BiasFitOptions {
  BiasMode mode = BiasMode::kScalar;
  double bias_bound = 10.0;         // |b| <= B in scalar mode
  RegressionConfig extended;        // budget and solver for extended mode
};

LabelPredictor fit_bias(const SpinDataset& data, const MrfPotential& f_plus, const MrfPotential& f_minus,
                        const BiasFitOptions& options);
/// Scalar-mode fit against an exact joint table.
LabelPredictor fit_bias_exact(const Vector<double>& joint, const MrfPotential& f_plus, const MrfPotential& f_minus,
                              double bias_bound = 10.0);

/// tanh(h(x)).
double predict_label(const SpinVector& x, const LabelPredictor& pred);

/// Mean logistic loss and accuracy on labeled data.
struct LabelMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double loss_stderr = 0.0;
};
LabelMetrics evaluate_predictor(const LabelPredictor& pred, const SpinDataset& data);
double population_label_loss(const LabelPredictor& pred, const Vector<double>& joint);
/// H(Y | X) in nats, the Bayes logistic loss.
double bayes_label_loss(const Vector<double>& joint);
/// E[Y | X = x] for configuration index x of the visible part.
double exact_label_mean(const Vector<double>& joint, std::uint64_t x_config);

}  // namespace rbmlearn
