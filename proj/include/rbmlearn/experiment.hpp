#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbmlearn/serialize.hpp"

namespace rbmlearn {

struct ExperimentOptions {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int threads = 1;
  bool exact = false;  // exact i.i.d. sampling and enumerated metrics where caps allow
  std::string config_dir;  // relative paths in the config resolve against this
};

enum class ExperimentKind { kGenerate, kSample, kStructure, kDistribution, kTrainSupervised, kEvalSupervised, kReport };

ExperimentKind parse_experiment_kind(const std::string& name);
std::string experiment_kind_name(ExperimentKind kind);

struct ConfigIssue {
  std::string path;  // JSON pointer into the config document
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Reads typed values out of a config object, records the value actually used
/// (default or given) into an echo document, and collects every violation.
class ConfigReader {
 public:
  ConfigReader(const Json& doc, std::vector<ConfigIssue>& issues, Json& echo, std::string path = "");

  bool has(const std::string& key) const;
  const Json& raw(const std::string& key) const;
  std::string path_of(const std::string& key) const { return path_ + "/" + key; }
  const std::string& path() const { return path_; }

  double number(const std::string& key, double fallback, double lo = -INFINITY, double hi = INFINITY,
                bool open_lo = false);
  int integer(const std::string& key, int fallback, int lo = INT32_MIN, int hi = INT32_MAX);
  bool boolean(const std::string& key, bool fallback);
  std::string text(const std::string& key, const std::string& fallback);
  std::string choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed);
  std::optional<std::string> optional_text(const std::string& key);
  ConfigReader child(const std::string& key);
  void fail(const std::string& key, const std::string& message);

 private:
  void record(const std::string& key, Json value);

  const Json* doc_;
  std::vector<ConfigIssue>* issues_;
  Json* echo_;
  std::string path_;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Machine-readable error document for a failed run.
Json error_document(const std::exception& e);

/// Runs one experiment kind, writes its artifacts and report.json into
/// options.out_dir, and returns the report.
Json run_experiment(ExperimentKind kind, const Json& config, const ExperimentOptions& options);

// Trial drivers shared by the experiment kinds and the acceptance suite.

/// Visible samples from a model: exact i.i.d. draws when `exact`, else Gibbs.
struct SamplingPlan {
  int m = 0;
  bool exact = false;
  int burn_in = 1000;
  int thin = 1;
  int chains = 4;
};
SpinDataset draw_samples(const Rbm& model, const SamplingPlan& plan, std::uint64_t seed, int threads);

/// Smallest I(X_i; X_j | rest) over the given pairs.
double min_conditional_mutual_information(const Vector<double>& pmf, const std::vector<Subset>& graph);

struct StructureScore {
  double precision = 1.0;
  double recall = 1.0;
  bool exact_recovery = true;
};
StructureScore score_structure(const std::vector<Subset>& truth, const std::vector<Subset>& found);

struct DistributionScore {
  double coeff_error = 0.0;  // Σ_S |w_S - ŵ_S| over non-empty S
  double skl = 0.0;          // exact
  double tv = 0.0;           // exact
  bool pinsker_ok = true;    // 2 TV² <= SKL
  bool holder_ok = true;     // SKL <= 2 Σ |w_S - ŵ_S|
  bool tight_ok = true;      // SKL <= Σ |w_S - ŵ_S|
};
DistributionScore score_distribution(const MrfPotential& truth, const Vector<double>& true_pmf, const MrfPotential& learned);

struct SupervisedScore {
  std::vector<NeighborhoodResult> nbhds;
  LabelPredictor predictor;
  double population_loss = 0.0;
  double bayes_loss = 0.0;
};
/// Greedy neighborhoods, conditional MRFs and a scalar bias from labeled
/// samples, scored against the joint table.
SupervisedScore supervised_trial(const SpinDataset& data, const Vector<double>& joint, const NormBounds& bounds,
                                 const SupervisedConfig& cfg);

}  // namespace rbmlearn
