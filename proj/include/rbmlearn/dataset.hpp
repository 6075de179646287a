#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rbmlearn/types.hpp"

namespace rbmlearn {

/// Immutable m x n matrix of ±1 samples with optional ±1 labels.
class SpinDataset {
 public:
  SpinDataset() = default;
  explicit SpinDataset(SpinMatrix samples, std::optional<SpinVector> labels = std::nullopt);

  int n() const { return static_cast<int>(samples_.cols()); }
  int m() const { return static_cast<int>(samples_.rows()); }
  bool has_labels() const { return labels_.has_value(); }

  const SpinMatrix& samples() const { return samples_; }
  const SpinVector& labels() const;
  int spin(int row, int col) const { return samples_(row, col); }
  int label(int row) const { return (*labels_)(row); }

  /// Rows [begin, end) as a new dataset.
  SpinDataset slice(int begin, int end) const;
  /// Rows with the given label, labels dropped.
  SpinDataset with_label(int y) const;
  /// Per-column sample means.
  std::vector<double> column_mean() const;
  /// Same samples, labels replaced (or removed).
  SpinDataset relabeled(std::optional<SpinVector> labels) const;

 private:
  SpinMatrix samples_;
  std::optional<SpinVector> labels_;
};

/// Splits into (first fraction, remainder) without shuffling.
std::pair<SpinDataset, SpinDataset> split_holdout(const SpinDataset& data, double train_fraction);

/// Draws m i.i.d. configurations from a pmf table over {±1}^n.
SpinDataset exact_sample(const Vector<double>& pmf, int m, std::uint64_t seed);

/// Distinct rows of a feature projection with weighted label counts. Two
/// samples share a row when they agree on every selected coordinate, so a
/// logistic objective over the rows equals the objective over the samples.
struct PatternTable {
  SpinMatrix patterns;          // rows x k, the selected coordinates
  Vector<double> weight_plus;   // total weight with label +1
  Vector<double> weight_minus;  // total weight with label -1

  int rows() const { return static_cast<int>(patterns.rows()); }
  double total_weight() const { return weight_plus.sum() + weight_minus.sum(); }
};

/// Groups samples by their values on `columns`, using column `target` (or the
/// dataset labels when target < 0) as the ±1 response. Rows are ordered by
/// first appearance.
PatternTable compress_patterns(const SpinDataset& data, const Subset& columns, int target);

/// Weighted pattern table from an exact pmf over {±1}^n: response is x_target.
PatternTable compress_pmf(const Vector<double>& pmf, const Subset& columns, int target);

// Text format: a header line "# spins n=<n> m=<m> labels=<0|1>" followed by
// one sample per line of space-separated +1/-1 tokens, with the label as a
// trailing column when labels=1.
void write_dataset(std::ostream& out, const SpinDataset& data);
SpinDataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const SpinDataset& data);
SpinDataset load_dataset(const std::string& path);

}  // namespace rbmlearn
