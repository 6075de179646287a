#include "rbmlearn/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "rbmlearn/enumerate.hpp"
#include "rbmlearn/rng.hpp"

namespace rbmlearn {

namespace {

bool all_spins(const SpinMatrix& m) {
  return (m.array() == 1 || m.array() == -1).all();
}

struct WordsHash {
  std::size_t operator()(const std::vector<std::uint64_t>& words) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto w : words) {
      h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

SpinDataset::SpinDataset(SpinMatrix samples, std::optional<SpinVector> labels)
    : samples_(std::move(samples)), labels_(std::move(labels)) {
  if (!all_spins(samples_)) throw std::invalid_argument("dataset: entries must be exactly +1 or -1");
  if (labels_) {
    if (labels_->size() != samples_.rows()) throw std::invalid_argument("dataset: label count does not match samples");
    if (!(labels_->array() == 1 || labels_->array() == -1).all())
      throw std::invalid_argument("dataset: labels must be exactly +1 or -1");
  }
}

const SpinVector& SpinDataset::labels() const {
  if (!labels_) throw std::logic_error("dataset has no labels");
  return *labels_;
}

SpinDataset SpinDataset::slice(int begin, int end) const {
  if (begin < 0 || end > m() || begin > end) throw std::out_of_range("dataset slice out of range");
  SpinMatrix rows = samples_.middleRows(begin, end - begin);
  std::optional<SpinVector> lab;
  if (labels_) lab = labels_->segment(begin, end - begin);
  return SpinDataset(std::move(rows), std::move(lab));
}

SpinDataset SpinDataset::with_label(int y) const {
  const SpinVector& lab = labels();
  const auto count = static_cast<int>((lab.array() == y).count());
  SpinMatrix rows(count, n());
  for (int r = 0, out = 0; r < m(); ++r)
    if (lab(r) == y) rows.row(out++) = samples_.row(r);
  return SpinDataset(std::move(rows));
}

std::vector<double> SpinDataset::column_mean() const {
  std::vector<double> out(static_cast<std::size_t>(n()), 0.0);
  if (m() == 0) return out;
  for (int c = 0; c < n(); ++c) out[c] = samples_.col(c).cast<double>().mean();
  return out;
}

SpinDataset SpinDataset::relabeled(std::optional<SpinVector> labels) const {
  return SpinDataset(samples_, std::move(labels));
}

std::pair<SpinDataset, SpinDataset> split_holdout(const SpinDataset& data, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw std::invalid_argument("split_holdout: bad fraction");
  const int cut = static_cast<int>(std::lround(train_fraction * data.m()));
  return {data.slice(0, cut), data.slice(cut, data.m())};
}

SpinDataset exact_sample(const Vector<double>& pmf, int m, std::uint64_t seed) {
  const int n = table_dimension(pmf);
  if (m < 0) throw std::invalid_argument("exact_sample: m must be >= 0");
  std::vector<double> cdf(static_cast<std::size_t>(pmf.size()));
  double acc = 0.0;
  for (Eigen::Index k = 0; k < pmf.size(); ++k) cdf[k] = (acc += pmf(k));
  Xoshiro256 rng(seed);
  SpinMatrix rows(m, n);
  for (int r = 0; r < m; ++r) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    const auto cfg = static_cast<std::uint64_t>(it - cdf.begin());
    for (int k = 0; k < n; ++k) rows(r, k) = static_cast<std::int8_t>(spin_at(cfg, k));
  }
  return SpinDataset(std::move(rows));
}

PatternTable compress_patterns(const SpinDataset& data, const Subset& columns, int target) {
  if (target < 0 && !data.has_labels()) throw std::invalid_argument("compress_patterns: dataset has no labels");
  if (target >= data.n()) throw std::out_of_range("compress_patterns: target out of range");
  const int k = static_cast<int>(columns.size());
  for (int c : columns)
    if (c < 0 || c >= data.n()) throw std::out_of_range("compress_patterns: column out of range");
  const int words = (k + 63) / 64;

  std::unordered_map<std::vector<std::uint64_t>, int, WordsHash> index;
  std::vector<int> first_row;
  std::vector<double> plus, minus;
  std::vector<std::uint64_t> key(static_cast<std::size_t>(words));
  for (int r = 0; r < data.m(); ++r) {
    std::fill(key.begin(), key.end(), 0);
    for (int b = 0; b < k; ++b)
      if (data.spin(r, columns[b]) < 0) key[b / 64] |= (std::uint64_t{1} << (b % 64));
    auto [it, inserted] = index.try_emplace(key, static_cast<int>(first_row.size()));
    if (inserted) {
      first_row.push_back(r);
      plus.push_back(0.0);
      minus.push_back(0.0);
    }
    const int y = target < 0 ? data.label(r) : data.spin(r, target);
    (y > 0 ? plus : minus)[it->second] += 1.0;
  }
  PatternTable out;
  const auto rows = static_cast<int>(first_row.size());
  out.patterns.resize(rows, k);
  for (int p = 0; p < rows; ++p)
    for (int b = 0; b < k; ++b) out.patterns(p, b) = static_cast<std::int8_t>(data.spin(first_row[p], columns[b]));
  out.weight_plus = Eigen::Map<Vector<double>>(plus.data(), rows);
  out.weight_minus = Eigen::Map<Vector<double>>(minus.data(), rows);
  return out;
}

PatternTable compress_pmf(const Vector<double>& pmf, const Subset& columns, int target) {
  const int n = table_dimension(pmf);
  if (target < 0 || target >= n) throw std::out_of_range("compress_pmf: target out of range");
  const int k = static_cast<int>(columns.size());
  if (k > 30) throw CapExceeded("compress_pmf: too many columns");
  const Eigen::Index cells = Eigen::Index{1} << k;
  Vector<double> plus = Vector<double>::Zero(cells), minus = Vector<double>::Zero(cells);
  for (Eigen::Index c = 0; c < pmf.size(); ++c) {
    const auto cfg = static_cast<std::uint64_t>(c);
    std::uint64_t cell = 0;
    for (int b = 0; b < k; ++b)
      if ((cfg >> columns[b]) & 1U) cell |= (std::uint64_t{1} << b);
    (spin_at(cfg, target) > 0 ? plus : minus)(static_cast<Eigen::Index>(cell)) += pmf(c);
  }
  PatternTable out;
  out.patterns.resize(cells, k);
  for (Eigen::Index cell = 0; cell < cells; ++cell)
    for (int b = 0; b < k; ++b) out.patterns(cell, b) = static_cast<std::int8_t>(spin_at(static_cast<std::uint64_t>(cell), b));
  out.weight_plus = std::move(plus);
  out.weight_minus = std::move(minus);
  return out;
}

void write_dataset(std::ostream& out, const SpinDataset& data) {
  out << "# spins n=" << data.n() << " m=" << data.m() << " labels=" << (data.has_labels() ? 1 : 0) << '\n';
  for (int r = 0; r < data.m(); ++r) {
    for (int c = 0; c < data.n(); ++c) {
      if (c) out << ' ';
      out << (data.spin(r, c) > 0 ? "+1" : "-1");
    }
    if (data.has_labels()) out << ' ' << (data.label(r) > 0 ? "+1" : "-1");
    out << '\n';
  }
}

SpinDataset read_dataset(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("dataset: missing header line");
  int n = -1, m = -1, labels = -1;
  {
    std::istringstream hs(header);
    std::string hash, kind, tok;
    hs >> hash >> kind;
    if (hash != "#" || kind != "spins") throw std::runtime_error("dataset: header must start with '# spins'");
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw std::runtime_error("dataset: malformed header token '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const int value = std::stoi(tok.substr(eq + 1));
      if (key == "n") n = value;
      else if (key == "m") m = value;
      else if (key == "labels") labels = value;
    }
  }
  if (n < 1 || m < 0 || (labels != 0 && labels != 1)) throw std::runtime_error("dataset: header needs n, m, labels");
  SpinMatrix rows(m, n);
  std::optional<SpinVector> lab;
  if (labels) lab = SpinVector(m);
  const int width = n + labels;
  std::string line;
  for (int r = 0; r < m; ++r) {
    if (!std::getline(in, line)) throw std::runtime_error("dataset: fewer rows than declared");
    std::istringstream ls(line);
    std::string tok;
    int c = 0;
    while (ls >> tok) {
      int v;
      if (tok == "+1" || tok == "1") v = 1;
      else if (tok == "-1") v = -1;
      else throw std::runtime_error("dataset: row " + std::to_string(r + 1) + " has non-spin token '" + tok + "'");
      if (c >= width) throw std::runtime_error("dataset: row " + std::to_string(r + 1) + " is too long");
      if (c < n) rows(r, c) = static_cast<std::int8_t>(v);
      else (*lab)(r) = static_cast<std::int8_t>(v);
      ++c;
    }
    if (c != width) throw std::runtime_error("dataset: row " + std::to_string(r + 1) + " is too short");
  }
  return SpinDataset(std::move(rows), std::move(lab));
}

void save_dataset(const std::string& path, const SpinDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_dataset(out, data);
}

SpinDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_dataset(in);
}

}  // namespace rbmlearn
