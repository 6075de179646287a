#include "rbmlearn/monomials.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rbmlearn {

namespace {

void append_combinations(int n, int k, std::vector<Subset>& out) {
  Subset s(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) s[i] = i;
  while (true) {
    out.push_back(s);
    int pos = k - 1;
    while (pos >= 0 && s[pos] == n - k + pos) --pos;
    if (pos < 0) return;
    ++s[pos];
    for (int j = pos + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  }
}

}  // namespace

long long monomial_count(int n, int degree) {
  long long total = 0, binom = 1;
  for (int k = 0; k <= std::min(n, degree); ++k) {
    total += binom;
    binom = binom * (n - k) / (k + 1);
  }
  return total;
}

MonomialBasis::MonomialBasis(int n, int degree) : n_(n), degree_(degree) {
  if (n < 0 || degree < 0) throw std::invalid_argument("MonomialBasis: n and D must be >= 0");
  if (monomial_count(n, degree) > 50'000'000) throw CapExceeded("MonomialBasis: feature space too large");
  subsets_.reserve(static_cast<std::size_t>(monomial_count(n, degree)));
  subsets_.emplace_back();
  for (int k = 1; k <= std::min(n, degree); ++k) append_combinations(n, k, subsets_);
}

Matrix<double> monomial_feature_matrix(const MonomialBasis& basis, const SpinMatrix& patterns) {
  if (patterns.cols() != basis.n()) throw std::invalid_argument("monomial_feature_matrix: width mismatch");
  Matrix<double> out(patterns.rows(), basis.size());
  for (int k = 0; k < basis.size(); ++k) {
    const Subset& s = basis[k];
    for (Eigen::Index r = 0; r < patterns.rows(); ++r) {
      int prod = 1;
      for (int i : s) prod *= patterns(r, i);
      out(r, k) = prod;
    }
  }
  return out;
}

double SparsePolynomial::coefficient(const Subset& s) const {
  const auto it = terms_.find(s);
  return it == terms_.end() ? 0.0 : it->second;
}

void SparsePolynomial::set(Subset s, double value) {
  if (!std::is_sorted(s.begin(), s.end()) || std::adjacent_find(s.begin(), s.end()) != s.end())
    throw std::invalid_argument("SparsePolynomial: subset must be strictly increasing");
  if (!s.empty() && (s.front() < 0 || s.back() >= n_)) throw std::out_of_range("SparsePolynomial: index out of range");
  if (!std::isfinite(value)) throw std::invalid_argument("SparsePolynomial: non-finite coefficient");
  if (value == 0.0) {
    terms_.erase(s);
  } else {
    terms_[std::move(s)] = value;
  }
}

void SparsePolynomial::add(const Subset& s, double value) { set(s, coefficient(s) + value); }

double SparsePolynomial::l1_norm(bool include_constant) const {
  double out = 0.0;
  for (const auto& [s, c] : terms_)
    if (include_constant || !s.empty()) out += std::abs(c);
  return out;
}

double l1_distance(const SparsePolynomial& a, const SparsePolynomial& b, bool include_constant) {
  double out = 0.0;
  for (const auto& [s, c] : a.terms())
    if (include_constant || !s.empty()) out += std::abs(c - b.coefficient(s));
  for (const auto& [s, c] : b.terms())
    if ((include_constant || !s.empty()) && !a.terms().count(s)) out += std::abs(c);
  return out;
}

SparsePolynomial SparsePolynomial::operator-(const SparsePolynomial& other) const {
  SparsePolynomial out = *this;
  out.n_ = std::max(n_, other.n_);
  for (const auto& [s, c] : other.terms_) out.add(s, -c);
  return out;
}

SparsePolynomial SparsePolynomial::scaled(double factor) const {
  SparsePolynomial out(n_);
  for (const auto& [s, c] : terms_) out.set(s, c * factor);
  return out;
}

std::uint64_t subset_mask(const Subset& s) {
  std::uint64_t mask = 0;
  for (int i : s) {
    if (i < 0 || i >= 64) throw std::out_of_range("subset_mask: index must be < 64");
    mask |= std::uint64_t{1} << i;
  }
  return mask;
}

}  // namespace rbmlearn
