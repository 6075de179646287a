#pragma once

#include <map>
#include <string>
#include <vector>

#include "rbmlearn/types.hpp"

namespace rbmlearn {

/// Size-major, then lexicographic order on sorted index sets.
struct SubsetOrder {
  bool operator()(const Subset& a, const Subset& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

/// Every S ⊆ {0..n-1} with |S| <= D, in SubsetOrder (empty set first).
class MonomialBasis {
 public:
  static constexpr const char* kOrdering = "size-lex";

  MonomialBasis(int n, int degree);

  int n() const { return n_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(subsets_.size()); }
  const std::vector<Subset>& subsets() const { return subsets_; }
  const Subset& operator[](int k) const { return subsets_[static_cast<std::size_t>(k)]; }

 private:
  int n_;
  int degree_;
  std::vector<Subset> subsets_;
};

/// Σ_{k<=D} C(n, k).
long long monomial_count(int n, int degree);

/// (∏_{i∈S} x_i)_S over the basis.
template <typename Derived>
Vector<double> monomial_features(const MonomialBasis& basis, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != basis.n()) throw std::invalid_argument("monomial_features: input has wrong length");
  Vector<double> out(basis.size());
  for (int k = 0; k < basis.size(); ++k) {
    int prod = 1;
    for (int i : basis[k]) prod *= (x(i) < 0 ? -1 : 1);
    out(k) = prod;
  }
  return out;
}

/// Feature matrix for every row of a ±1 pattern matrix (rows x n).
Matrix<double> monomial_feature_matrix(const MonomialBasis& basis, const SpinMatrix& patterns);

/// Sparse multilinear polynomial Σ_S c_S ∏_{i∈S} x_i over n variables. Absent
/// subsets have coefficient 0; iteration follows SubsetOrder.
class SparsePolynomial {
 public:
  using Terms = std::map<Subset, double, SubsetOrder>;

  SparsePolynomial() = default;
  explicit SparsePolynomial(int n) : n_(n) {}

  int n() const { return n_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  double coefficient(const Subset& s) const;
  /// Sets a coefficient; exact zeros are dropped. Subsets must be sorted and in range.
  void set(Subset s, double value);
  void add(const Subset& s, double value);

  template <typename Derived>
  double operator()(const Eigen::MatrixBase<Derived>& x) const {
    double acc = 0.0;
    for (const auto& [s, c] : terms_) {
      int prod = 1;
      for (int i : s) prod *= (x(i) < 0 ? -1 : 1);
      acc += c * prod;
    }
    return acc;
  }

  double l1_norm(bool include_constant = true) const;
  /// Σ_S |a_S - b_S| over the union of supports, optionally skipping the empty set.
  friend double l1_distance(const SparsePolynomial& a, const SparsePolynomial& b, bool include_constant);

  SparsePolynomial operator-(const SparsePolynomial& other) const;
  SparsePolynomial scaled(double factor) const;

 private:
  int n_ = 0;
  Terms terms_;
};

double l1_distance(const SparsePolynomial& a, const SparsePolynomial& b, bool include_constant = false);

/// Bit mask of a subset; indices must be < 64.
std::uint64_t subset_mask(const Subset& s);

}  // namespace rbmlearn
