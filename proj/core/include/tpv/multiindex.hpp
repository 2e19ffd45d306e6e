#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace tpv {

/// Exponent vector of a monomial, one natural number per variable.
/// Ordering throughout the library is graded lexicographic: lower total
/// degree first, and within a degree the lexicographically larger exponent
/// vector first, so for two variables the order is
/// 1, x1, x2, x1^2, x1*x2, x2^2, ...
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<unsigned> exponents);
  static MultiIndex zero(std::size_t nvars);
  static MultiIndex unit(std::size_t nvars, std::size_t j);

  std::size_t nvars() const { return exponents_.size(); }
  unsigned operator[](std::size_t i) const { return exponents_[i]; }
  const std::vector<unsigned>& exponents() const { return exponents_; }

  /// |alpha| = sum of exponents.
  unsigned degree() const;

  /// alpha! = product of per-variable factorials. Guarded against overflow:
  /// throws std::overflow_error for |alpha| > 12.
  double factorial() const;

  MultiIndex plus(const MultiIndex& other) const;
  /// alpha + e_j
  MultiIndex plus_unit(std::size_t j) const;
  /// alpha - e_j; throws if exponent j is zero.
  MultiIndex minus_unit(std::size_t j) const;
  /// 2*alpha
  MultiIndex doubled() const;

  bool operator==(const MultiIndex& other) const = default;
  std::string str() const;

 private:
  std::vector<unsigned> exponents_;
};

/// Graded lexicographic "comes before" predicate.
bool graded_lex_less(const MultiIndex& a, const MultiIndex& b);

struct GradedLexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    return graded_lex_less(a, b);
  }
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& m) const {
    std::size_t h = m.nvars();
    for (unsigned e : m.exponents()) h = h * 1000003u + e + 1;
    return h;
  }
};

/// All alpha with dmin <= |alpha| <= dmax over n variables, in graded
/// lexicographic order. Count per degree d is C(n+d-1, d).
std::vector<MultiIndex> enumerate_multi_indices(std::size_t n, unsigned dmin,
                                                unsigned dmax);

/// Binomial coefficient as double (exact for the small arguments used here).
double binomial(unsigned n, unsigned k);

}  // namespace tpv
