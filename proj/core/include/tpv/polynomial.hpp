#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "tpv/multiindex.hpp"

namespace tpv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Sparse multivariate polynomial with real coefficients. Terms are kept in
/// graded lexicographic order and exact zeros are never stored.
class Polynomial {
 public:
  using TermMap = std::map<MultiIndex, double, GradedLexLess>;

  explicit Polynomial(std::size_t nvars = 0) : nvars_(nvars) {}
  Polynomial(std::size_t nvars, TermMap terms);

  static Polynomial constant(std::size_t nvars, double c);
  /// The variable x_j (0-based).
  static Polynomial variable(std::size_t nvars, std::size_t j);
  static Polynomial monomial(const MultiIndex& alpha, double coeff = 1.0);

  std::size_t nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// Degree of the zero polynomial is 0 by convention.
  unsigned degree() const;
  double coeff(const MultiIndex& alpha) const;
  void set_coeff(const MultiIndex& alpha, double c);
  void add_term(const MultiIndex& alpha, double c);

  double eval(const Vec& x) const;

  Polynomial operator+(const Polynomial& q) const;
  Polynomial operator-(const Polynomial& q) const;
  Polynomial operator*(const Polynomial& q) const;
  Polynomial operator*(double s) const;
  Polynomial operator-() const { return *this * -1.0; }
  Polynomial& operator+=(const Polynomial& q);
  Polynomial& operator-=(const Polynomial& q);

  /// d/dx_j, term-wise.
  Polynomial partial(std::size_t j) const;
  Polynomial pow(unsigned p) const;

  /// Extends the polynomial to `nvars` variables, keeping existing variables
  /// at positions given by `placement` (placement[i] = new index of old
  /// variable i).
  Polynomial embed(std::size_t nvars,
                   const std::vector<std::size_t>& placement) const;

  /// Max |coefficient| difference to another polynomial.
  double coeff_distance(const Polynomial& q) const;
  double max_abs_coeff() const;

  bool operator==(const Polynomial& q) const;
  std::string str() const;

 private:
  std::size_t nvars_;
  TermMap terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

/// Evaluate x^alpha.
double eval_monomial(const MultiIndex& alpha, const Vec& x);

/// Expanded (x_j - c)
Polynomial shifted_variable(std::size_t nvars, std::size_t j, double c);

/// Expanded product over j of (x_j - omega_j)^alpha_j.
Polynomial shifted_monomial(const MultiIndex& alpha, const Vec& omega);

}  // namespace tpv
