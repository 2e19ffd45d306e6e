#pragma once

#include <map>
#include <vector>

#include "tpv/polymatrix.hpp"
#include "tpv/sdp.hpp"

namespace tpv {

/// Affine expression in the scalar decision atoms of a SosProgram.
class LinExpr {
 public:
  LinExpr() = default;
  explicit LinExpr(double c) : const_(c) {}
  static LinExpr atom(std::size_t id, double coeff = 1.0);

  const std::map<std::size_t, double>& terms() const { return terms_; }
  double constant() const { return const_; }
  bool is_constant() const { return terms_.empty(); }
  bool is_zero() const { return terms_.empty() && const_ == 0.0; }

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr operator+(const LinExpr& o) const;
  LinExpr operator-(const LinExpr& o) const;
  LinExpr operator*(double s) const;
  LinExpr operator-() const { return *this * -1.0; }

 private:
  std::map<std::size_t, double> terms_;
  double const_ = 0.0;
};

inline LinExpr operator*(double s, const LinExpr& e) { return e * s; }

/// Polynomial whose coefficients are LinExprs; products with known
/// polynomials stay affine in the decision atoms.
class LinPoly {
 public:
  explicit LinPoly(std::size_t nvars = 0) : nvars_(nvars) {}
  static LinPoly from(const Polynomial& p);
  static LinPoly from_expr(std::size_t nvars, const LinExpr& e);

  std::size_t nvars() const { return nvars_; }
  const std::map<MultiIndex, LinExpr, GradedLexLess>& terms() const {
    return terms_;
  }
  void add_term(const MultiIndex& alpha, const LinExpr& e);
  LinExpr coeff(const MultiIndex& alpha) const;
  unsigned degree() const;

  LinPoly operator+(const LinPoly& o) const;
  LinPoly operator-(const LinPoly& o) const;
  LinPoly& operator+=(const LinPoly& o);
  LinPoly& operator-=(const LinPoly& o);
  LinPoly operator*(const Polynomial& p) const;
  LinPoly operator*(double s) const;

  /// Numeric polynomial after substituting atom values.
  Polynomial substitute(const Vec& atom_values) const;

 private:
  std::size_t nvars_;
  std::map<MultiIndex, LinExpr, GradedLexLess> terms_;
};

class LinPolyMatrix {
 public:
  LinPolyMatrix() : rows_(0), cols_(0), nvars_(0) {}
  LinPolyMatrix(std::size_t rows, std::size_t cols, std::size_t nvars);
  static LinPolyMatrix from(const PolyMatrix& m);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nvars() const { return nvars_; }
  LinPoly& operator()(std::size_t i, std::size_t j);
  const LinPoly& operator()(std::size_t i, std::size_t j) const;
  LinPolyMatrix operator+(const LinPolyMatrix& o) const;
  LinPolyMatrix& operator+=(const LinPolyMatrix& o);
  PolyMatrix substitute(const Vec& atom_values) const;

 private:
  std::size_t rows_, cols_, nvars_;
  std::vector<LinPoly> entries_;
};

/// L(x)^T Q L(x) for a known polynomial map L and affine symmetric Q.
LinPolyMatrix congruence(const PolyMatrix& l, const LinPolyMatrix& q);
/// Known symmetric matrix scaled by an affine polynomial: t(x) * M(x).
LinPolyMatrix scale_matrix(const LinPoly& t, const PolyMatrix& m);

/// Gram-form certificate for one SOS-matrix constraint.
struct GramBlock {
  std::size_t ncomp = 0;  // matrix dimension of the certified target
  /// Row labels of the Gram matrix: (component, monomial).
  std::vector<std::pair<std::size_t, MultiIndex>> basis;
  Mat gram;
  PolyMatrix target;  // numeric target after substituting multipliers
};

struct GramCertificate {
  std::vector<GramBlock> blocks;
};

struct VerifyReport {
  bool pass = false;
  double min_eigenvalue = 0.0;
  double max_residual = 0.0;
};

/// Recomputes the minimum Gram eigenvalue and the max-coefficient residual of
/// target - v^T G v, independently of the solver. Passes iff
/// min eig >= -eig_tol and residual <= res_tol.
VerifyReport verify_certificate(const GramCertificate& cert,
                                double eig_tol = 1e-6, double res_tol = 1e-6);

/// Builder translating SOS-matrix feasibility into the SDP backend contract.
/// Decision atoms are either free scalars or entries of PSD Gram blocks, so
/// all constraint coefficients remain affine by construction.
class SosProgram {
 public:
  /// Fresh free scalar decision variable.
  LinExpr scalar();
  /// Fresh scalar constrained nonnegative (1x1 PSD block).
  LinExpr nonneg();
  /// Free polynomial multiplier over the listed variables (coefficients are
  /// fresh free scalars).
  LinPoly free_multiplier(std::size_t nvars,
                          const std::vector<std::size_t>& vars,
                          unsigned degree);
  /// SOS polynomial multiplier: a fresh Gram form, nonnegative by
  /// construction. Degree must be even.
  LinPoly sos_multiplier(std::size_t nvars,
                         const std::vector<std::size_t>& vars,
                         unsigned degree);

  /// Constrains target (symmetric, affine in atoms) to be an SOS matrix with
  /// Gram monomial half-degree `half_degree` over `vars`. When `reduce` is
  /// set, iteratively drops basis monomials whose square can neither appear
  /// in the target diagonal nor be formed by another basis pair (lossless).
  /// Returns the certificate slot index.
  std::size_t require_sos_matrix(const LinPolyMatrix& target,
                                 unsigned half_degree,
                                 const std::vector<std::size_t>& vars,
                                 bool reduce = false);
  std::size_t require_sos(const LinPoly& target, unsigned half_degree,
                          const std::vector<std::size_t>& vars,
                          bool reduce = false);

  /// All coefficients of p forced to zero.
  void require_zero(const LinPoly& p);
  void require_eq(const LinExpr& e, double rhs);
  void minimize(const LinExpr& objective);

  const SdpProblem& problem() const { return sdp_; }
  std::size_t n_atoms() const { return atoms_.size(); }

  double value(const LinExpr& e, const SdpSolution& sol) const;
  Polynomial value(const LinPoly& p, const SdpSolution& sol) const;
  GramCertificate certificate(const SdpSolution& sol) const;

 private:
  struct Atom {
    bool is_free;
    std::size_t free_index;          // when is_free
    std::size_t block, i, j;         // PSD entry otherwise
  };
  struct SosRecord {
    std::size_t block;
    std::size_t ncomp;
    std::vector<std::pair<std::size_t, MultiIndex>> basis;
    LinPolyMatrix target;
  };

  std::size_t add_free_atom();
  std::size_t add_psd_atom(std::size_t block, std::size_t i, std::size_t j);
  void add_constraint_row(const LinExpr& e, double rhs);
  Vec atom_values(const SdpSolution& sol) const;

  SdpProblem sdp_;
  std::vector<Atom> atoms_;
  std::vector<SosRecord> records_;
};

}  // namespace tpv
