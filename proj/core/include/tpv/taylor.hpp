#pragma once

#include <map>
#include <optional>
#include <vector>

#include "tpv/polymatrix.hpp"

namespace tpv {

/// Truncated Taylor basis at center omega: the polynomial vector z(x) with
/// entries (x-omega)^alpha / alpha! for |alpha| <= k in graded lex order,
/// so z(omega) = e_1 and n_z = C(n+k, k).
struct TaylorBasis {
  Vec omega;
  unsigned order = 0;
  std::vector<MultiIndex> indices;
  std::vector<Polynomial> z;

  std::size_t n() const { return static_cast<std::size_t>(omega.size()); }
  std::size_t nz() const { return z.size(); }
  Vec eval(const Vec& x) const;
  /// dz/dx_j, entrywise.
  std::vector<Polynomial> partial(std::size_t j) const;
};

/// With drop_zero_order the constant entry is omitted, which encodes the
/// prior f(omega) = 0: every coefficient matrix in the envelope then maps
/// omega to zero, as needed for certificates at a known equilibrium.
TaylorBasis build_basis(const Vec& omega, unsigned k,
                        bool drop_zero_order = false);

/// Known upper bounds M_{i,alpha} >= 0 on the magnitude of the (k+1)-st
/// order partial derivatives of each output.
class DerivativeBounds {
 public:
  DerivativeBounds() : nvars_(0), k_(0) {}
  DerivativeBounds(std::size_t ny, std::size_t nvars, unsigned k);
  /// All bounds equal to m.
  static DerivativeBounds uniform(std::size_t ny, std::size_t nvars,
                                  unsigned k, double m);

  std::size_t ny() const { return per_output_.size(); }
  std::size_t nvars() const { return nvars_; }
  unsigned order() const { return k_; }

  void set(std::size_t i, const MultiIndex& alpha, double m);
  double get(std::size_t i, const MultiIndex& alpha) const;
  /// Number of nonzero M_{i,alpha}, |alpha| = k+1.
  std::size_t kappa(std::size_t i) const;
  const std::map<MultiIndex, double, GradedLexLess>& row(std::size_t i) const {
    return per_output_[i];
  }
  /// Uniformly rescale all bounds.
  DerivativeBounds scaled(double factor) const;

 private:
  std::size_t nvars_;
  unsigned k_;
  std::vector<std::map<MultiIndex, double, GradedLexLess>> per_output_;
};

/// ( sum_{|alpha|=k+1} M_{i,alpha}/alpha! * |(x-omega)^alpha| )^2.
/// Upper bound on the squared Lagrange remainder of output i.
double remainder_abs(const DerivativeBounds& bounds, const TaylorBasis& basis,
                     std::size_t i, const Vec& x);

/// sum_{|alpha|=k+1} kappa_i M_{i,alpha}^2 / alpha!^2 * (x-omega)^{2 alpha},
/// a polynomial upper bound on remainder_abs (only even shifted powers,
/// nonnegative coefficients).
Polynomial remainder_poly(const DerivativeBounds& bounds,
                          const TaylorBasis& basis, std::size_t i);

/// Polynomial bound on the squared (k-1)-order remainder of d f_i / d xi_j:
/// sum_{|alpha|=k} kappa * M_{i,alpha+e_j}^2 (xi-omega)^{2 alpha} / alpha!^2
/// with kappa the number of nonzero M_{i,alpha+e_j}. Requires k >= 1.
Polynomial jacobian_remainder_poly(const DerivativeBounds& bounds,
                                   const TaylorBasis& basis, std::size_t i,
                                   std::size_t j);

/// Sector data for one Taylor center: basis, bounds, the cumulative
/// remainder polynomial and the block matrix Phi = diag(I_ny | -sum R^poly).
struct SectorBound {
  TaylorBasis basis;
  DerivativeBounds bounds;
  Polynomial rpoly_sum;  // sum over outputs of remainder_poly, in x
  std::size_t ny = 0;

  PolyMatrix phi() const;
  /// sum over outputs of remainder_abs at x.
  double rabs_sum(const Vec& x) const;
};

SectorBound make_sector(TaylorBasis basis, DerivativeBounds bounds);

/// p_sec(x, y, A) = ||y - A z(x)||^2 - sum_i R^poly_i(x), as a polynomial in
/// the joint variables (x_1..x_n, y_1..y_ny).
Polynomial sector_polynomial(const SectorBound& sector, const Mat& A);

/// Diagonal remainder matrix for the Jacobian-direction envelope:
/// sum_i pi_i * diag_j( R^poly_{k-1}[d f_i / d xi_j] ), size n x n in xi,
/// with pi_i the number of nonzero per-column remainder polynomials of
/// output i.
PolyMatrix jacobian_remainder_matrix(const SectorBound& sector);

/// Phi~ = diag(I_ny | -jacobian_remainder_matrix), block (ny + n) square.
PolyMatrix phi_tilde(const SectorBound& sector);

/// p~_sec(xi, dxi, y, A) = ||y - A dz/dxi dxi||^2 - dxi^T Rpoly_{k-1} dxi,
/// in joint variables (xi(n), dxi(n), y(ny)). Requires k >= 1.
Polynomial jacobian_sector_polynomial(const SectorBound& sector, const Mat& A);

/// Division-free scaled sector for the lift dx_i * f: polynomial in
/// (xi(n), delta(1), y(ny)) equal to ||y - delta * A z(xi)||^2 -
/// delta^2 * sum_i R^poly_i(xi). At delta = 1 it matches sector_polynomial.
Polynomial scaled_sector_polynomial(const SectorBound& sector, const Mat& A);

}  // namespace tpv
