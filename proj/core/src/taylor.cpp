#include "tpv/taylor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tpv {

namespace {

std::vector<std::size_t> identity_placement(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

double shifted_power(const MultiIndex& alpha, const Vec& omega, const Vec& x) {
  double v = 1.0;
  for (std::size_t j = 0; j < alpha.nvars(); ++j) {
    const double d = x[static_cast<Eigen::Index>(j)] -
                     omega[static_cast<Eigen::Index>(j)];
    for (unsigned e = 0; e < alpha[j]; ++e) v *= d;
  }
  return v;
}

}  // namespace

Vec TaylorBasis::eval(const Vec& x) const {
  if (static_cast<std::size_t>(x.size()) != n())
    throw std::invalid_argument("TaylorBasis::eval: dimension mismatch");
  Vec v(static_cast<Eigen::Index>(nz()));
  for (std::size_t i = 0; i < nz(); ++i)
    v[static_cast<Eigen::Index>(i)] =
        shifted_power(indices[i], omega, x) / indices[i].factorial();
  return v;
}

std::vector<Polynomial> TaylorBasis::partial(std::size_t j) const {
  std::vector<Polynomial> d;
  d.reserve(z.size());
  for (const auto& p : z) d.push_back(p.partial(j));
  return d;
}

TaylorBasis build_basis(const Vec& omega, unsigned k, bool drop_zero_order) {
  TaylorBasis b;
  b.omega = omega;
  b.order = k;
  b.indices = enumerate_multi_indices(static_cast<std::size_t>(omega.size()),
                                      drop_zero_order ? 1 : 0, k);
  b.z.reserve(b.indices.size());
  for (const auto& alpha : b.indices)
    b.z.push_back(shifted_monomial(alpha, omega) * (1.0 / alpha.factorial()));
  return b;
}

DerivativeBounds::DerivativeBounds(std::size_t ny, std::size_t nvars,
                                   unsigned k)
    : nvars_(nvars), k_(k), per_output_(ny) {
  if (ny < 1 || nvars < 1)
    throw std::invalid_argument("DerivativeBounds: empty dimensions");
}

DerivativeBounds DerivativeBounds::uniform(std::size_t ny, std::size_t nvars,
                                           unsigned k, double m) {
  DerivativeBounds b(ny, nvars, k);
  for (std::size_t i = 0; i < ny; ++i)
    for (const auto& alpha : enumerate_multi_indices(nvars, k + 1, k + 1))
      b.set(i, alpha, m);
  return b;
}

void DerivativeBounds::set(std::size_t i, const MultiIndex& alpha, double m) {
  if (alpha.nvars() != nvars_ || alpha.degree() != k_ + 1)
    throw std::invalid_argument("DerivativeBounds::set: bad multi-index");
  if (m < 0.0) throw std::invalid_argument("DerivativeBounds::set: m < 0");
  if (m == 0.0)
    per_output_.at(i).erase(alpha);
  else
    per_output_.at(i)[alpha] = m;
}

double DerivativeBounds::get(std::size_t i, const MultiIndex& alpha) const {
  const auto& row = per_output_.at(i);
  auto it = row.find(alpha);
  return it == row.end() ? 0.0 : it->second;
}

std::size_t DerivativeBounds::kappa(std::size_t i) const {
  return per_output_.at(i).size();
}

DerivativeBounds DerivativeBounds::scaled(double factor) const {
  DerivativeBounds b(*this);
  for (auto& row : b.per_output_)
    for (auto& [alpha, m] : row) m *= factor;
  return b;
}

double remainder_abs(const DerivativeBounds& bounds, const TaylorBasis& basis,
                     std::size_t i, const Vec& x) {
  double s = 0.0;
  for (const auto& [alpha, m] : bounds.row(i))
    s += m / alpha.factorial() * std::abs(shifted_power(alpha, basis.omega, x));
  return s * s;
}

Polynomial remainder_poly(const DerivativeBounds& bounds,
                          const TaylorBasis& basis, std::size_t i) {
  Polynomial r(basis.n());
  const double kap = static_cast<double>(bounds.kappa(i));
  for (const auto& [alpha, m] : bounds.row(i)) {
    const double fact = alpha.factorial();
    r += shifted_monomial(alpha.doubled(), basis.omega) *
         (kap * m * m / (fact * fact));
  }
  return r;
}

Polynomial jacobian_remainder_poly(const DerivativeBounds& bounds,
                                   const TaylorBasis& basis, std::size_t i,
                                   std::size_t j) {
  const unsigned k = bounds.order();
  if (k < 1)
    throw std::invalid_argument("jacobian_remainder_poly: requires order >= 1");
  const auto degree_k = enumerate_multi_indices(basis.n(), k, k);
  std::size_t kap = 0;
  for (const auto& alpha : degree_k)
    if (bounds.get(i, alpha.plus_unit(j)) != 0.0) ++kap;
  Polynomial r(basis.n());
  for (const auto& alpha : degree_k) {
    const double m = bounds.get(i, alpha.plus_unit(j));
    if (m == 0.0) continue;
    const double fact = alpha.factorial();
    r += shifted_monomial(alpha.doubled(), basis.omega) *
         (static_cast<double>(kap) * m * m / (fact * fact));
  }
  return r;
}

PolyMatrix SectorBound::phi() const {
  PolyMatrix m(ny + 1, ny + 1, basis.n());
  for (std::size_t i = 0; i < ny; ++i)
    m(i, i) = Polynomial::constant(basis.n(), 1.0);
  m(ny, ny) = -rpoly_sum;
  return m;
}

double SectorBound::rabs_sum(const Vec& x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < ny; ++i) s += remainder_abs(bounds, basis, i, x);
  return s;
}

SectorBound make_sector(TaylorBasis basis, DerivativeBounds bounds) {
  if (bounds.nvars() != basis.n() || bounds.order() != basis.order)
    throw std::invalid_argument("make_sector: basis/bounds mismatch");
  const std::size_t ny = bounds.ny();
  Polynomial rsum(basis.n());
  for (std::size_t i = 0; i < ny; ++i)
    rsum += remainder_poly(bounds, basis, i);
  return SectorBound{std::move(basis), std::move(bounds), std::move(rsum), ny};
}

Polynomial sector_polynomial(const SectorBound& sector, const Mat& A) {
  const std::size_t n = sector.basis.n(), ny = sector.ny,
                    nz = sector.basis.nz();
  if (static_cast<std::size_t>(A.rows()) != ny ||
      static_cast<std::size_t>(A.cols()) != nz)
    throw std::invalid_argument("sector_polynomial: A shape mismatch");
  const auto place = identity_placement(n);
  const std::size_t nj = n + ny;
  Polynomial p(nj);
  for (std::size_t i = 0; i < ny; ++i) {
    Polynomial res = Polynomial::variable(nj, n + i);
    for (std::size_t l = 0; l < nz; ++l) {
      const double a = A(static_cast<Eigen::Index>(i),
                         static_cast<Eigen::Index>(l));
      if (a != 0.0) res -= sector.basis.z[l].embed(nj, place) * a;
    }
    p += res * res;
  }
  p -= sector.rpoly_sum.embed(nj, place);
  return p;
}

PolyMatrix jacobian_remainder_matrix(const SectorBound& sector) {
  const std::size_t n = sector.basis.n(), ny = sector.ny;
  PolyMatrix r(n, n, n);
  for (std::size_t i = 0; i < ny; ++i) {
    std::vector<Polynomial> cols;
    cols.reserve(n);
    std::size_t pi = 0;
    for (std::size_t j = 0; j < n; ++j) {
      cols.push_back(
          jacobian_remainder_poly(sector.bounds, sector.basis, i, j));
      if (!cols.back().is_zero()) ++pi;
    }
    for (std::size_t j = 0; j < n; ++j)
      r(j, j) += cols[j] * static_cast<double>(pi);
  }
  return r;
}

PolyMatrix phi_tilde(const SectorBound& sector) {
  const std::size_t n = sector.basis.n(), ny = sector.ny;
  const PolyMatrix rem = jacobian_remainder_matrix(sector);
  PolyMatrix m(ny + n, ny + n, n);
  for (std::size_t i = 0; i < ny; ++i)
    m(i, i) = Polynomial::constant(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) m(ny + j, ny + j) = -rem(j, j);
  return m;
}

Polynomial jacobian_sector_polynomial(const SectorBound& sector,
                                      const Mat& A) {
  const std::size_t n = sector.basis.n(), ny = sector.ny,
                    nz = sector.basis.nz();
  if (static_cast<std::size_t>(A.rows()) != ny ||
      static_cast<std::size_t>(A.cols()) != nz)
    throw std::invalid_argument("jacobian_sector_polynomial: A shape mismatch");
  const auto place = identity_placement(n);
  const std::size_t nj = n + n + ny;  // (xi, dxi, y)
  Polynomial p(nj);
  for (std::size_t i = 0; i < ny; ++i) {
    Polynomial res = Polynomial::variable(nj, 2 * n + i);
    for (std::size_t j = 0; j < n; ++j) {
      Polynomial row(n);
      for (std::size_t l = 0; l < nz; ++l) {
        const double a = A(static_cast<Eigen::Index>(i),
                           static_cast<Eigen::Index>(l));
        if (a != 0.0) row += sector.basis.z[l].partial(j) * a;
      }
      res -= row.embed(nj, place) * Polynomial::variable(nj, n + j);
    }
    p += res * res;
  }
  const PolyMatrix rem = jacobian_remainder_matrix(sector);
  for (std::size_t j = 0; j < n; ++j) {
    const Polynomial dj = Polynomial::variable(nj, n + j);
    p -= rem(j, j).embed(nj, place) * dj * dj;
  }
  return p;
}

Polynomial scaled_sector_polynomial(const SectorBound& sector, const Mat& A) {
  const std::size_t n = sector.basis.n(), ny = sector.ny,
                    nz = sector.basis.nz();
  if (static_cast<std::size_t>(A.rows()) != ny ||
      static_cast<std::size_t>(A.cols()) != nz)
    throw std::invalid_argument("scaled_sector_polynomial: A shape mismatch");
  const auto place = identity_placement(n);
  const std::size_t nj = n + 1 + ny;  // (xi, delta, y)
  const Polynomial delta = Polynomial::variable(nj, n);
  Polynomial p(nj);
  for (std::size_t i = 0; i < ny; ++i) {
    Polynomial model(n);
    for (std::size_t l = 0; l < nz; ++l) {
      const double a = A(static_cast<Eigen::Index>(i),
                         static_cast<Eigen::Index>(l));
      if (a != 0.0) model += sector.basis.z[l] * a;
    }
    Polynomial res =
        Polynomial::variable(nj, n + 1 + i) - model.embed(nj, place) * delta;
    p += res * res;
  }
  p -= sector.rpoly_sum.embed(nj, place) * delta * delta;
  return p;
}

}  // namespace tpv
