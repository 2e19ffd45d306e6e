#include <cmath>
#include <random>

#include "doctest.h"
#include "tpv/taylor.hpp"

using namespace tpv;

namespace {

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("basis at omega=0, k=1, n=2") {
  const TaylorBasis b = build_basis(Vec::Zero(2), 1);
  REQUIRE(b.nz() == 3);
  CHECK(b.z[0] == Polynomial::constant(2, 1.0));
  CHECK(b.z[1] == Polynomial::variable(2, 0));
  CHECK(b.z[2] == Polynomial::variable(2, 1));
}

TEST_CASE("basis at omega=1, k=2, n=1") {
  const TaylorBasis b = build_basis(v1(1.0), 2);
  REQUIRE(b.nz() == 3);
  const Polynomial xm1 = shifted_variable(1, 0, 1.0);
  CHECK(b.z[0] == Polynomial::constant(1, 1.0));
  CHECK(b.z[1] == xm1);
  CHECK(b.z[2].coeff_distance(xm1 * xm1 * 0.5) <= 1e-15);
}

TEST_CASE("basis evaluated at its center is e1") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (unsigned k = 0; k <= 3; ++k) {
    const Vec omega = v2(u(rng), u(rng));
    const TaylorBasis b = build_basis(omega, k);
    const Vec z = b.eval(omega);
    CHECK(z[0] == doctest::Approx(1.0));
    CHECK(z.tail(z.size() - 1).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(b.nz() ==
          static_cast<std::size_t>(binomial(2 + k, k)));
  }
}

TEST_CASE("squared remainder bound, absolute form") {
  // n=1, k=1, single index alpha=2 with M=3: (3/2 * |x|^2)^2 at x=1.
  const TaylorBasis b = build_basis(Vec::Zero(1), 1);
  DerivativeBounds m(1, 1, 1);
  m.set(0, MultiIndex({2}), 3.0);
  CHECK(remainder_abs(m, b, 0, v1(1.0)) == doctest::Approx(2.25));

  const DerivativeBounds zero(1, 1, 1);
  CHECK(remainder_abs(zero, b, 0, v1(0.7)) == doctest::Approx(0.0));

  // n=2, k=0, two first-order indices with M=1 each.
  const TaylorBasis b0 = build_basis(Vec::Zero(2), 0);
  const DerivativeBounds ones = DerivativeBounds::uniform(1, 2, 0, 1.0);
  CHECK(remainder_abs(ones, b0, 0, v2(1.0, 0.0)) == doctest::Approx(1.0));
}

TEST_CASE("squared remainder bound, polynomial form") {
  const TaylorBasis b = build_basis(Vec::Zero(1), 1);
  DerivativeBounds m(1, 1, 1);
  m.set(0, MultiIndex({2}), 3.0);
  const Polynomial r = remainder_poly(m, b, 0);
  CHECK(r == Polynomial::monomial(MultiIndex({4}), 2.25));
  CHECK(r.eval(v1(1.0)) == doctest::Approx(remainder_abs(m, b, 0, v1(1.0))));

  const TaylorBasis b0 = build_basis(Vec::Zero(2), 0);
  const DerivativeBounds ones = DerivativeBounds::uniform(1, 2, 0, 1.0);
  const Polynomial r0 = remainder_poly(ones, b0, 0);
  CHECK(r0.coeff(MultiIndex({2, 0})) == doctest::Approx(2.0));
  CHECK(r0.coeff(MultiIndex({0, 2})) == doctest::Approx(2.0));
  CHECK(r0.eval(v2(1.0, 0.0)) == doctest::Approx(2.0));

  CHECK(remainder_poly(DerivativeBounds(1, 1, 1), b, 0).is_zero());
}

TEST_CASE("remainder ordering on analytic functions") {
  // True squared Lagrange remainder <= absolute bound <= polynomial bound.
  struct Case {
    double (*f)(double);
    std::vector<double> deriv_at0;  // f, f', f'', ... for the Taylor part
    double m;                       // bound on |f^(k+1)| over [-1, 1]
  };
  const auto tanh2 = [](double x) { return std::tanh(x); };
  // |d^3 tanh / dx^3| <= 2 on R; |sin''| <= 1; |exp'''| <= e on [-1,1].
  const std::vector<Case> cases = {
      {std::sin, {0.0, 1.0}, 1.0},
      {std::exp, {1.0, 1.0, 1.0}, std::exp(1.0)},
      {tanh2, {0.0, 1.0, 0.0}, 2.0},
  };
  for (const auto& c : cases) {
    const unsigned k = static_cast<unsigned>(c.deriv_at0.size()) - 1;
    const TaylorBasis b = build_basis(Vec::Zero(1), k);
    const DerivativeBounds m = DerivativeBounds::uniform(1, 1, k, c.m);
    const Polynomial rp = remainder_poly(m, b, 0);
    for (int g = -20; g <= 20; ++g) {
      const double x = g / 20.0;
      double taylor = 0.0;
      for (std::size_t d = 0; d < c.deriv_at0.size(); ++d)
        taylor += c.deriv_at0[d] * std::pow(x, static_cast<double>(d)) /
                  MultiIndex({static_cast<unsigned>(d)}).factorial();
      const double true_sq = std::pow(c.f(x) - taylor, 2.0);
      const double rabs = remainder_abs(m, b, 0, v1(x));
      CHECK(true_sq <= rabs + 1e-9);
      CHECK(rabs <= rp.eval(v1(x)) + 1e-9);
    }
  }
}

TEST_CASE("sector vanishes for an exactly representable polynomial") {
  // f(x) = 2 - x + 0.5 x^2 has exact degree-2 Taylor coefficients.
  const TaylorBasis b = build_basis(Vec::Zero(1), 2);
  const SectorBound s = make_sector(b, DerivativeBounds(1, 1, 2));
  Mat A(1, 3);
  A << 2.0, -1.0, 1.0;  // a2 multiplies x^2/2
  const Polynomial p = sector_polynomial(s, A);
  for (int g = -10; g <= 10; ++g) {
    const double x = g / 5.0;
    const double fx = 2.0 - x + 0.5 * x * x;
    CHECK(std::abs(p.eval(v2(x, fx))) <= 1e-12);
  }
}

TEST_CASE("sector band contains sin on a grid") {
  const TaylorBasis b = build_basis(Vec::Zero(1), 1);
  const SectorBound s =
      make_sector(b, DerivativeBounds::uniform(1, 1, 1, 1.0));
  Mat A(1, 2);
  A << 0.0, 1.0;
  const Polynomial p = sector_polynomial(s, A);
  for (int g = -20; g <= 20; ++g) {
    const double x = g / 20.0;
    CHECK(p.eval(v2(x, std::sin(x))) <= 1e-12);
  }
  // Far outside the band the sector is positive.
  CHECK(p.eval(v2(0.0, 10.0)) > 0.0);
}

TEST_CASE("sector is quadratic in y with unit curvature") {
  const TaylorBasis b = build_basis(Vec::Zero(2), 1);
  const SectorBound s =
      make_sector(b, DerivativeBounds::uniform(2, 2, 1, 0.5));
  Mat A = Mat::Random(2, 3);
  const Polynomial p = sector_polynomial(s, A);
  // Second difference in each y direction equals 2 everywhere.
  Vec base(4);
  base << 0.3, -0.2, 0.7, 0.1;
  const double h = 0.25;
  for (int yi = 2; yi < 4; ++yi) {
    Vec up = base, dn = base;
    up[yi] += h;
    dn[yi] -= h;
    const double second =
        (p.eval(up) - 2.0 * p.eval(base) + p.eval(dn)) / (h * h);
    CHECK(second == doctest::Approx(2.0));
  }
}

TEST_CASE("derivative remainder bound") {
  const TaylorBasis b = build_basis(Vec::Zero(1), 1);
  DerivativeBounds m(1, 1, 1);
  m.set(0, MultiIndex({2}), 3.0);
  // Single alpha with |alpha| = k = 1 contributes 9 x^2.
  const Polynomial r = jacobian_remainder_poly(m, b, 0, 0);
  CHECK(r == Polynomial::monomial(MultiIndex({2}), 9.0));
  CHECK(jacobian_remainder_poly(DerivativeBounds(1, 1, 1), b, 0, 0).is_zero());

  // n=2, k=2: number of terms equals #{|alpha|=2 with M_{alpha+e_j} != 0}.
  const TaylorBasis b2 = build_basis(Vec::Zero(2), 2);
  DerivativeBounds m2(1, 2, 2);
  m2.set(0, MultiIndex({3, 0}), 1.0);
  m2.set(0, MultiIndex({1, 2}), 2.0);
  const Polynomial rj = jacobian_remainder_poly(m2, b2, 0, 0);
  // alpha = (2,0) and (0,2) hit the nonzero pattern for j = 0.
  CHECK(rj.terms().size() == 2);
}

TEST_CASE("derivative sector for a linear map vanishes") {
  const TaylorBasis b = build_basis(Vec::Zero(1), 1);
  const SectorBound s = make_sector(b, DerivativeBounds(1, 1, 1));
  Mat A(1, 2);
  A << 0.5, -2.0;
  const Polynomial p = jacobian_sector_polynomial(s, A);
  // Variables (xi, dxi, y); f' = -2 so y = -2 dxi lies on the band center.
  for (int g = -5; g <= 5; ++g) {
    Vec pt(3);
    pt << 0.3 * g, 0.2 * g, -0.4 * g;
    CHECK(std::abs(p.eval(pt)) <= 1e-12);
  }
}

TEST_CASE("derivative sector reduces to ||y||^2 at dxi = 0") {
  const TaylorBasis b = build_basis(Vec::Zero(1), 2);
  const SectorBound s =
      make_sector(b, DerivativeBounds::uniform(1, 1, 2, 1.0));
  Mat A(1, 3);
  A << 0.0, 1.0, 0.0;
  const Polynomial p = jacobian_sector_polynomial(s, A);
  Vec pt(3);
  pt << 0.8, 0.0, 1.7;
  CHECK(p.eval(pt) == doctest::Approx(1.7 * 1.7));
}

TEST_CASE("derivative band contains cos(x) dx for sin") {
  // k=2 model of sin at 0 is x; its derivative band must contain cos(x) dx.
  const TaylorBasis b = build_basis(Vec::Zero(1), 2);
  const SectorBound s =
      make_sector(b, DerivativeBounds::uniform(1, 1, 2, 1.0));
  Mat A(1, 3);
  A << 0.0, 1.0, 0.0;
  const Polynomial p = jacobian_sector_polynomial(s, A);
  for (int g = -10; g <= 10; ++g)
    for (int d = -4; d <= 4; ++d) {
      Vec pt(3);
      pt << g / 10.0, d / 4.0, std::cos(g / 10.0) * (d / 4.0);
      CHECK(p.eval(pt) <= 1e-12);
    }
}

TEST_CASE("scaled sector agrees with the plain sector at delta = 1") {
  const TaylorBasis b = build_basis(v1(0.2), 2);
  const SectorBound s =
      make_sector(b, DerivativeBounds::uniform(1, 1, 2, 0.7));
  Mat A(1, 3);
  A << 1.0, 0.3, -0.1;
  const Polynomial scaled = scaled_sector_polynomial(s, A);
  const Polynomial plain = sector_polynomial(s, A);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    const double x = u(rng), y = u(rng), d = u(rng);
    Vec pd(3), pp(2);
    pd << x, 1.0, y;
    pp << x, y;
    CHECK(scaled.eval(pd) == doctest::Approx(plain.eval(pp)));
    // delta = 0 reduces to ||y||^2.
    Vec p0(3);
    p0 << x, 0.0, y;
    CHECK(scaled.eval(p0) == doctest::Approx(y * y));
    // Joint sign flip of (delta, y) leaves the value unchanged.
    Vec pa(3), pb(3);
    pa << x, d, y;
    pb << x, -d, -y;
    CHECK(scaled.eval(pa) == doctest::Approx(scaled.eval(pb)));
  }
}

TEST_CASE("phi blocks") {
  const TaylorBasis b = build_basis(Vec::Zero(2), 1);
  const SectorBound s =
      make_sector(b, DerivativeBounds::uniform(2, 2, 1, 1.0));
  const PolyMatrix phi = s.phi();
  CHECK(phi.rows() == 3);
  CHECK(phi(0, 0) == Polynomial::constant(2, 1.0));
  CHECK(phi(1, 1) == Polynomial::constant(2, 1.0));
  CHECK(phi(2, 2) == -s.rpoly_sum);
  CHECK(phi(0, 1).is_zero());

  const PolyMatrix pt = phi_tilde(s);
  CHECK(pt.rows() == 4);
  const PolyMatrix rem = jacobian_remainder_matrix(s);
  CHECK(pt(2, 2) == -rem(0, 0));
  CHECK(pt(3, 3) == -rem(1, 1));
}
