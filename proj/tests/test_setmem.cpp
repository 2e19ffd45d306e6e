#include <Eigen/Eigenvalues>
#include <random>

#include "doctest.h"
#include "tpv/setmem.hpp"

using namespace tpv;

namespace {

// Synthetic linear-in-z data: y = A z(x) + noise with |noise| <= eps, built
// over a degree-k basis so the true coefficients are exactly recoverable.
struct Fixture {
  SectorBound sector;
  Mat a_true;
  std::vector<Sample> samples;
  EllipsoidData data;
};

Fixture make_fixture(std::mt19937& rng, std::size_t n, unsigned k,
                     std::size_t ny, std::size_t ns, double eps) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TaylorBasis basis = build_basis(Vec::Zero(n), k);
  // Zero derivative bounds: the truth is an exact degree-k polynomial.
  DerivativeBounds bounds(ny, n, k);
  Fixture f{make_sector(std::move(basis), std::move(bounds)), Mat(), {}, {}};
  const std::size_t nz = f.sector.basis.nz();
  f.a_true = Mat(ny, nz);
  for (Eigen::Index i = 0; i < f.a_true.rows(); ++i)
    for (Eigen::Index j = 0; j < f.a_true.cols(); ++j) f.a_true(i, j) = u(rng);
  for (std::size_t s = 0; s < ns; ++s) {
    Sample smp;
    smp.x = Vec::NullaryExpr(n, [&](Eigen::Index) { return u(rng); });
    Vec noise = Vec::NullaryExpr(ny, [&](Eigen::Index) { return u(rng); });
    if (noise.norm() > 0) noise *= (0.9 * eps / noise.norm());
    smp.y = f.a_true * f.sector.basis.eval(smp.x) + noise;
    smp.eps = eps;
    f.samples.push_back(std::move(smp));
  }
  f.data = envelope_data(f.samples, f.sector);
  return f;
}

}  // namespace

TEST_CASE("q combines remainder and noise bounds") {
  CHECK(compute_q(4.0, 1.0) == doctest::Approx(9.0));
  CHECK(compute_q(0.0, 0.5) == doctest::Approx(0.25));
  CHECK(compute_q(0.0, 0.0) == doctest::Approx(1e-12));  // degenerate lift
  CHECK_THROWS_AS(compute_q(-1.0, 0.1), std::invalid_argument);
}

TEST_CASE("single-sample quadratic constraint block") {
  Vec z(1), y(1);
  z << 1.0;
  y << 2.0;
  const Mat d = delta_block(z, y, 9.0);
  CHECK(d(0, 0) == doctest::Approx(1.0));
  CHECK(d(0, 1) == doctest::Approx(-2.0));
  CHECK(d(1, 0) == doctest::Approx(-2.0));
  CHECK(d(1, 1) == doctest::Approx(4.0 - 9.0));
  // [A^T; I]^T Delta [A^T; I] recovers ||y - Az||^2 - q for scalar a.
  for (double a : {0.0, 1.0, 5.0, -1.0}) {
    Vec lift(2);
    lift << a, 1.0;
    const double v = lift.dot(d * lift);
    const double ref = (2.0 - a) * (2.0 - a) - 9.0;
    CHECK(v == doctest::Approx(ref));
  }
}

TEST_CASE("rank check on a univariate sample grid") {
  const TaylorBasis basis = build_basis(Vec::Zero(1), 2);
  auto zs_at = [&](std::initializer_list<double> pts) {
    std::vector<Vec> zs;
    for (double p : pts) zs.push_back(basis.eval((Vec(1) << p).finished()));
    return zs;
  };
  CHECK(rank_check(zs_at({0.0, 1.0, 2.0})).full_row_rank);
  CHECK_FALSE(rank_check(zs_at({0.0, 1.0})).full_row_rank);  // too few points
  CHECK_FALSE(rank_check(zs_at({1.0, 1.0, 1.0})).full_row_rank);  // repeated
  CHECK_FALSE(rank_check({}).full_row_rank);
}

TEST_CASE("interval geometry from one scalar constraint") {
  // (6 - 2a)^2 <= 1 describes a in [2.5, 3.5].
  EllipsoidData data;
  data.nz = 1;
  data.ny = 1;
  data.z = {(Vec(1) << 2.0).finished()};
  data.y = {(Vec(1) << 6.0).finished()};
  data.q = {1.0};
  const EllipsoidResult res = solve_outer_ellipsoid(data);
  REQUIRE(res.feasible);
  CHECK(res.ell.gamma > 0.0);
  auto member = [&](double a) {
    return membership(res.ell, (Mat(1, 1) << a).finished());
  };
  CHECK(member(3.0));
  CHECK(member(2.51));
  CHECK(member(3.49));
  CHECK_FALSE(member(2.3));
  CHECK_FALSE(member(3.7));
  // Residual |6 - 2a| spans [0, 1] over the true interval; the outer
  // ellipsoid must reach 0 and cannot stop short of 1.
  const ResidualRange rr = residual_range(res.ell, data.z[0], data.y[0]);
  CHECK(rr.min() <= 1e-3);
  CHECK(rr.center + rr.radius >= 1.0 - 1e-6);
  CHECK(rr.center + rr.radius <= 1.5);  // and stays reasonably tight
}

TEST_CASE("witness feasibility over random consistent datasets") {
  std::mt19937 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 1 + rep % 2, ny = 1 + rep % 3;
    const unsigned k = 1 + rep % 2;
    const std::size_t nz =
        static_cast<std::size_t>(binomial(static_cast<unsigned>(n) + k, k));
    Fixture f = make_fixture(rng, n, k, ny, 3 * nz + 8, 0.05);
    REQUIRE(rank_check(f.data.z).full_row_rank);
    const EllipsoidResult res = solve_outer_ellipsoid(f.data);
    REQUIRE_MESSAGE(res.feasible, res.diagnostic);
    CHECK(res.ell.eta.minCoeff() >= -1e-7);
    CHECK(membership(res.ell, f.a_true, 1e-6));
  }
}

TEST_CASE("soundness: every data-consistent matrix is a member") {
  std::mt19937 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  std::size_t consistent_seen = 0;
  for (int rep = 0; rep < 8; ++rep) {
    Fixture f = make_fixture(rng, 1, 2, 1, 10, 0.2);
    const EllipsoidResult res = solve_outer_ellipsoid(f.data);
    REQUIRE(res.feasible);
    auto consistent = [&](const Mat& a) {
      for (std::size_t i = 0; i < f.data.z.size(); ++i) {
        const double r = (f.data.y[i] - a * f.data.z[i]).squaredNorm();
        if (r > f.data.q[i]) return false;
      }
      return true;
    };
    for (int draw = 0; draw < 400; ++draw) {
      // Mix of small perturbations (usually consistent) and larger ones
      // probing the edge of the consistent set.
      const double scale = (draw % 3 == 0) ? 0.1 : 0.01;
      Mat a = f.a_true;
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
          a(i, j) += scale * g(rng);
      if (!consistent(a)) continue;
      ++consistent_seen;
      CHECK(membership(res.ell, a, 1e-6));
    }
    // Far-away matrices violate the data and must be excluded.
    CHECK_FALSE(membership(res.ell, 100.0 * f.a_true + Mat::Ones(1, 3)));
  }
  CHECK(consistent_seen > 50);  // the rejection sampler actually exercised it
}

TEST_CASE("members parameterized by the contraction reach the residual range") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Fixture f = make_fixture(rng, 2, 1, 2, 14, 0.1);
  const EllipsoidResult res = solve_outer_ellipsoid(f.data);
  REQUIRE(res.feasible);
  const CoefficientEllipsoid& e = res.ell;

  // A is a member iff || D^{1/2} A^T + D^{-1/2} delta2p || <= 1 with
  // D = delta1p, so drawing B with ||B|| <= 1 sweeps the whole set.
  Eigen::SelfAdjointEigenSolver<Mat> es(e.delta1p);
  const Mat d_half = es.operatorSqrt();
  const Mat d_inv_half = es.operatorInverseSqrt();
  const Vec x = (Vec(2) << 0.3, -0.4).finished();
  const Vec z = f.sector.basis.eval(x);
  const Vec y = f.a_true * z;
  const ResidualRange rr = residual_range(e, z, y);

  double best = 1e30, worst = -1e30;
  for (int draw = 0; draw < 300; ++draw) {
    Mat b(e.nz, e.ny);
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      for (Eigen::Index j = 0; j < b.cols(); ++j) b(i, j) = u(rng);
    const double nrm = b.norm();
    if (nrm > 1.0) b /= nrm;
    const Mat a = (d_inv_half * (b - d_inv_half * e.delta2p)).transpose();
    CHECK(membership(e, a, 1e-7));
    const double r = (y - a * z).norm();
    best = std::min(best, r);
    worst = std::max(worst, r);
    CHECK(r >= rr.min() - 1e-7);
    CHECK(r <= rr.center + rr.radius + 1e-7);
  }
  // The optimal contraction attains the closed-form minimum exactly.
  const Vec w = d_inv_half * z;
  const Vec ybar = y + e.delta2p.transpose() * e.delta1p.ldlt().solve(z);
  Mat b_opt = Mat::Zero(e.nz, e.ny);
  if (w.norm() > 0 && ybar.norm() > 0) {
    const double t = std::min(1.0, ybar.norm() / w.norm());
    b_opt = t * (w / w.norm()) * (ybar.transpose() / ybar.norm());
  }
  const Mat a_opt = (d_inv_half * (b_opt - d_inv_half * e.delta2p)).transpose();
  CHECK((y - a_opt * z).norm() == doctest::Approx(rr.min()).epsilon(1e-6));
}

TEST_CASE("minimized sector value matches a direct sweep") {
  std::mt19937 rng(17);
  Fixture f = make_fixture(rng, 1, 2, 1, 9, 0.05);
  const EllipsoidResult res = solve_outer_ellipsoid(f.data);
  REQUIRE(res.feasible);
  const Vec x = (Vec(1) << 0.45).finished();
  const Vec y = f.a_true * f.sector.basis.eval(x);
  // The true matrix is a member, so the minimum over the set is <= its own
  // sector value (which is <= 0 at consistent points).
  const double m = min_sector_over_ellipsoid(res.ell, f.sector, x, y);
  const double at_true =
      (y - f.a_true * f.sector.basis.eval(x)).squaredNorm() -
      f.sector.rpoly_sum.eval(x);
  CHECK(m <= at_true + 1e-9);
  CHECK(m <= 0.0 + 1e-9);
}

TEST_CASE("primal and dual ellipsoid descriptions agree") {
  std::mt19937 rng(19);
  Fixture f = make_fixture(rng, 1, 1, 2, 8, 0.1);
  const EllipsoidResult res = solve_outer_ellipsoid(f.data);
  REQUIRE(res.feasible);
  const CoefficientEllipsoid& e = res.ell;
  const Mat dp = e.delta_p();
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int draw = 0; draw < 50; ++draw) {
    Mat a(e.ny, e.nz);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        a(i, j) = f.a_true(i, j) + u(rng);
    Mat lift(e.nz + e.ny, e.ny);
    lift.topRows(e.nz) = a.transpose();
    lift.bottomRows(e.ny) = Mat::Identity(e.ny, e.ny);
    const double primal =
        Eigen::SelfAdjointEigenSolver<Mat>(lift.transpose() * dp * lift)
            .eigenvalues()
            .maxCoeff();
    CHECK(membership(e, a, 1e-7) == (primal <= 1e-7));
  }
}

TEST_CASE("singleton ellipsoid pins the coefficient matrix") {
  Mat a_star(1, 3);
  a_star << 0.5, -1.0, 2.0;
  const CoefficientEllipsoid e = singleton_ellipsoid(a_star, 1e-3);
  CHECK(membership(e, a_star));
  Mat off = a_star;
  off(0, 1) += 0.01;  // outside the 1e-3 spectral radius
  CHECK_FALSE(membership(e, off));
  Mat nearby = a_star;
  nearby(0, 2) += 5e-4;
  CHECK(membership(e, nearby));

  // The residual over the collapsed set is essentially the residual at the
  // center.
  const Vec z = (Vec(3) << 1.0, 0.3, 0.09).finished();
  const Vec y = a_star * z + Vec::Constant(1, 0.2);
  const ResidualRange rr = residual_range(e, z, y);
  CHECK(rr.center == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(rr.radius <= 2e-3);
}

TEST_CASE("structured data subtracts offsets and bounds per output") {
  // y = theta0 * x^2 + f(x) with f unknown, first-order Taylor model.
  StructureSpec spec;
  spec.nvars = 1;
  spec.n_scalar = 1;
  SharedNonlinearity nl{"f", {0}, 1, DerivativeBounds::uniform(1, 1, 1, 1.0)};
  spec.nonlinearities.push_back(nl);
  StructuredOutput out;
  out.offset = Polynomial::constant(1, 0.25);
  Polynomial x2(1);
  x2.add_term(MultiIndex({2}), 1.0);
  out.scalar_terms = {{0, x2}};
  out.shared_terms = {{0, 1.0}};
  spec.outputs.push_back(out);
  const StructuredModel model = compile_structure(spec, Vec::Zero(1));
  REQUIRE(model.n_theta == 3);  // theta0 plus two Taylor coefficients

  // Truth: theta0 = 2, f = sin (|f''| <= 1), offset 0.25.
  std::vector<Sample> samples;
  for (double x : {-0.8, -0.45, -0.1, 0.2, 0.55, 0.9}) {
    Sample s;
    s.x = (Vec(1) << x).finished();
    s.y = (Vec(1) << 0.25 + 2.0 * x * x + std::sin(x)).finished();
    s.eps = 1e-3;
    samples.push_back(s);
  }
  const EllipsoidData data = structured_data(samples, model);
  CHECK(data.nz == 3);
  CHECK(data.ny == 1);
  CHECK(data.z.size() == samples.size());
  // Offset removed from the observation.
  CHECK(data.y[3][0] ==
        doctest::Approx(2.0 * 0.2 * 0.2 + std::sin(0.2)).epsilon(1e-12));
  CHECK(rank_check(data.z).full_row_rank);

  const EllipsoidResult res = solve_outer_ellipsoid(data);
  REQUIRE_MESSAGE(res.feasible, res.diagnostic);
  Mat theta_true(1, 3);
  theta_true << 2.0, std::sin(0.0), std::cos(0.0);
  CHECK(membership(res.ell, theta_true, 1e-6));
  CHECK_FALSE(membership(res.ell, 10.0 * theta_true));
}

TEST_CASE("empty datasets are rejected with a diagnostic") {
  EllipsoidData data;
  data.nz = 2;
  data.ny = 1;
  const EllipsoidResult res = solve_outer_ellipsoid(data);
  CHECK_FALSE(res.feasible);
  CHECK(res.diagnostic == "no samples");
}

TEST_CASE("gamma objective certifies the reported margin") {
  std::mt19937 rng(29);
  Fixture f = make_fixture(rng, 1, 1, 1, 8, 0.1);
  const EllipsoidResult res = solve_outer_ellipsoid(f.data, true);
  REQUIRE(res.feasible);
  const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(res.ell.delta1p)
                          .eigenvalues()
                          .minCoeff();
  CHECK(res.ell.gamma > 0.0);
  CHECK(lmin >= res.ell.gamma - 1e-6);

  // The feasibility-only path also succeeds and reports no margin.
  const EllipsoidResult plain = solve_outer_ellipsoid(f.data, false);
  REQUIRE(plain.feasible);
  CHECK(plain.ell.gamma == 0.0);
  CHECK(membership(plain.ell, f.a_true, 1e-6));
}
