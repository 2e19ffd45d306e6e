#include <cmath>
#include <random>

#include "doctest.h"
#include "tpv/validation.hpp"

using namespace tpv;

namespace {

Vec vec1(double v) { return Vec::Constant(1, v); }

// Scalar samples (x, f(x) + noise) with |noise| <= eps_actual, declared
// bound eps_declared. Uniform x over [-1, 1].
std::vector<Sample> draw_samples(const std::function<double(double)>& f,
                                 std::size_t count, double eps_actual,
                                 double eps_declared, std::mt19937& rng) {
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  std::uniform_real_distribution<double> ud(-eps_actual, eps_actual);
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Sample s;
    const double x = ux(rng);
    s.x = vec1(x);
    s.y = vec1(f(x) + (eps_actual > 0.0 ? ud(rng) : 0.0));
    s.eps = eps_declared;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("hoeffding margin closed form") {
  CHECK(hoeffding_margin(0.05, 1000) ==
        doctest::Approx(std::sqrt(std::log(40.0) / 2000.0)).epsilon(1e-12));
  CHECK(hoeffding_margin(0.05, 1000) == doctest::Approx(0.042944).epsilon(1e-4));
  // ln(2/c) = 2 at c = 2/e^2, so one sample gives exactly 1.
  CHECK(hoeffding_margin(2.0 / std::exp(2.0), 1) ==
        doctest::Approx(1.0).epsilon(1e-12));
  double prev = hoeffding_margin(0.05, 1);
  for (std::size_t v : {10, 100, 1000, 10000}) {
    const double cur = hoeffding_margin(0.05, v);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS(hoeffding_margin(0.0, 10));
  CHECK_THROWS(hoeffding_margin(1.0, 10));
  CHECK_THROWS(hoeffding_margin(0.05, 0));
}

TEST_CASE("violation indicator matches the envelope membership test") {
  std::mt19937 rng(11);
  auto f = [](double x) { return std::sin(x); };
  const auto fit = draw_samples(f, 40, 0.0, 0.01, rng);
  // k = 2, true third-derivative bound 1.
  const auto build = make_envelope_builder(fit, Vec::Zero(1), 2, 1);
  const EnvelopeCandidate env = build(1.0);
  REQUIRE(env.feasible);

  SUBCASE("zero ball radius reduces to the point membership test") {
    for (int i = 0; i < 200; ++i) {
      std::uniform_real_distribution<double> ux(-1.0, 1.0);
      std::uniform_real_distribution<double> uy(-1.5, 1.5);
      Sample s;
      s.x = vec1(ux(rng));
      s.y = vec1(uy(rng));
      s.eps = 0.0;
      const bool inside =
          min_sector_over_ellipsoid(env.ell, env.sector, s.x, s.y) <= 0.0;
      CHECK(violation_indicator(env, s) == !inside);
    }
  }

  SUBCASE("samples on the graph with small ball stay inside") {
    for (int i = 0; i < 100; ++i) {
      std::uniform_real_distribution<double> ux(-1.0, 1.0);
      Sample s;
      s.x = vec1(ux(rng));
      s.y = vec1(f(s.x[0]));
      s.eps = 1e-4;
      CHECK_FALSE(violation_indicator(env, s));
    }
  }

  SUBCASE("undersized derivative bound flags far-field samples") {
    // A tiny bound forces the quadratic band to hug one curve; points on the
    // true graph far from the center violate it.
    const EnvelopeCandidate tight = build(0.05);
    if (tight.feasible) {
      std::size_t flagged = 0;
      for (double x : {-1.0, -0.95, 0.95, 1.0}) {
        Sample s;
        s.x = vec1(x);
        s.y = vec1(f(x));
        s.eps = 0.0;
        flagged += violation_indicator(tight, s) ? 1u : 0u;
      }
      CHECK(flagged >= 1);
    }
  }
}

TEST_CASE("empirical risk counts and margin") {
  std::mt19937 rng(7);
  auto f = [](double x) { return std::sin(x); };
  const auto fit = draw_samples(f, 40, 0.0, 0.01, rng);
  const auto build = make_envelope_builder(fit, Vec::Zero(1), 2, 1);
  const EnvelopeCandidate env = build(1.0);
  REQUIRE(env.feasible);

  // Hand-built validation set: 97 points on the graph (inside), 3 far off.
  std::vector<Sample> val;
  for (int i = 0; i < 97; ++i) {
    Sample s;
    const double x = -0.9 + 1.8 * i / 96.0;
    s.x = vec1(x);
    s.y = vec1(f(x));
    s.eps = 1e-6;
    val.push_back(std::move(s));
  }
  for (int i = 0; i < 3; ++i) {
    Sample s;
    s.x = vec1(0.1 * i);
    s.y = vec1(5.0);  // far outside any consistent band
    s.eps = 1e-6;
    val.push_back(std::move(s));
  }

  SvpConfig cfg;
  const RiskReport rep = empirical_risk(env, val, cfg);
  CHECK(rep.total == 100);
  CHECK(rep.violations.size() == 3);
  CHECK(rep.empirical == doctest::Approx(0.03).epsilon(1e-12));
  REQUIRE(rep.margin.has_value());
  CHECK(*rep.margin == doctest::Approx(hoeffding_margin(cfg.confidence, 100)));
  CHECK(rep.bound() == doctest::Approx(rep.empirical + *rep.margin));

  SvpConfig dep = cfg;
  dep.iid = false;
  const RiskReport rep2 = empirical_risk(env, val, dep);
  CHECK_FALSE(rep2.margin.has_value());
  CHECK(rep2.bound() == doctest::Approx(rep2.empirical));

  // All-inside set reports zero risk.
  val.resize(97);
  CHECK(empirical_risk(env, val, cfg).empirical == 0.0);
}

TEST_CASE("scalar bisection recovers the derivative bound scale") {
  std::mt19937 rng(23);

  SUBCASE("polynomial ground truth accepts a bound near zero") {
    auto f = [](double x) { return 0.5 + x - 0.3 * x * x; };
    const auto fit = draw_samples(f, 30, 0.0, 1e-3, rng);
    const auto val = draw_samples(f, 400, 0.0, 1e-3, rng);
    SvpConfig cfg;
    cfg.eps_stop = 1e-3;
    const SvpResult res =
        svp_bisect(val, cfg, make_envelope_builder(fit, Vec::Zero(1), 2, 1));
    REQUIRE(res.success);
    CHECK(res.m <= cfg.eps_stop * 1.0001);
  }

  SUBCASE("sine with unit true bound accepts near or below one") {
    auto f = [](double x) { return std::sin(x); };
    const auto fit = draw_samples(f, 40, 0.01, 0.012, rng);
    const auto val = draw_samples(f, 300, 0.01, 0.012, rng);
    SvpConfig cfg;
    cfg.eps_stop = 0.02;
    const SvpResult res =
        svp_bisect(val, cfg, make_envelope_builder(fit, Vec::Zero(1), 1, 1));
    REQUIRE(res.success);
    CHECK(res.m <= 1.3);  // true second-derivative bound is 1 plus slack
    CHECK(res.envelope.feasible);
    // Risk of the accepted envelope stays within the configured budget.
    const RiskReport rep = empirical_risk(res.envelope, val, cfg);
    CHECK(rep.bound() <= cfg.max_risk + 1e-12);
  }

  SUBCASE("coarse stop accepts the first probe without bisecting") {
    auto f = [](double x) { return std::sin(x); };
    const auto fit = draw_samples(f, 30, 0.0, 0.01, rng);
    // 400 samples keep the concentration margin below the risk budget.
    const auto val = draw_samples(f, 400, 0.0, 0.01, rng);
    SvpConfig cfg;
    cfg.initial_m = 2.0;
    cfg.eps_stop = 4.0;
    const SvpResult res =
        svp_bisect(val, cfg, make_envelope_builder(fit, Vec::Zero(1), 1, 1));
    REQUIRE(res.success);
    CHECK(res.bisect_iterations == 0);
    CHECK(res.m == doctest::Approx(2.0));
  }
}

TEST_CASE("bisection trail is monotone and has the exact iteration count") {
  std::mt19937 rng(31);
  auto f = [](double x) { return std::tanh(2.0 * x); };
  const auto fit = draw_samples(f, 40, 0.005, 0.006, rng);
  const auto val = draw_samples(f, 250, 0.005, 0.006, rng);
  SvpConfig cfg;
  cfg.eps_stop = 0.05;
  cfg.initial_m = 1.0;
  const auto build = make_envelope_builder(fit, Vec::Zero(1), 1, 1);
  const SvpResult res = svp_bisect(val, cfg, build);
  REQUIRE(res.success);

  // The doubling phase ends at some accepted m0; the bracket [0, m0] then
  // halves once per iteration until it is narrower than eps_stop.
  double m0 = 0.0;
  for (const auto& e : res.trail)
    if (e.accepted) {
      m0 = e.m;
      break;
    }
  REQUIRE(m0 > 0.0);
  const auto expected =
      static_cast<std::size_t>(std::ceil(std::log2(m0 / cfg.eps_stop)));
  CHECK(res.bisect_iterations == expected);

  // For a fixed ellipsoid, enlarging the derivative bound only widens the
  // band, so no indicator flips from pass to violation.
  {
    const EnvelopeCandidate& acc = res.envelope;
    for (double scale : {1.5, 3.0, 10.0}) {
      EnvelopeCandidate wide = acc;
      wide.sector =
          make_sector(acc.sector.basis, acc.sector.bounds.scaled(scale));
      for (const Sample& s : val)
        if (!violation_indicator(acc, s)) CHECK_FALSE(violation_indicator(wide, s));
    }
  }

  // Across the trail the ellipsoid is re-fitted per bound, so individual
  // flags may swap; the violation rate itself still trends down as m grows.
  for (const auto& lo : res.trail) {
    if (!lo.feasible) continue;
    for (const auto& hi : res.trail) {
      if (!hi.feasible || hi.m <= lo.m) continue;
      CHECK(hi.risk.empirical <= lo.risk.empirical + 0.02);
    }
  }
}

TEST_CASE("coverage guarantee over repeated validation draws") {
  std::mt19937 rng(101);
  auto f = [](double x) { return std::sin(2.0 * x); };
  // Envelope fitted honestly at eps 0.05; validation samples declare a much
  // smaller ball, so indicators fire with some nonzero true rate.
  const auto fit = draw_samples(f, 40, 0.05, 0.05, rng);
  const auto build = make_envelope_builder(fit, Vec::Zero(1), 2, 1);
  const EnvelopeCandidate env = build(8.0);
  REQUIRE(env.feasible);

  const auto draw_val = [&](std::size_t count) {
    return draw_samples(f, count, 0.05, 0.01, rng);
  };

  // True violation rate via one large Monte Carlo estimate.
  double mu = 0.0;
  {
    const auto big = draw_val(20000);
    std::size_t hits = 0;
    for (const auto& s : big) hits += violation_indicator(env, s) ? 1u : 0u;
    mu = static_cast<double>(hits) / static_cast<double>(big.size());
  }

  SvpConfig cfg;  // c = 0.05
  std::size_t covered = 0;
  const std::size_t draws = 200, v = 500;
  for (std::size_t d = 0; d < draws; ++d) {
    const RiskReport rep = empirical_risk(env, draw_val(v), cfg);
    if (mu <= rep.bound()) ++covered;
  }
  // 95% guarantee minus three binomial standard deviations.
  CHECK(static_cast<double>(covered) >= 0.92 * static_cast<double>(draws));
}

TEST_CASE("per-output bisection separates smoothness scales") {
  std::mt19937 rng(47);
  // Output 1 is gentle, output 2 oscillates: true second-derivative bounds
  // 1 and 25, so the accepted per-output bounds should split by well over 2x.
  auto f1 = [](double x) { return std::sin(x); };
  auto f2 = [](double x) { return std::sin(5.0 * x); };
  std::vector<Sample> fit, val;
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  std::uniform_real_distribution<double> ud(-0.01, 0.01);
  const auto draw2 = [&](std::size_t count, std::vector<Sample>& out) {
    for (std::size_t i = 0; i < count; ++i) {
      Sample s;
      const double x = ux(rng);
      s.x = vec1(x);
      s.y = Vec(2);
      s.y << f1(x) + ud(rng), f2(x) + ud(rng);
      s.eps = 0.015;
      out.push_back(std::move(s));
    }
  };
  draw2(40, fit);
  draw2(250, val);

  const TaylorBasis basis = build_basis(Vec::Zero(1), 1);
  const VectorEnvelopeBuilder build = [&](const Vec& m) {
    DerivativeBounds bounds(2, 1, 1);
    bounds.set(0, MultiIndex({2}), m[0]);
    bounds.set(1, MultiIndex({2}), m[1]);
    EnvelopeCandidate cand;
    cand.sector = make_sector(basis, bounds);
    EllipsoidResult res =
        solve_outer_ellipsoid(envelope_data(fit, cand.sector), true);
    cand.feasible = res.feasible;
    if (res.feasible) cand.ell = std::move(res.ell);
    return cand;
  };

  SvpConfig cfg;
  cfg.eps_stop = 0.1;
  const SvpVectorResult res = svp_bisect_per_output(2, val, cfg, build);
  REQUIRE(res.success);
  CHECK(res.m[1] > 2.0 * res.m[0]);

  // Single output reduces to the scalar bisection result.
  std::vector<Sample> fit1, val1;
  for (const Sample& s : fit) {
    Sample t;
    t.x = s.x;
    t.y = vec1(s.y[0]);
    t.eps = s.eps;
    fit1.push_back(std::move(t));
  }
  for (const Sample& s : val) {
    Sample t;
    t.x = s.x;
    t.y = vec1(s.y[0]);
    t.eps = s.eps;
    val1.push_back(std::move(t));
  }
  const SvpVectorResult one = svp_bisect_per_output(
      1, val1, cfg, [&](const Vec& m) {
        return make_envelope_builder(fit1, Vec::Zero(1), 1, 1)(m[0]);
      });
  const SvpResult scalar =
      svp_bisect(val1, cfg, make_envelope_builder(fit1, Vec::Zero(1), 1, 1));
  REQUIRE(one.success);
  REQUIRE(scalar.success);
  CHECK(one.m[0] == doctest::Approx(scalar.m).epsilon(1e-12));
}

TEST_CASE("order iteration stops once the remainder vanishes") {
  std::mt19937 rng(59);
  auto f = [](double x) { return x * x * x - 0.4 * x; };
  const auto fit = draw_samples(f, 30, 0.0, 1e-3, rng);
  const auto val = draw_samples(f, 200, 0.0, 1e-3, rng);
  SvpConfig cfg;
  cfg.eps_stop = 0.01;
  const auto builder_for_k = [&](unsigned k) {
    return make_envelope_builder(fit, Vec::Zero(1), k, 1);
  };
  // Accept only orders whose residual derivative bound is essentially zero;
  // a cubic has zero fourth derivative, so the loop must stop by k = 3.
  const KIterationResult res =
      svp_k_iteration(val, cfg, builder_for_k, 1, 4, 0.05);
  REQUIRE(res.success);
  CHECK(res.k <= 3);
  CHECK(res.run.m <= 0.05);
  // Lower orders were tried and rejected: a cubic on [-1,1] needs a genuine
  // second-derivative bound (6), far above the acceptance threshold.
  if (res.k == 3) {
    REQUIRE(res.attempts.size() == 3);
    for (std::size_t i = 0; i + 1 < res.attempts.size(); ++i) {
      const SvpResult& r = res.attempts[i].second;
      CHECK((!r.success || r.m > 0.05));
    }
  }
}

TEST_CASE("minimal noise bisection and tabulated scales") {
  const auto feasible = [](double eps) { return eps >= 0.37; };
  const EpsModeResult res = min_eps_bisect(feasible, 1e-4);
  REQUIRE(res.success);
  CHECK(res.eps >= 0.37);
  CHECK(res.eps <= 0.37 + 1e-4);

  const EpsModeResult fail =
      min_eps_bisect([](double) { return false; }, 1e-4, 1e-3, 10.0);
  CHECK_FALSE(fail.success);
  CHECK(fail.diagnostic.find("cap") != std::string::npos);

  CHECK(eps_mode_scale(1) == 1.0);
  CHECK(eps_mode_scale(2) == 15.0);
  CHECK(eps_mode_scale(2, true) == 140.0);
  CHECK(eps_mode_scale(3) == 1000.0);
  CHECK_THROWS(eps_mode_scale(4));
}
