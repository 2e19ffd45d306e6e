#include <Eigen/Eigenvalues>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tpv/sdp.hpp"

using namespace tpv;

TEST_CASE("correlation corner: min 2 X12 with unit diagonal") {
  SdpProblem p;
  const std::size_t b = p.add_block(2);
  std::size_t r0 = p.add_constraint(1.0);
  p.add_entry(r0, b, 0, 0, 1.0);
  std::size_t r1 = p.add_constraint(1.0);
  p.add_entry(r1, b, 1, 1, 1.0);
  p.add_objective_entry(b, 0, 1, 1.0);  // <C, X> = 2 X12

  const SdpSolution s = solve_sdp(p);
  REQUIRE(s.status == SdpStatus::Optimal);
  CHECK(s.primal_objective == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(s.X[0](0, 1) == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("free variables pinned by equalities") {
  SdpProblem p;
  const std::size_t b = p.add_block(1);
  const std::size_t f = p.add_free();
  std::size_t r0 = p.add_constraint(3.0);
  p.add_free_entry(r0, f, 1.0);  // f = 3
  std::size_t r1 = p.add_constraint(5.0);
  p.add_entry(r1, b, 0, 0, 1.0);
  p.add_free_entry(r1, f, 1.0);  // x + f = 5
  p.add_objective_entry(b, 0, 0, 1.0);

  const SdpSolution s = solve_sdp(p);
  REQUIRE(s.status == SdpStatus::Optimal);
  CHECK(s.f[0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(s.X[0](0, 0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(s.primal_objective == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(s.gap <= 1e-6);
}

TEST_CASE("trace-one minimization recovers the smallest eigenvalue") {
  std::mt19937 rng(19);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 8; ++rep) {
    const int n = 3 + rep % 3;
    Mat C(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = g(rng);
    C = (0.5 * (C + C.transpose())).eval();

    SdpProblem p;
    const std::size_t b = p.add_block(static_cast<std::size_t>(n));
    const std::size_t row = p.add_constraint(1.0);
    for (int i = 0; i < n; ++i) {
      p.add_entry(row, b, static_cast<std::size_t>(i),
                  static_cast<std::size_t>(i), 1.0);
      for (int j = i; j < n; ++j)
        p.add_objective_entry(b, static_cast<std::size_t>(i),
                              static_cast<std::size_t>(j), C(i, j));
    }
    const SdpSolution s = solve_sdp(p);
    REQUIRE(s.status == SdpStatus::Optimal);
    const double lmin =
        Eigen::SelfAdjointEigenSolver<Mat>(C, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .minCoeff();
    CHECK(s.primal_objective == doctest::Approx(lmin).epsilon(1e-5));
  }
}

TEST_CASE("two blocks share one trace budget") {
  SdpProblem p;
  const std::size_t b0 = p.add_block(2), b1 = p.add_block(2);
  const std::size_t row = p.add_constraint(1.0);
  for (std::size_t i = 0; i < 2; ++i) {
    p.add_entry(row, b0, i, i, 1.0);
    p.add_entry(row, b1, i, i, 1.0);
  }
  // Block 0 costs are higher, so all mass goes to block 1's cheap direction.
  p.add_objective_entry(b0, 0, 0, 5.0);
  p.add_objective_entry(b0, 1, 1, 4.0);
  p.add_objective_entry(b1, 0, 0, 3.0);
  p.add_objective_entry(b1, 1, 1, 2.0);
  const SdpSolution s = solve_sdp(p);
  REQUIRE(s.status == SdpStatus::Optimal);
  CHECK(s.primal_objective == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(s.X[1](1, 1) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("feasibility: satisfiable diagonal constraints") {
  SdpProblem p;
  const std::size_t b = p.add_block(2);
  std::size_t r0 = p.add_constraint(1.0);
  p.add_entry(r0, b, 0, 0, 1.0);
  std::size_t r1 = p.add_constraint(2.0);
  p.add_entry(r1, b, 1, 1, 1.0);
  const FeasibilityResult r = solve_feasibility(p);
  CHECK(r.feasible);
  CHECK(r.t <= 1e-7);
  CHECK(r.solution.X[0](0, 0) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("feasibility: negative scalar is rejected") {
  SdpProblem p;
  const std::size_t b = p.add_block(1);
  std::size_t r0 = p.add_constraint(-1.0);
  p.add_entry(r0, b, 0, 0, 1.0);  // X = -1 impossible for X >= 0
  const FeasibilityResult r = solve_feasibility(p);
  CHECK_FALSE(r.feasible);
  CHECK(r.t > 1e-3);
}

TEST_CASE("feasibility: forced off-diagonal with zero diagonal") {
  // X11 = 0 with X12 = 1 violates PSD (principal minor), so infeasible.
  SdpProblem p;
  const std::size_t b = p.add_block(2);
  std::size_t r0 = p.add_constraint(0.0);
  p.add_entry(r0, b, 0, 0, 1.0);
  std::size_t r1 = p.add_constraint(1.0);
  p.add_entry(r1, b, 0, 1, 0.5);  // 2 * 0.5 * X12 = 1
  const FeasibilityResult r = solve_feasibility(p);
  CHECK_FALSE(r.feasible);
}

TEST_CASE("feasibility with free variables") {
  // X + f = -5 is feasible (f takes the slack), X + f = -5 with f fixed to 0
  // is not.
  SdpProblem p;
  const std::size_t b = p.add_block(1);
  const std::size_t f = p.add_free();
  std::size_t r0 = p.add_constraint(-5.0);
  p.add_entry(r0, b, 0, 0, 1.0);
  p.add_free_entry(r0, f, 1.0);
  CHECK(solve_feasibility(p).feasible);

  std::size_t r1 = p.add_constraint(0.0);
  p.add_free_entry(r1, f, 1.0);
  CHECK_FALSE(solve_feasibility(p).feasible);
}

TEST_CASE("text export layout") {
  SdpProblem p;
  const std::size_t b = p.add_block(2);
  const std::size_t f = p.add_free();
  std::size_t r0 = p.add_constraint(1.0);
  p.add_entry(r0, b, 0, 1, 2.0);
  p.add_free_entry(r0, f, -1.0);
  p.add_objective_entry(b, 0, 0, 3.0);
  p.add_free_objective(f, 4.0);

  std::istringstream is(export_sdp(p));
  std::size_t nblocks, nvars;
  is >> nblocks >> nvars;
  CHECK(nblocks == 3);  // one PSD block + a 1x1 pair for the free variable
  CHECK(nvars == 1);
  std::size_t lines = 0;
  std::size_t blk, i, j, var;
  double coeff;
  bool saw_constant = false;
  while (is >> blk >> i >> j >> var >> coeff) {
    ++lines;
    CHECK(blk < nblocks);
    CHECK(var <= nvars);
    if (var == 0) saw_constant = true;
  }
  CHECK(lines >= 4);
  CHECK(saw_constant);
}
