#pragma once

#include <functional>
#include <optional>

#include "tpv/setmem.hpp"
#include "tpv/sos.hpp"

namespace tpv {

/// Operating region as polynomial inequalities p_i(x, u) <= 0 over the
/// joint variables (x_1..x_nx, u_1..u_nu).
struct OperationSet {
  std::size_t nx = 0, nu = 0;
  std::vector<Polynomial> inequalities;

  std::size_t nvars() const { return nx + nu; }
};

/// Per-coordinate box (x_j - lo)(x_j - hi) <= 0 on states and inputs.
OperationSet box_operation_set(const Vec& x_lo, const Vec& x_hi,
                               const Vec& u_lo, const Vec& u_hi);

struct SupplyRate {
  Polynomial s;  // in nx + nu variables

  /// [x; u]^T [Q S; S^T R] [x; u].
  static SupplyRate quadratic(const Mat& q, const Mat& s_blk, const Mat& r);
  /// gamma^2 u^T u - x^T x.
  static SupplyRate l2_gain(std::size_t nx, std::size_t nu, double gamma);
};

/// Storage candidate lambda(x) = m(x)^T X m(x): monomials m over the state
/// variables only, with the symmetric coefficient matrix X left to the
/// optimizer. The constant monomial is excluded so lambda(0) = 0.
struct StorageTemplate {
  std::vector<Polynomial> m;  // in nx + nu variables, x-only monomials

  /// All state monomials of degree dmin..dmax (default 1..2, quartic
  /// lambda).
  static StorageTemplate monomials(std::size_t nx, std::size_t nu,
                                   unsigned dmin = 1, unsigned dmax = 2);
};

struct MultiplierConfig {
  /// Operation-set multiplier degree; -1 raises it until the products
  /// t_i p_i reach the top degree of the sector and set-membership terms,
  /// whose leading coefficients the optimizer cannot make positive.
  int t_degree = -1;
  /// Sector/set-membership multiplier degree; -1 picks the smallest even
  /// degree that lets the Gram basis express the storage cross term.
  int tau_degree = -1;
  /// Gram half-degree of the Psi constraint; -1 derives it from the
  /// assembled entry degrees.
  int psi_half_degree = -1;
};

/// Handles into the assembled program, for extracting solved quantities and
/// for independent algebraic checks.
struct PsiHandles {
  LinPolyMatrix storage_x;  // n_m x n_m, constant entries
  std::vector<LinPoly> t;
  LinPoly tau_sec, tau_sm;
  LinPolyMatrix psi;
  std::size_t slot_psi = 0, slot_x = 0;
  std::size_t dim = 0;  // 2 nx + 1
};

/// Storage-derivative certificate matrix: the quadratic form in
/// sigma = (xdot, A z(x,u), 1) combining the storage decrease, the supply
/// rate, the operation-set relaxation, the sector band and the coefficient
/// set-membership. Feasibility of "Psi is an SOS matrix" plus X >= 0
/// certifies dissipativity for every system consistent with the data.
PsiHandles assemble_psi(SosProgram& prog, const SectorBound& sector,
                        const CoefficientEllipsoid& ell,
                        const OperationSet& op, const SupplyRate& supply,
                        const StorageTemplate& storage,
                        const MultiplierConfig& mult = {});

/// State-space partition cell {x : c_ji(x) <= 0} and the boundary between
/// two cells {x : h0 = 0, h_m <= 0}.
struct PartitionCell {
  std::vector<Polynomial> inequalities;  // x-only, in nx + nu variables
};
struct PartitionBoundary {
  std::size_t j = 0, l = 0;
  Polynomial equality;                   // h0, x-only
  std::vector<Polynomial> inequalities;  // unused by the equality matching
};
struct Partition {
  std::vector<PartitionCell> cells;
  std::vector<PartitionBoundary> boundaries;
};

/// One fitted envelope: sector band plus coefficient ellipsoid.
struct Envelope {
  SectorBound sector;
  CoefficientEllipsoid ell;
};

struct PartitionedConfig {
  MultiplierConfig mult;
  unsigned pos_degree = 2;   // multipliers of the storage-positivity SOS
  unsigned cont_degree = 2;  // free boundary multipliers s_jl
  bool shared_storage = false;
  /// Per-cell envelope indices; empty uses every envelope in every cell.
  std::vector<std::vector<std::size_t>> cell_envelopes;
  std::vector<Polynomial> input_inequalities;  // v_i(u) <= 0
};

struct PartitionedHandles {
  std::vector<LinPolyMatrix> storage_x;  // one per cell (aliased if shared)
  std::vector<std::size_t> slot_psi;     // one per cell
  std::vector<std::size_t> slot_pos;     // one per cell
};

/// Piecewise-storage variant: per-cell certificate matrices Psi_j over the
/// lifted vector stacking every used envelope's A_l z_l block, plus storage
/// positivity on each cell and exact continuity across declared boundaries.
PartitionedHandles assemble_psi_partitioned(
    SosProgram& prog, const std::vector<Envelope>& envelopes,
    const Partition& partition, const SupplyRate& supply,
    const StorageTemplate& storage, const PartitionedConfig& cfg = {});

struct GainResult {
  bool certified = false;
  std::string diagnostic;
  double gamma = 0.0;
  GramCertificate certificate;
  VerifyReport verification;
};

/// Certificate-producing feasibility probe at one gamma; empty means
/// infeasible (or solver failure).
using GainProbe = std::function<std::optional<GramCertificate>(double gamma)>;

/// Bisects gamma over [lo, hi] to absolute tolerance tol. The upper end must
/// verify or no certificate is returned; every accepted gamma carries an
/// independently re-verified certificate.
GainResult l2_gain_bisect(const GainProbe& probe, double lo, double hi,
                          double tol = 1e-2);

struct DissipativityProblem {
  std::vector<Sample> samples;
  Vec omega;
  unsigned k = 1;
  std::size_t nx = 0, nu = 0;
  DerivativeBounds bounds;
  OperationSet op;
  SupplyRate supply;
  StorageTemplate storage;
  MultiplierConfig mult;
  SdpOptions sdp;
  /// Omit the constant basis entry, encoding the prior f(omega) = 0. Without
  /// it the envelope admits constant offsets, and strict supplies such as the
  /// L2-gain rate are unverifiable near the equilibrium for any data.
  bool known_equilibrium = false;
  // Fit the minimal-diameter ellipsoid by default: feasibility-only fits
  // leave slack that admits systems with much larger gain.
  bool gamma_objective = true;
};

struct DissipativityResult {
  bool certified = false;
  std::string stage;  // failing stage when not certified, "done" otherwise
  std::string diagnostic;
  Envelope envelope;
  GramCertificate certificate;
  VerifyReport verification;
  Mat storage_x;
};

/// End-to-end run: rank check, ellipsoid fit, Psi assembly, SOS solve and
/// independent certificate verification, with stage-tagged failures.
DissipativityResult verify_dissipativity(const DissipativityProblem& problem);

}  // namespace tpv
