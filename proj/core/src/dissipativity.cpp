#include "tpv/dissipativity.hpp"

#include <numeric>
#include <stdexcept>

namespace tpv {

OperationSet box_operation_set(const Vec& x_lo, const Vec& x_hi,
                               const Vec& u_lo, const Vec& u_hi) {
  if (x_lo.size() != x_hi.size() || u_lo.size() != u_hi.size())
    throw std::invalid_argument("box bound sizes disagree");
  OperationSet op;
  op.nx = static_cast<std::size_t>(x_lo.size());
  op.nu = static_cast<std::size_t>(u_lo.size());
  const std::size_t n = op.nvars();
  const auto interval = [&](std::size_t j, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("empty box interval");
    const Polynomial v = Polynomial::variable(n, j);
    return (v - Polynomial::constant(n, lo)) * (v - Polynomial::constant(n, hi));
  };
  for (std::size_t j = 0; j < op.nx; ++j)
    op.inequalities.push_back(interval(j, x_lo[static_cast<Eigen::Index>(j)],
                                       x_hi[static_cast<Eigen::Index>(j)]));
  for (std::size_t j = 0; j < op.nu; ++j)
    op.inequalities.push_back(
        interval(op.nx + j, u_lo[static_cast<Eigen::Index>(j)],
                 u_hi[static_cast<Eigen::Index>(j)]));
  return op;
}

SupplyRate SupplyRate::quadratic(const Mat& q, const Mat& s_blk, const Mat& r) {
  const std::size_t nx = static_cast<std::size_t>(q.rows());
  const std::size_t nu = static_cast<std::size_t>(r.rows());
  if (q.cols() != q.rows() || r.cols() != r.rows() ||
      s_blk.rows() != q.rows() || s_blk.cols() != r.rows())
    throw std::invalid_argument("supply block dimensions disagree");
  const std::size_t n = nx + nu;
  Mat full(n, n);
  full << q, s_blk, s_blk.transpose(), r;
  SupplyRate sr;
  sr.s = Polynomial(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double c = full(static_cast<Eigen::Index>(i),
                            static_cast<Eigen::Index>(j));
      if (c != 0.0)
        sr.s += Polynomial::variable(n, i) * Polynomial::variable(n, j) * c;
    }
  return sr;
}

SupplyRate SupplyRate::l2_gain(std::size_t nx, std::size_t nu, double gamma) {
  return quadratic(-Mat::Identity(static_cast<Eigen::Index>(nx),
                                  static_cast<Eigen::Index>(nx)),
                   Mat::Zero(static_cast<Eigen::Index>(nx),
                             static_cast<Eigen::Index>(nu)),
                   gamma * gamma *
                       Mat::Identity(static_cast<Eigen::Index>(nu),
                                     static_cast<Eigen::Index>(nu)));
}

StorageTemplate StorageTemplate::monomials(std::size_t nx, std::size_t nu,
                                           unsigned dmin, unsigned dmax) {
  if (dmin < 1) throw std::invalid_argument("storage needs lambda(0) = 0");
  StorageTemplate st;
  for (const MultiIndex& alpha : enumerate_multi_indices(nx, dmin, dmax)) {
    // Embed the x-only exponent vector into the joint (x, u) variable list.
    std::vector<unsigned> e(nx + nu, 0);
    for (std::size_t j = 0; j < nx; ++j) e[j] = alpha[j];
    st.m.push_back(Polynomial::monomial(MultiIndex(e)));
  }
  return st;
}

namespace {

std::vector<std::size_t> iota_vars(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Symmetric matrix of fresh free atoms, kept PSD through a degree-0 Gram
// constraint; returns the matrix and its certificate slot.
std::pair<LinPolyMatrix, std::size_t> psd_matrix_variable(SosProgram& prog,
                                                          std::size_t n,
                                                          std::size_t nvars) {
  LinPolyMatrix x(n, n, nvars);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const LinExpr e = prog.scalar();
      x(i, j) = LinPoly::from_expr(nvars, e);
      if (j != i) x(j, i) = LinPoly::from_expr(nvars, e);
    }
  const std::size_t slot = prog.require_sos_matrix(x, 0, {});
  return {x, slot};
}

// -m^T X (dm/dx) xdot - xdot^T (dm/dx)^T X m as the congruence of the
// storage cross block with the rows picking (m(x), xdot) out of sigma.
LinPolyMatrix storage_cross_term(const LinPolyMatrix& xmat,
                                 const std::vector<Polynomial>& m,
                                 std::size_t nx, std::size_t dim,
                                 std::size_t last) {
  const std::size_t nm = m.size();
  const std::size_t nvars = m[0].nvars();
  LinPolyMatrix d1(nm + nx, nm + nx, nvars);
  for (std::size_t i = 0; i < nm; ++i)
    for (std::size_t j = 0; j < nx; ++j) {
      LinPoly e(nvars);
      for (std::size_t k = 0; k < nm; ++k) {
        const Polynomial dk = m[k].partial(j);
        if (!dk.is_zero()) e += LinPoly::from_expr(nvars, xmat(i, k).coeff(
                                    MultiIndex::zero(nvars))) *
                                dk * -1.0;
      }
      d1(i, nm + j) = e;
      d1(nm + j, i) = e;
    }
  PolyMatrix l(nm + nx, dim, nvars);
  for (std::size_t i = 0; i < nm; ++i) l(i, last) = m[i];
  for (std::size_t j = 0; j < nx; ++j)
    l(nm + j, j) = Polynomial::constant(nvars, 1.0);
  return congruence(l, d1);
}

unsigned even_up(unsigned d) { return d + (d % 2); }

// The sector and membership multipliers must give the Gram bases enough
// monomials to express the storage cross term, whose entries reach degree
// 2 deg(m) - 1; a too-small degree pins parts of the storage matrix to the
// PSD boundary and leaves no interior point.
unsigned default_tau_degree(const StorageTemplate& storage, int requested) {
  if (requested >= 0) return even_up(static_cast<unsigned>(requested));
  unsigned dm = 1;
  for (const Polynomial& p : storage.m) dm = std::max(dm, p.degree());
  return even_up(2 * (dm - 1));
}

// The leading coefficients of the sector and set-membership terms are sign
// definite against the optimizer: -tau_sec R^poly, and tau_sm z^T Delta z
// whose z-top is C C^T - P^-1 with P^-1 dominant for tight ellipsoids. The
// operation-set products t_i p_i are the only terms that can make those top
// coefficients positive, so their degree must reach the same top; otherwise
// the pure-power Gram diagonals are forced to zero and the program loses
// its interior.
unsigned default_t_degree(const SectorBound& sector, unsigned tau_deg,
                          int requested) {
  if (requested >= 0) return even_up(static_cast<unsigned>(requested));
  const unsigned band = std::max<unsigned>(sector.rpoly_sum.degree(),
                                           2 * sector.basis.order);
  const unsigned top = tau_deg + band;
  return std::max(2u, top >= 2 ? even_up(top - 2) : 0u);
}

std::size_t max_entry_degree(const LinPolyMatrix& m) {
  unsigned d = 0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      d = std::max(d, m(i, j).degree());
  return d;
}

// Sector-band congruence rows: (xdot - A_l z_l, 1) out of sigma.
LinPolyMatrix sector_term(const LinPoly& tau, const SectorBound& sector,
                          std::size_t nx, std::size_t dim, std::size_t lift,
                          std::size_t last) {
  const std::size_t nvars = sector.basis.n();
  PolyMatrix l(nx + 1, dim, nvars);
  for (std::size_t j = 0; j < nx; ++j) {
    l(j, j) = Polynomial::constant(nvars, 1.0);
    l(j, lift + j) = Polynomial::constant(nvars, -1.0);
  }
  l(nx, last) = Polynomial::constant(nvars, 1.0);
  return congruence(l, scale_matrix(tau, sector.phi()));
}

// Set-membership congruence rows: (z(x,u), A_l z_l) out of sigma.
LinPolyMatrix membership_term(const LinPoly& tau, const SectorBound& sector,
                              const CoefficientEllipsoid& ell, std::size_t nx,
                              std::size_t dim, std::size_t lift,
                              std::size_t last) {
  const std::size_t nvars = sector.basis.n();
  const std::size_t nz = sector.basis.nz();
  PolyMatrix l(nz + nx, dim, nvars);
  for (std::size_t r = 0; r < nz; ++r) l(r, last) = sector.basis.z[r];
  for (std::size_t j = 0; j < nx; ++j)
    l(nz + j, lift + j) = Polynomial::constant(nvars, 1.0);
  // The multiplier absorbs any positive scaling, so normalize the
  // set-membership block: tight ellipsoids otherwise inject entries of
  // order 1/q and wreck the conditioning of the certificate program.
  const Mat scaled =
      ell.delta_star / (1.0 + ell.delta_star.cwiseAbs().maxCoeff());
  return congruence(l,
                    scale_matrix(tau, PolyMatrix::from_constant(scaled, nvars)));
}

}  // namespace

PsiHandles assemble_psi(SosProgram& prog, const SectorBound& sector,
                        const CoefficientEllipsoid& ell,
                        const OperationSet& op, const SupplyRate& supply,
                        const StorageTemplate& storage,
                        const MultiplierConfig& mult) {
  const std::size_t nx = sector.ny;
  const std::size_t nvars = sector.basis.n();
  if (op.nvars() != nvars || op.nx != nx)
    throw std::invalid_argument("operation set dimensions disagree");
  if (supply.s.nvars() != nvars)
    throw std::invalid_argument("supply rate variable count disagrees");
  if (storage.m.empty()) throw std::invalid_argument("empty storage template");
  if (ell.ny != nx || ell.nz != sector.basis.nz())
    throw std::invalid_argument("ellipsoid does not match the sector basis");
  for (const Polynomial& p : op.inequalities)
    if (p.nvars() != nvars)
      throw std::invalid_argument("operation inequality variable count");

  PsiHandles h;
  h.dim = 2 * nx + 1;
  const std::size_t last = h.dim - 1;
  const std::vector<std::size_t> all = iota_vars(nvars);

  auto [xmat, slot_x] = psd_matrix_variable(prog, storage.m.size(), nvars);
  h.storage_x = xmat;
  h.slot_x = slot_x;

  LinPolyMatrix psi = storage_cross_term(xmat, storage.m, nx, h.dim, last);
  psi(last, last) += LinPoly::from(supply.s);

  const unsigned tau_deg = default_tau_degree(storage, mult.tau_degree);
  const unsigned t_deg = default_t_degree(sector, tau_deg, mult.t_degree);
  for (const Polynomial& p : op.inequalities) {
    LinPoly t = prog.sos_multiplier(nvars, all, t_deg);
    psi(last, last) += t * p;
    h.t.push_back(std::move(t));
  }

  h.tau_sec = prog.sos_multiplier(nvars, all, tau_deg);
  h.tau_sm = prog.sos_multiplier(nvars, all, tau_deg);
  psi += sector_term(h.tau_sec, sector, nx, h.dim, nx, last);
  psi += membership_term(h.tau_sm, sector, ell, nx, h.dim, nx, last);

  const unsigned half =
      mult.psi_half_degree >= 0
          ? static_cast<unsigned>(mult.psi_half_degree)
          : static_cast<unsigned>((max_entry_degree(psi) + 1) / 2);
  h.psi = psi;
  h.slot_psi = prog.require_sos_matrix(psi, half, all, true);
  return h;
}

PartitionedHandles assemble_psi_partitioned(
    SosProgram& prog, const std::vector<Envelope>& envelopes,
    const Partition& partition, const SupplyRate& supply,
    const StorageTemplate& storage, const PartitionedConfig& cfg) {
  if (envelopes.empty()) throw std::invalid_argument("no envelopes");
  if (partition.cells.empty()) throw std::invalid_argument("no cells");
  if (storage.m.empty()) throw std::invalid_argument("empty storage template");
  const std::size_t nvars = envelopes[0].sector.basis.n();
  const std::size_t nx = envelopes[0].sector.ny;
  const std::size_t ncell = partition.cells.size();
  const std::size_t nm = storage.m.size();
  for (const Envelope& e : envelopes)
    if (e.sector.basis.n() != nvars || e.sector.ny != nx ||
        e.ell.nz != e.sector.basis.nz() || e.ell.ny != nx)
      throw std::invalid_argument("inconsistent envelope dimensions");
  if (!cfg.cell_envelopes.empty() && cfg.cell_envelopes.size() != ncell)
    throw std::invalid_argument("cell envelope list size disagrees");

  const std::vector<std::size_t> all = iota_vars(nvars);
  const std::vector<std::size_t> xv = iota_vars(nx);

  PartitionedHandles h;
  // Per-cell storage matrices, optionally one shared instance.
  std::vector<std::size_t> slot_x(ncell);
  for (std::size_t j = 0; j < ncell; ++j) {
    if (cfg.shared_storage && j > 0) {
      h.storage_x.push_back(h.storage_x[0]);
      slot_x[j] = slot_x[0];
      continue;
    }
    auto [xmat, sx] = psd_matrix_variable(prog, nm, nvars);
    h.storage_x.push_back(std::move(xmat));
    slot_x[j] = sx;
  }

  const auto lambda_poly = [&](std::size_t j) {
    LinPoly lam(nvars);
    for (std::size_t a = 0; a < nm; ++a)
      for (std::size_t b = 0; b < nm; ++b)
        lam += LinPoly::from_expr(
                   nvars, h.storage_x[j](a, b).coeff(MultiIndex::zero(nvars))) *
               (storage.m[a] * storage.m[b]);
    return lam;
  };

  for (std::size_t j = 0; j < ncell; ++j) {
    const std::vector<std::size_t> used =
        cfg.cell_envelopes.empty() ? iota_vars(envelopes.size())
                                   : cfg.cell_envelopes[j];
    if (used.empty()) throw std::invalid_argument("cell uses no envelope");
    const std::size_t dim = nx + used.size() * nx + 1;
    const std::size_t last = dim - 1;

    const unsigned tau_deg = default_tau_degree(storage, cfg.mult.tau_degree);
    unsigned t_deg = 2;
    for (std::size_t s : used)
      t_deg = std::max(t_deg, default_t_degree(envelopes[s].sector, tau_deg,
                                               cfg.mult.t_degree));

    LinPolyMatrix psi =
        storage_cross_term(h.storage_x[j], storage.m, nx, dim, last);
    psi(last, last) += LinPoly::from(supply.s);
    for (const Polynomial& v : cfg.input_inequalities)
      psi(last, last) += prog.sos_multiplier(nvars, all, t_deg) * v;
    for (const Polynomial& c : partition.cells[j].inequalities)
      psi(last, last) += prog.sos_multiplier(nvars, all, t_deg) * c;

    for (std::size_t s = 0; s < used.size(); ++s) {
      const Envelope& env = envelopes[used[s]];
      const std::size_t lift = nx + s * nx;
      psi += sector_term(prog.sos_multiplier(nvars, all, tau_deg), env.sector,
                         nx, dim, lift, last);
      psi += membership_term(prog.sos_multiplier(nvars, all, tau_deg),
                             env.sector, env.ell, nx, dim, lift, last);
    }

    const unsigned half =
        cfg.mult.psi_half_degree >= 0
            ? static_cast<unsigned>(cfg.mult.psi_half_degree)
            : static_cast<unsigned>((max_entry_degree(psi) + 1) / 2);
    h.slot_psi.push_back(prog.require_sos_matrix(psi, half, all, true));

    // Storage positivity on the cell.
    LinPoly pos = lambda_poly(j);
    for (const Polynomial& c : partition.cells[j].inequalities)
      pos += prog.sos_multiplier(nvars, xv, even_up(cfg.pos_degree)) * c;
    h.slot_pos.push_back(prog.require_sos(
        pos, static_cast<unsigned>((pos.degree() + 1) / 2), xv, true));
  }

  // Exact continuity across declared boundaries (trivial when shared).
  if (!cfg.shared_storage) {
    for (const PartitionBoundary& b : partition.boundaries) {
      if (b.j >= ncell || b.l >= ncell || b.j == b.l)
        throw std::invalid_argument("bad boundary cell indices");
      const LinPoly s_jl =
          prog.free_multiplier(nvars, xv, cfg.cont_degree);
      prog.require_zero(lambda_poly(b.j) + s_jl * b.equality -
                        lambda_poly(b.l));
    }
  }
  return h;
}

GainResult l2_gain_bisect(const GainProbe& probe, double lo, double hi,
                          double tol) {
  if (!(lo >= 0.0) || !(hi >= lo) || !(tol > 0.0))
    throw std::invalid_argument("bad gain bisection range");
  GainResult res;

  const auto attempt = [&](double g) -> bool {
    const std::optional<GramCertificate> cert = probe(g);
    if (!cert) return false;
    const VerifyReport rep = verify_certificate(*cert);
    if (!rep.pass) return false;
    res.certified = true;
    res.gamma = g;
    res.certificate = *cert;
    res.verification = rep;
    return true;
  };

  if (!attempt(hi)) {
    res.diagnostic = "no certificate at the upper end of the gain range";
    return res;
  }
  double good = hi;
  while (good - lo > tol) {
    const double mid = 0.5 * (good + lo);
    if (attempt(mid))
      good = mid;
    else
      lo = mid;
  }
  // res holds the last verified certificate, which is the one at `good`.
  res.gamma = good;
  return res;
}

DissipativityResult verify_dissipativity(const DissipativityProblem& problem) {
  DissipativityResult res;
  const std::size_t nvars = problem.nx + problem.nu;
  if (problem.omega.size() != static_cast<Eigen::Index>(nvars)) {
    res.stage = "setup";
    res.diagnostic = "expansion point dimension disagrees with nx + nu";
    return res;
  }

  res.envelope.sector =
      make_sector(build_basis(problem.omega, problem.k,
                              problem.known_equilibrium),
                  problem.bounds);
  const EllipsoidData data =
      envelope_data(problem.samples, res.envelope.sector);

  const RankReport rank = rank_check(data.z);
  if (!rank.full_row_rank) {
    res.stage = "rank-check";
    res.diagnostic = "regressor matrix is not full row rank: data does not "
                     "excite every basis direction";
    return res;
  }

  EllipsoidResult ell =
      solve_outer_ellipsoid(data, problem.gamma_objective, problem.sdp);
  if (!ell.feasible) {
    res.stage = "ellipsoid";
    res.diagnostic = ell.diagnostic;
    return res;
  }
  res.envelope.ell = std::move(ell.ell);

  SosProgram prog;
  PsiHandles h;
  try {
    h = assemble_psi(prog, res.envelope.sector, res.envelope.ell, problem.op,
                     problem.supply, problem.storage, problem.mult);
  } catch (const std::exception& e) {
    res.stage = "assembly";
    res.diagnostic = e.what();
    return res;
  }

  const FeasibilityResult fr = solve_feasibility(prog.problem(), problem.sdp);
  if (!fr.feasible) {
    res.stage = "sos-solve";
    res.diagnostic = "storage certificate program infeasible at the given "
                     "degrees and supply rate";
    return res;
  }

  res.certificate = prog.certificate(fr.solution);
  res.verification = verify_certificate(res.certificate);
  if (!res.verification.pass) {
    res.stage = "certificate";
    res.diagnostic = "solver output failed independent re-verification";
    return res;
  }

  const std::size_t nm = problem.storage.m.size();
  res.storage_x = Mat(static_cast<Eigen::Index>(nm),
                      static_cast<Eigen::Index>(nm));
  for (std::size_t i = 0; i < nm; ++i)
    for (std::size_t j = 0; j < nm; ++j)
      res.storage_x(static_cast<Eigen::Index>(i),
                    static_cast<Eigen::Index>(j)) =
          prog.value(h.storage_x(i, j).coeff(MultiIndex::zero(nvars)),
                     fr.solution);
  res.certified = true;
  res.stage = "done";
  return res;
}

}  // namespace tpv
