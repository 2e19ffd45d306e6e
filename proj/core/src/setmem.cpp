#include "tpv/setmem.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tpv {

namespace {

constexpr double kQFloor = 1e-12;
constexpr double kRankTol = 1e-8;
constexpr double kCondCap = 1e12;
constexpr double kLmiSoundness = 1e-2;
constexpr double kMultiplierBound = 1e4;

double max_eig(const Mat& m) {
  return Eigen::SelfAdjointEigenSolver<Mat>(m).eigenvalues().maxCoeff();
}

double min_eig(const Mat& m) {
  return Eigen::SelfAdjointEigenSolver<Mat>(m).eigenvalues().minCoeff();
}

/// Adds coefficient w on the symmetric matrix entry (i, j) of a PSD block so
/// that the constraint row reads w * X_ij literally once (the triplet storage
/// doubles off-diagonal contributions).
void add_psd(SdpProblem& prob, std::size_t row, std::size_t block,
             std::size_t i, std::size_t j, double w) {
  const std::size_t lo = std::min(i, j), hi = std::max(i, j);
  prob.add_entry(row, block, lo, hi, lo == hi ? w : 0.5 * w);
}

/// Delta_* from the primal blocks; with C = delta1p^{-1} delta2p it equals
///   [ C C^T - delta1p^{-1}, C;  C^T, I ],
/// which is the sign-flipped block inverse of Delta_p.
Mat delta_star_from_primal(const Mat& d1, const Mat& d2) {
  const Eigen::Index nz = d1.rows(), ny = d2.cols();
  const Mat d1inv = d1.ldlt().solve(Mat::Identity(nz, nz));
  const Mat c = d1inv * d2;
  Mat s(nz + ny, nz + ny);
  s.topLeftCorner(nz, nz) = c * c.transpose() - d1inv;
  s.topRightCorner(nz, ny) = c;
  s.bottomLeftCorner(ny, nz) = c.transpose();
  s.bottomRightCorner(ny, ny) = Mat::Identity(ny, ny);
  return 0.5 * (s + s.transpose());
}

/// Value of the outer-approximation LMI at the recovered blocks; must be
/// negative semidefinite up to solver tolerance.
Mat assemble_lmi(const std::vector<Mat>& deltas, std::size_t nz,
                 std::size_t ny, const Mat& d1, const Mat& d2,
                 const Vec& eta) {
  const std::size_t nbig = 2 * nz + ny;
  Mat g = Mat::Zero(nbig, nbig);
  g.topLeftCorner(nz, nz) = d1;
  g.block(0, nz, nz, ny) = d2;
  g.block(nz, 0, ny, nz) = d2.transpose();
  g.block(nz, nz, ny, ny) = -Mat::Identity(ny, ny);
  g.block(nz, nz + ny, ny, nz) = d2.transpose();
  g.block(nz + ny, nz, nz, ny) = d2;
  g.bottomRightCorner(nz, nz) = -d1;
  for (std::size_t i = 0; i < deltas.size(); ++i)
    g.topLeftCorner(nz + ny, nz + ny) -=
        eta[static_cast<Eigen::Index>(i)] * deltas[i];
  return g;
}

}  // namespace

double compute_q(double rabs_sum, double eps) {
  if (rabs_sum < 0.0) throw std::invalid_argument("negative remainder bound");
  const double root = std::sqrt(rabs_sum) + eps;
  return std::max(root * root, kQFloor);
}

RankReport rank_check(const std::vector<Vec>& zs) {
  RankReport rep;
  if (zs.empty()) return rep;
  const std::size_t nz = static_cast<std::size_t>(zs[0].size());
  Mat z(nz, zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i)
    z.col(static_cast<Eigen::Index>(i)) = zs[i];
  Eigen::JacobiSVD<Mat> svd(z);
  rep.singular_values = svd.singularValues();
  const double smax = rep.singular_values[0];
  const double smin = rep.singular_values[rep.singular_values.size() - 1];
  rep.full_row_rank = zs.size() >= nz && smax > 0.0 && smin > kRankTol * smax;
  return rep;
}

EllipsoidData envelope_data(const std::vector<Sample>& samples,
                            const SectorBound& sector) {
  EllipsoidData data;
  data.nz = sector.basis.nz();
  data.ny = sector.ny;
  for (const Sample& s : samples) {
    if (static_cast<std::size_t>(s.y.size()) != sector.ny)
      throw std::invalid_argument("sample output dimension mismatch");
    if (s.eps < 0.0) throw std::invalid_argument("negative noise bound");
    data.z.push_back(sector.basis.eval(s.x));
    data.y.push_back(s.y);
    data.q.push_back(compute_q(sector.rabs_sum(s.x), s.eps));
  }
  return data;
}

EllipsoidData structured_data(const std::vector<Sample>& samples,
                              const StructuredModel& model) {
  EllipsoidData data;
  data.nz = model.n_theta;
  data.ny = 1;
  for (const Sample& s : samples) {
    if (static_cast<std::size_t>(s.y.size()) != model.ny())
      throw std::invalid_argument("sample output dimension mismatch");
    if (s.eps < 0.0) throw std::invalid_argument("negative noise bound");
    for (std::size_t i = 0; i < model.ny(); ++i) {
      data.z.push_back(model.regressor_eval(i, s.x));
      Vec y(1);
      y[0] = s.y[static_cast<Eigen::Index>(i)] - model.offsets[i].eval(s.x);
      data.y.push_back(y);
      data.q.push_back(compute_q(model.rabs(i, s.x), s.eps));
    }
  }
  return data;
}

Mat delta_block(const Vec& z, const Vec& y, double q) {
  const Eigen::Index nz = z.size(), ny = y.size();
  Mat d(nz + ny, nz + ny);
  d.topLeftCorner(nz, nz) = z * z.transpose();
  d.topRightCorner(nz, ny) = -z * y.transpose();
  d.bottomLeftCorner(ny, nz) = -y * z.transpose();
  d.bottomRightCorner(ny, ny) = y * y.transpose() - q * Mat::Identity(ny, ny);
  return d;
}

std::vector<Mat> build_delta_blocks(const EllipsoidData& data) {
  std::vector<Mat> out;
  out.reserve(data.z.size());
  for (std::size_t i = 0; i < data.z.size(); ++i)
    out.push_back(delta_block(data.z[i], data.y[i], data.q[i]));
  return out;
}

Mat CoefficientEllipsoid::delta_p() const {
  const Mat d1inv_d2 = delta1p.ldlt().solve(delta2p);
  Mat p(nz + ny, nz + ny);
  p.topLeftCorner(nz, nz) = delta1p;
  p.topRightCorner(nz, ny) = delta2p;
  p.bottomLeftCorner(ny, nz) = delta2p.transpose();
  p.bottomRightCorner(ny, ny) =
      delta2p.transpose() * d1inv_d2 - Mat::Identity(ny, ny);
  return p;
}

EllipsoidResult solve_outer_ellipsoid(const EllipsoidData& data,
                                      bool gamma_objective,
                                      const SdpOptions& opts) {
  EllipsoidResult res;
  const std::size_t nz = data.nz, ny = data.ny, ns = data.z.size();
  if (ns == 0) {
    res.diagnostic = "no samples";
    return res;
  }
  const std::size_t nbig = 2 * nz + ny;
  const std::vector<Mat> deltas = build_delta_blocks(data);
  // Each Delta_i enters only through a nonnegative multiplier, so a
  // per-sample normalization is absorbed into eta and keeps the solver's
  // data well scaled even when q grows with large derivative bounds.
  Vec dscale(static_cast<Eigen::Index>(ns));
  for (std::size_t i = 0; i < ns; ++i)
    dscale[static_cast<Eigen::Index>(i)] =
        1.0 + deltas[i].cwiseAbs().maxCoeff();

  // Block and free-variable indices are deterministic, so every
  // instantiation below shares the same layout.
  const std::size_t b_p = 0;  // delta1p
  std::vector<std::size_t> b_eta(ns);
  for (std::size_t i = 0; i < ns; ++i) b_eta[i] = 2 + i;
  const auto d2v = [&](std::size_t r, std::size_t c) {
    return c * nz + r;  // delta2p entries, column-major free variables
  };

  // eps_center scales the constant central block. The gamma subproblems pin
  // delta1p >= I and shrink the center to I/gamma rather than growing
  // delta1p to gamma I, which keeps the iterates O(1) at every gamma level;
  // the recovered ellipsoid is scaled back by gamma afterwards.
  const auto build = [&](double eps_center, bool pin_identity) {
    SdpProblem prob;
    prob.add_block(nz);    // delta1p
    prob.add_block(nbig);  // LMI slack, G + T = 0
    for (std::size_t i = 0; i < ns; ++i) prob.add_block(1);  // eta
    for (std::size_t v = 0; v < nz * ny; ++v) prob.add_free();  // delta2p

    // One equality per upper-triangle entry of G + T = 0, with index ranges
    // [0,nz) | [nz,nz+ny) | [nz+ny,nbig) inside the LMI matrix G.
    for (std::size_t r = 0; r < nbig; ++r) {
      for (std::size_t c = r; c < nbig; ++c) {
        const bool r1 = r < nz, r2 = !r1 && r < nz + ny;
        const bool c1 = c < nz, c2 = !c1 && c < nz + ny;
        // Constants of G move to the right-hand side; only the central
        // block has any.
        const double rhs = (r2 && c2 && r == c) ? eps_center : 0.0;
        const std::size_t row = prob.add_constraint(rhs);
        add_psd(prob, row, 1, r, c, 1.0);
        if (r1 && c1) {
          add_psd(prob, row, b_p, r, c, 1.0);
        } else if (r1 && c2) {
          prob.add_free_entry(row, d2v(r, c - nz), 1.0);
        } else if (r2 && !c1 && !c2) {
          prob.add_free_entry(row, d2v(c - nz - ny, r - nz), 1.0);
        } else if (!r1 && !r2) {
          add_psd(prob, row, b_p, r - nz - ny, c - nz - ny, -1.0);
        }
        // The (1,3) corner of G is structurally zero, so there the equation
        // just pins the slack entry.
        if (r < nz + ny && c < nz + ny) {
          for (std::size_t i = 0; i < ns; ++i) {
            const double v = deltas[i](static_cast<Eigen::Index>(r),
                                       static_cast<Eigen::Index>(c));
            if (v != 0.0)
              prob.add_entry(row, b_eta[i], 0, 0,
                             -v / dscale[static_cast<Eigen::Index>(i)]);
          }
        }
      }
    }
    if (pin_identity) {
      const std::size_t b_u = prob.add_block(nz);
      for (std::size_t r = 0; r < nz; ++r)
        for (std::size_t c = r; c < nz; ++c) {
          const std::size_t row = prob.add_constraint(r == c ? 1.0 : 0.0);
          add_psd(prob, row, b_p, r, c, 1.0);
          add_psd(prob, row, b_u, r, c, -1.0);
        }
      // The multipliers and the pin slack have an unbounded direction along
      // which the interior-point iterates drift until they break down. Slack
      // bounds compactify that face; when they saturate the fit is merely
      // conservative, and the verified LMI residual still decides acceptance.
      for (std::size_t i = 0; i < ns; ++i) {
        const std::size_t sb = prob.add_block(1);
        const std::size_t row = prob.add_constraint(kMultiplierBound);
        prob.add_entry(row, b_eta[i], 0, 0, 1.0);
        prob.add_entry(row, sb, 0, 0, 1.0);
      }
      const std::size_t sb = prob.add_block(1);
      const std::size_t row =
          prob.add_constraint(kMultiplierBound * static_cast<double>(nz));
      for (std::size_t r = 0; r < nz; ++r) prob.add_entry(row, b_p, r, r, 1.0);
      prob.add_entry(row, sb, 0, 0, 1.0);
    }
    return prob;
  };

  const auto recover = [&](const SdpSolution& s, double scale) {
    CoefficientEllipsoid e;
    e.nz = nz;
    e.ny = ny;
    e.delta1p = scale * 0.5 * (s.X[b_p] + s.X[b_p].transpose());
    e.delta2p = Mat(nz, ny);
    for (std::size_t c = 0; c < ny; ++c)
      for (std::size_t r = 0; r < nz; ++r)
        e.delta2p(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            scale * s.f[static_cast<Eigen::Index>(d2v(r, c))];
    e.eta = Vec(ns);
    for (std::size_t i = 0; i < ns; ++i)
      e.eta[static_cast<Eigen::Index>(i)] =
          scale * s.X[b_eta[i]](0, 0) / dscale[static_cast<Eigen::Index>(i)];
    return e;
  };
  // The LMI mixes scales: the delta1p blocks grow with gamma while the
  // central identity stays O(1), so a plain eigenvalue test on G measures
  // the wrong thing. The congruence by diag(delta1p, I, delta1p)^{-1/2} puts
  // every block at unit scale; a residual of delta there shifts the band
  // center by up to delta * sqrt(lambda_max(delta1p)) * ||z|| while the
  // radius is at least ||z|| / sqrt(lambda_max(delta1p)), so soundness needs
  // delta * lambda_max(delta1p) small. kLmiSoundness caps the center shift
  // at that fraction of the band radius, uniformly over directions.
  const auto lmi_residual = [&](const CoefficientEllipsoid& e) {
    Eigen::SelfAdjointEigenSolver<Mat> es(e.delta1p);
    if (es.eigenvalues().minCoeff() <= 0.0)
      return std::numeric_limits<double>::infinity();
    const Mat dmh = es.operatorInverseSqrt();
    Mat s = Mat::Identity(static_cast<Eigen::Index>(nbig),
                          static_cast<Eigen::Index>(nbig));
    s.topLeftCorner(nz, nz) = dmh;
    s.bottomRightCorner(nz, nz) = dmh;
    const Mat g = assemble_lmi(deltas, nz, ny, e.delta1p, e.delta2p, e.eta);
    return max_eig(s * g * s);
  };
  const auto cond_ok = [&](const CoefficientEllipsoid& e) {
    const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(e.delta_p()).eigenvalues();
    const double amax = ev.cwiseAbs().maxCoeff();
    const double amin = ev.cwiseAbs().minCoeff();
    return amin > 0.0 && amax / amin <= kCondCap;
  };
  // A candidate is kept only when the recovered LMI re-verifies and its
  // Delta_p stays dualizable; the conditioning worsens with gamma, so this
  // also caps how far the maximization pushes.
  const auto usable = [&](const CoefficientEllipsoid& e) {
    if (min_eig(e.delta1p) <= 0.0) return false;
    const double lam = max_eig(e.delta1p);
    return lmi_residual(e) <= kLmiSoundness / (1.0 + lam) && cond_ok(e);
  };

  CoefficientEllipsoid ell;
  {
    const FeasibilityResult fr = solve_feasibility(build(1.0, false), opts);
    if (!fr.feasible) {
      res.diagnostic =
          "ellipsoid LMI infeasible (t=" + std::to_string(fr.t) + ", " +
          to_string(fr.solution.status) +
          "): remainder or noise bounds too tight for the data";
      return res;
    }
    ell = recover(fr.solution, 1.0);
  }

  double gamma = 0.0;
  if (gamma_objective) {
    // Maximize gamma by bisection over plain feasibility solves; a direct
    // objective formulation stalls at the degenerate boundary optimum. Only
    // candidates whose LMI re-verifies are kept, so the reported gamma is a
    // certified bound.
    const auto try_gamma = [&](double gv, CoefficientEllipsoid* out) {
      const FeasibilityResult fr =
          solve_feasibility(build(1.0 / gv, true), opts);
      if (!fr.feasible) return false;
      CoefficientEllipsoid e = recover(fr.solution, gv);
      if (!usable(e)) return false;
      *out = std::move(e);
      return true;
    };
    // Individual probes can break down numerically at levels below ones that
    // succeed, so the upward scan tolerates isolated failures instead of
    // stopping at the first; a failed probe never pollutes the result because
    // only re-verified candidates are kept.
    double lo = 0.0;
    CoefficientEllipsoid cand;
    int misses = 0;
    for (double gv = 1.0; gv <= 1e8 && misses < 3; gv *= 4.0) {
      if (try_gamma(gv, &cand)) {
        lo = gv;
        ell = cand;
        misses = 0;
      } else {
        ++misses;
      }
    }
    double hi = 4.0 * std::max(lo, 1.0);
    for (int it = 0; it < 30 && hi - lo > 0.02 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (try_gamma(mid, &cand)) {
        lo = mid;
        ell = cand;
      } else {
        hi = mid;
      }
    }
    gamma = lo;
  }
  ell.gamma = gamma;

  const double p_min = min_eig(ell.delta1p);
  if (p_min <= 0.0) {
    res.diagnostic = "recovered delta1p is not positive definite";
    return res;
  }
  const double lmi_max = lmi_residual(ell);
  if (lmi_max > kLmiSoundness / (1.0 + max_eig(ell.delta1p))) {
    res.diagnostic = "LMI residual above tolerance: " + std::to_string(lmi_max);
    return res;
  }
  const Mat dp = ell.delta_p();
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(dp).eigenvalues();
  const double amax = ev.cwiseAbs().maxCoeff();
  const double amin = ev.cwiseAbs().minCoeff();
  if (amin <= 0.0 || amax / amin > kCondCap) {
    res.diagnostic = "Delta_p too ill-conditioned to dualize";
    return res;
  }
  ell.delta_star = delta_star_from_primal(ell.delta1p, ell.delta2p);
  res.feasible = true;
  res.ell = std::move(ell);
  return res;
}

CoefficientEllipsoid singleton_ellipsoid(const Mat& a_star, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("radius must be positive");
  CoefficientEllipsoid ell;
  ell.ny = static_cast<std::size_t>(a_star.rows());
  ell.nz = static_cast<std::size_t>(a_star.cols());
  const double s = 1.0 / (radius * radius);
  ell.delta1p = s * Mat::Identity(a_star.cols(), a_star.cols());
  ell.delta2p = -s * a_star.transpose();
  ell.delta_star = delta_star_from_primal(ell.delta1p, ell.delta2p);
  return ell;
}

bool membership(const CoefficientEllipsoid& ell, const Mat& A, double tol) {
  if (static_cast<std::size_t>(A.rows()) != ell.ny ||
      static_cast<std::size_t>(A.cols()) != ell.nz)
    throw std::invalid_argument("coefficient matrix dimension mismatch");
  Mat stack(ell.nz + ell.ny, ell.nz);
  stack.topRows(ell.nz) = Mat::Identity(ell.nz, ell.nz);
  stack.bottomRows(ell.ny) = A;
  return max_eig(stack.transpose() * ell.delta_star * stack) <= tol;
}

ResidualRange residual_range(const CoefficientEllipsoid& ell, const Vec& z,
                             const Vec& y) {
  const Eigen::LLT<Mat> llt(ell.delta1p);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("delta1p is not positive definite");
  const Vec d1inv_z = llt.solve(z);
  ResidualRange rr;
  rr.center = (y + ell.delta2p.transpose() * d1inv_z).norm();
  rr.radius = std::sqrt(std::max(0.0, z.dot(d1inv_z)));
  return rr;
}

double min_sector_over_ellipsoid(const CoefficientEllipsoid& ell,
                                 const SectorBound& sector, const Vec& x,
                                 const Vec& y) {
  const ResidualRange rr = residual_range(ell, sector.basis.eval(x), y);
  const double m = rr.min();
  return m * m - sector.rpoly_sum.eval(x);
}

}  // namespace tpv
