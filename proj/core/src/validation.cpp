#include "tpv/validation.hpp"

#include <cmath>
#include <stdexcept>

namespace tpv {

double hoeffding_margin(double c, std::size_t v) {
  if (v < 1) throw std::invalid_argument("need at least one validation sample");
  if (!(c > 0.0 && c < 1.0))
    throw std::invalid_argument("confidence level must lie in (0,1)");
  return std::sqrt(std::log(2.0 / c) / (2.0 * static_cast<double>(v)));
}

namespace {

void check_config(const SvpConfig& cfg) {
  if (!(cfg.eps_stop > 0.0)) throw std::invalid_argument("eps_stop must be positive");
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0))
    throw std::invalid_argument("confidence level must lie in (0,1)");
  if (!(cfg.max_risk > 0.0 && cfg.max_risk < 1.0))
    throw std::invalid_argument("max risk must lie in (0,1)");
  if (!(cfg.initial_m > 0.0) || !(cfg.m_cap >= cfg.initial_m))
    throw std::invalid_argument("bad bound search range");
}

}  // namespace

EnvelopeBuilder make_envelope_builder(std::vector<Sample> samples, Vec omega,
                                      unsigned k, std::size_t ny,
                                      SdpOptions opts, bool gamma_objective) {
  return [samples = std::move(samples), omega = std::move(omega), k, ny, opts,
          gamma_objective](double m) {
    EnvelopeCandidate cand;
    const DerivativeBounds bounds = DerivativeBounds::uniform(
        ny, static_cast<std::size_t>(omega.size()), k, m);
    cand.sector = make_sector(build_basis(omega, k), bounds);
    const EllipsoidData data = envelope_data(samples, cand.sector);
    EllipsoidResult res = solve_outer_ellipsoid(data, gamma_objective, opts);
    cand.feasible = res.feasible;
    if (res.feasible) cand.ell = std::move(res.ell);
    return cand;
  };
}

bool violation_indicator(const EnvelopeCandidate& env, const Sample& sample,
                         double tol) {
  if (!env.feasible)
    throw std::invalid_argument("violation test requires a feasible envelope");
  const Vec z = env.sector.basis.eval(sample.x);
  const ResidualRange rr = residual_range(env.ell, z, sample.y);
  // Worst observation in the eps-ball: move away from the predicted center.
  const double worst = std::max(0.0, rr.center + sample.eps - rr.radius);
  return worst * worst > env.sector.rpoly_sum.eval(sample.x) + tol;
}

RiskReport empirical_risk(const EnvelopeCandidate& env,
                          const std::vector<Sample>& validation,
                          const SvpConfig& cfg) {
  if (validation.empty())
    throw std::invalid_argument("need at least one validation sample");
  RiskReport rep;
  rep.total = validation.size();
  for (std::size_t i = 0; i < validation.size(); ++i)
    if (violation_indicator(env, validation[i])) rep.violations.push_back(i);
  rep.empirical = static_cast<double>(rep.violations.size()) /
                  static_cast<double>(rep.total);
  if (cfg.iid)
    rep.margin = hoeffding_margin(cfg.confidence, validation.size());
  return rep;
}

namespace {

struct Probe {
  EnvelopeCandidate env;
  SvpTrailEntry entry;
};

Probe probe_m(double m, const EnvelopeBuilder& build,
              const std::vector<Sample>& validation, const SvpConfig& cfg) {
  Probe p;
  p.entry.m = m;
  p.env = build(m);
  p.entry.feasible = p.env.feasible;
  if (p.env.feasible) {
    p.entry.risk = empirical_risk(p.env, validation, cfg);
    p.entry.accepted = p.entry.risk.bound() <= cfg.max_risk;
  }
  return p;
}

}  // namespace

SvpResult svp_bisect(const std::vector<Sample>& validation,
                     const SvpConfig& cfg, const EnvelopeBuilder& build) {
  check_config(cfg);
  SvpResult res;

  // Upper-bound search: doubling always terminates for consistent noise
  // bounds since both feasibility and risk improve as the bound grows.
  double hi = cfg.initial_m;
  Probe best;
  for (;;) {
    best = probe_m(hi, build, validation, cfg);
    res.trail.push_back(best.entry);
    if (best.entry.accepted) break;
    hi *= 2.0;
    if (hi > cfg.m_cap) {
      res.diagnostic =
          "no accepted derivative bound below the cap: noise bounds or "
          "validation data are inconsistent with the model class";
      return res;
    }
  }

  double lo = 0.0;
  while (hi - lo >= cfg.eps_stop) {
    const double mid = 0.5 * (hi + lo);
    Probe p = probe_m(mid, build, validation, cfg);
    res.trail.push_back(p.entry);
    if (p.entry.accepted) {
      hi = mid;
      best = std::move(p);
    } else {
      lo = mid;
    }
    ++res.bisect_iterations;
  }

  res.success = true;
  res.m = hi;
  res.envelope = std::move(best.env);
  return res;
}

SvpVectorResult svp_bisect_per_output(std::size_t ny,
                                      const std::vector<Sample>& validation,
                                      const SvpConfig& cfg,
                                      const VectorEnvelopeBuilder& build) {
  check_config(cfg);
  if (ny < 1) throw std::invalid_argument("need at least one output");
  SvpVectorResult res;

  const auto probe = [&](const Vec& m, double varying) {
    SvpTrailEntry entry;
    entry.m = varying;
    EnvelopeCandidate env = build(m);
    entry.feasible = env.feasible;
    if (env.feasible) {
      entry.risk = empirical_risk(env, validation, cfg);
      entry.accepted = entry.risk.bound() <= cfg.max_risk;
    }
    res.trail.push_back(entry);
    return std::make_pair(entry.accepted, std::move(env));
  };

  // Common scalar doubling to find an accepted starting point.
  double hi = cfg.initial_m;
  EnvelopeCandidate env;
  for (;;) {
    auto [ok, e] = probe(Vec::Constant(static_cast<Eigen::Index>(ny), hi), hi);
    if (ok) {
      env = std::move(e);
      break;
    }
    hi *= 2.0;
    if (hi > cfg.m_cap) {
      res.diagnostic =
          "no accepted derivative bound below the cap: noise bounds or "
          "validation data are inconsistent with the model class";
      return res;
    }
  }

  // One bisection sweep per output; acceptance is monotone in each
  // coordinate, so the point stays accepted after every sweep.
  Vec m = Vec::Constant(static_cast<Eigen::Index>(ny), hi);
  for (std::size_t i = 0; i < ny; ++i) {
    const Eigen::Index ii = static_cast<Eigen::Index>(i);
    double lo_i = 0.0, hi_i = m[ii];
    while (hi_i - lo_i >= cfg.eps_stop) {
      Vec cand = m;
      cand[ii] = 0.5 * (hi_i + lo_i);
      auto [ok, e] = probe(cand, cand[ii]);
      if (ok) {
        hi_i = cand[ii];
        env = std::move(e);
      } else {
        lo_i = cand[ii];
      }
    }
    m[ii] = hi_i;
  }

  res.success = true;
  res.m = std::move(m);
  res.envelope = std::move(env);
  return res;
}

KIterationResult svp_k_iteration(
    const std::vector<Sample>& validation, const SvpConfig& cfg,
    const std::function<EnvelopeBuilder(unsigned k)>& builder_for_k,
    unsigned k_min, unsigned k_max, double m_accept) {
  if (k_min < 1 || k_min > k_max) throw std::invalid_argument("bad order range");
  KIterationResult res;
  for (unsigned k = k_min; k <= k_max; ++k) {
    SvpResult run = svp_bisect(validation, cfg, builder_for_k(k));
    const bool ok = run.success && run.m <= m_accept;
    res.attempts.emplace_back(k, std::move(run));
    if (ok) {
      res.success = true;
      res.k = k;
      res.run = res.attempts.back().second;
      return res;
    }
  }
  return res;
}

EpsModeResult min_eps_bisect(const std::function<bool(double eps)>& feasible,
                             double eps_stop, double eps_init, double eps_cap) {
  if (!(eps_stop > 0.0) || !(eps_init > 0.0) || !(eps_cap >= eps_init))
    throw std::invalid_argument("bad noise search range");
  EpsModeResult res;
  double hi = eps_init;
  for (;;) {
    const bool ok = feasible(hi);
    res.trail.emplace_back(hi, ok);
    if (ok) break;
    hi *= 2.0;
    if (hi > eps_cap) {
      res.diagnostic =
          "no feasible noise bound below the cap: derivative bounds too "
          "small for the data";
      return res;
    }
  }
  double lo = 0.0;
  while (hi - lo >= eps_stop) {
    const double mid = 0.5 * (hi + lo);
    const bool ok = feasible(mid);
    res.trail.emplace_back(mid, ok);
    if (ok)
      hi = mid;
    else
      lo = mid;
  }
  res.success = true;
  res.eps = hi;
  return res;
}

double eps_mode_scale(unsigned k, bool two_centers) {
  switch (k) {
    case 1:
      return 1.0;
    case 2:
      return two_centers ? 140.0 : 15.0;
    case 3:
      return 1000.0;
    default:
      throw std::invalid_argument("no scale factor tabulated for this order");
  }
}

}  // namespace tpv
