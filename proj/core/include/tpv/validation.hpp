#pragma once

#include <functional>
#include <limits>
#include <optional>

#include "tpv/setmem.hpp"

namespace tpv {

/// Concentration margin sqrt(ln(2/c) / (2 V)) for V iid validation samples
/// at confidence level c in (0,1).
double hoeffding_margin(double c, std::size_t v);

struct SvpConfig {
  double eps_stop = 1e-2;    // bisection stops once the bracket is narrower
  double confidence = 0.05;  // c in (0,1)
  double max_risk = 0.1;     // acceptable risk bound in (0,1)
  double initial_m = 1.0;    // doubling search start for the upper bound
  double m_cap = 1073741824.0;  // 2^30; doubling past this aborts
  bool iid = true;  // false: validation data violates the iid assumption, the
                    // concentration margin is dropped and only the empirical
                    // rate is reported
};

/// Violation statistics of one envelope over a validation set.
struct RiskReport {
  double empirical = 0.0;        // fraction of violating samples
  std::optional<double> margin;  // absent for non-iid validation data
  std::size_t total = 0;
  std::vector<std::size_t> violations;  // indices into the validation set

  double bound() const { return empirical + margin.value_or(0.0); }
};

/// Envelope built for one derivative-bound guess: the sector band plus the
/// coefficient ellipsoid fitted to the data under that guess.
struct EnvelopeCandidate {
  bool feasible = false;
  SectorBound sector;
  CoefficientEllipsoid ell;
};

using EnvelopeBuilder = std::function<EnvelopeCandidate(double m)>;

/// Builder fitting an ellipsoid to `samples` with all derivative bounds
/// equal to m (basis centered at omega with order k). The minimal-diameter
/// ellipsoid is the default: a merely feasible ellipsoid can be arbitrarily
/// loose, which silences the violation indicator and lets the bisection
/// accept bounds far below the true derivative scale.
EnvelopeBuilder make_envelope_builder(std::vector<Sample> samples, Vec omega,
                                      unsigned k, std::size_t ny,
                                      SdpOptions opts = {},
                                      bool gamma_objective = true);

/// 1 iff some observation in the closed eps-ball around sample.y lies
/// outside the envelope. The worst ball point sits on the boundary away from
/// the ellipsoid's predicted center, so the ball maximization has the closed
/// form (max(0, center + eps - radius))^2 > sum R^poly(x).
bool violation_indicator(const EnvelopeCandidate& env, const Sample& sample,
                         double tol = 0.0);

RiskReport empirical_risk(const EnvelopeCandidate& env,
                          const std::vector<Sample>& validation,
                          const SvpConfig& cfg);

struct SvpTrailEntry {
  double m = 0.0;
  bool feasible = false;
  RiskReport risk;
  bool accepted = false;  // feasible and risk bound within max_risk
};

struct SvpResult {
  bool success = false;
  std::string diagnostic;
  double m = 0.0;  // smallest accepted bound found
  EnvelopeCandidate envelope;
  std::vector<SvpTrailEntry> trail;
  std::size_t bisect_iterations = 0;
};

/// Scalar bound estimation: double m until accepted, then bisect the bracket
/// [0, m] down to eps_stop, keeping the upper end accepted throughout.
SvpResult svp_bisect(const std::vector<Sample>& validation,
                     const SvpConfig& cfg, const EnvelopeBuilder& build);

using VectorEnvelopeBuilder = std::function<EnvelopeCandidate(const Vec& m)>;

struct SvpVectorResult {
  bool success = false;
  std::string diagnostic;
  Vec m;
  EnvelopeCandidate envelope;
  std::vector<SvpTrailEntry> trail;  // entries carry the varying coordinate
};

/// Per-output bound estimation by coordinate descent: a common scalar
/// doubling phase followed by one bisection sweep per output, holding the
/// other outputs fixed. Acceptance is monotone in every coordinate, so the
/// final point stays accepted.
SvpVectorResult svp_bisect_per_output(std::size_t ny,
                                      const std::vector<Sample>& validation,
                                      const SvpConfig& cfg,
                                      const VectorEnvelopeBuilder& build);

struct KIterationResult {
  bool success = false;
  unsigned k = 0;
  SvpResult run;
  std::vector<std::pair<unsigned, SvpResult>> attempts;
};

/// Outer loop over approximation orders k = k_min..k_max, stopping at the
/// first order whose scalar bisection succeeds with accepted m <= m_accept.
KIterationResult svp_k_iteration(
    const std::vector<Sample>& validation, const SvpConfig& cfg,
    const std::function<EnvelopeBuilder(unsigned k)>& builder_for_k,
    unsigned k_min, unsigned k_max,
    double m_accept = std::numeric_limits<double>::infinity());

struct EpsModeResult {
  bool success = false;
  std::string diagnostic;
  double eps = 0.0;
  std::vector<std::pair<double, bool>> trail;  // (eps, feasible)
};

/// Minimal-noise mode: with the derivative bounds held fixed, finds the
/// smallest common noise bound keeping the ellipsoid feasible, by doubling
/// from eps_init and bisecting down to eps_stop.
EpsModeResult min_eps_bisect(const std::function<bool(double eps)>& feasible,
                             double eps_stop, double eps_init = 1e-3,
                             double eps_cap = 1e6);

/// Empirical scale factors applied to the reference derivative bound in the
/// minimal-noise mode, by approximation order (1..3); order 2 has a separate
/// factor for the two-center envelope intersection.
double eps_mode_scale(unsigned k, bool two_centers = false);

}  // namespace tpv
