#pragma once

#include <string>

#include "tpv/sdp.hpp"
#include "tpv/structure.hpp"
#include "tpv/taylor.hpp"

namespace tpv {

/// One measurement: state/input point, measured velocity/output, and a
/// positive bound on the norm of the measurement noise.
struct Sample {
  Vec x;
  Vec y;
  double eps = 0.0;
};

/// q = sum R^abs + eps^2 + 2 eps sqrt(sum R^abs) = (sqrt(sum R^abs) + eps)^2.
/// Degenerate zero (noiseless polynomial data) is lifted to 1e-12 so the
/// dualization step stays valid.
double compute_q(double rabs_sum, double eps);

struct RankReport {
  bool full_row_rank = false;
  Vec singular_values;
};

/// Full-row-rank test on Z = [z_1 ... z_S] with relative tolerance 1e-8.
RankReport rank_check(const std::vector<Vec>& zs);

/// Regressor/observation/bound triples feeding the ellipsoid LMI. The plain
/// envelope uses z = Taylor basis values with vector observations; the
/// structured path uses per-output regressors with scalar observations.
struct EllipsoidData {
  std::size_t nz = 0, ny = 0;
  std::vector<Vec> z;
  std::vector<Vec> y;
  std::vector<double> q;
};

EllipsoidData envelope_data(const std::vector<Sample>& samples,
                            const SectorBound& sector);
EllipsoidData structured_data(const std::vector<Sample>& samples,
                              const StructuredModel& model);

/// Delta_i = [z z^T, -z y^T; -y z^T, y y^T - q I], the per-sample dual-space
/// quadratic constraint on A^T.
Mat delta_block(const Vec& z, const Vec& y, double q);
std::vector<Mat> build_delta_blocks(const EllipsoidData& data);

struct CoefficientEllipsoid {
  std::size_t nz = 0, ny = 0;
  Mat delta1p;     // nz x nz, positive definite
  Mat delta2p;     // nz x ny
  Vec eta;         // per-sample multipliers (empty for synthetic ellipsoids)
  Mat delta_star;  // (nz+ny) sign-flipped inverse blocks of Delta_p
  double gamma = 0.0;  // certified lower bound on eig(delta1p), if maximized

  /// Delta_p assembled from the primal blocks.
  Mat delta_p() const;
};

struct EllipsoidResult {
  bool feasible = false;
  std::string diagnostic;
  CoefficientEllipsoid ell;
};

/// Solves the outer-approximation LMI over all samples. With
/// gamma_objective, additionally maximizes gamma subject to
/// delta1p >= gamma I, which shrinks the reported set; the constant identity
/// block of the LMI pins the scale, so gamma is bounded whenever the
/// consistent set has interior (a large explicit cap guards the degenerate
/// case). Infeasibility signals that the remainder or noise bounds are too
/// small for the data.
EllipsoidResult solve_outer_ellipsoid(const EllipsoidData& data,
                                      bool gamma_objective = true,
                                      const SdpOptions& opts = {});

/// Ellipsoid collapsed onto a known coefficient matrix: membership holds
/// exactly for matrices within spectral distance `radius` of a_star.
CoefficientEllipsoid singleton_ellipsoid(const Mat& a_star,
                                         double radius = 1e-3);

/// True iff max eigenvalue of [I; A]^T Delta_* [I; A] <= tol.
bool membership(const CoefficientEllipsoid& ell, const Mat& A,
                double tol = 1e-8);

/// Distances governing the residual over the ellipsoid at regressor value z
/// and observation y: center = ||y + Delta2p^T Delta1p^{-1} z|| and
/// radius = ||Delta1p^{-1/2} z||. The attainable residual norms over the
/// ellipsoid form the interval [max(0, center - radius), center + radius].
struct ResidualRange {
  double center = 0.0;
  double radius = 0.0;
  double min() const { return std::max(0.0, center - radius); }
};

ResidualRange residual_range(const CoefficientEllipsoid& ell, const Vec& z,
                             const Vec& y);

/// Exact min over A in the ellipsoid of p_sec(x, y, A): the residual range
/// reduces the matrix minimization to one scalar expression.
double min_sector_over_ellipsoid(const CoefficientEllipsoid& ell,
                                 const SectorBound& sector, const Vec& x,
                                 const Vec& y);

}  // namespace tpv
