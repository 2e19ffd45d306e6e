#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "tpv/setmem.hpp"

namespace tpv {

/// Uniformly sampled state/input recording. Rows index time, columns index
/// signal dimensions.
struct Trajectory {
  Vec t;
  Mat x;
  Mat u;

  std::size_t length() const { return static_cast<std::size_t>(t.size()); }
  std::size_t nx() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t nu() const { return static_cast<std::size_t>(u.cols()); }
  double h() const;

  /// Throws if sampling is non-uniform (relative jitter above 1e-9), sizes
  /// disagree, or any value is non-finite.
  void validate() const;
};

struct SmoothingConfig {
  std::size_t half_width = 1;  // W >= 1 samples on each side
};

/// Triangular-weighted moving average over 2W+1 samples, applied to every
/// state and input channel. Weights peak at the center, decay linearly to
/// zero at the window edges and are normalized to sum one; edge points use
/// truncated renormalized windows. Requires 2W+1 <= length.
Trajectory smooth(const Trajectory& traj, const SmoothingConfig& cfg);

/// Sixth-order central difference stencil
/// (-1/60, 3/20, -3/4, 0, 3/4, -3/20, 1/60) / h applied to the state
/// channels at interior points; the first and last three rows are dropped.
/// Result row r estimates the derivative at time index r + 3.
Mat central_diff6(const Trajectory& traj);

struct NoiseModel {
  enum class Kind : std::uint8_t {
    None,
    Amplitude,         // constant bound: eps
    RelativeVelocity,  // eps = ratio * ||xdot|| per sample
  };
  Kind kind = Kind::None;
  double value = 0.0;  // amplitude or ratio
  double floor = 1e-9;  // keeps eps strictly positive for the relative model

  double eps_for(const Vec& xdot) const;
};

/// Drops the first and last three rows, aligning a full-length per-sample
/// matrix (such as ground-truth velocities) with the central_diff6 layout.
Mat interior_rows(const Mat& m);

/// Picks `count` equally spaced interior snapshots. The velocity matrix must
/// follow the central_diff6 layout (row r = time index r + 3); each Sample
/// stacks state then input and carries eps from the noise model.
std::vector<Sample> snapshots(const Trajectory& traj, const Mat& xdot,
                              std::size_t count, const NoiseModel& noise);

/// max over window lengths T in [tmin, tmax] of
/// sqrt(sum_{k<T} ||x_k||^2) / sqrt(sum_{k<T} ||u_k||^2), with windows
/// anchored at the trajectory start (so the ratio stays below the true gain
/// when the run begins at rest); zero-input-energy windows are skipped.
/// Throws if every window has zero input energy.
double l2_lower_bound(const Trajectory& traj, std::size_t tmin = 4,
                      std::size_t tmax = 150);

struct SyntheticSystem {
  std::string name;
  std::size_t nx = 0, nu = 0;
  std::function<Vec(const Vec& x, const Vec& u)> rhs;
  Vec box_lo, box_hi;  // empty = unconstrained
};

/// dx1 = c1 x1 + 0.3 sin(x2 - x1), dx2 = c2 x2 - 0.3 sin(x2 - x1) + cu u,
/// with (c1, c2, cu) = (-1, -0.5, 1) and operating box [-0.7, 0.7]^2.
SyntheticSystem coupled_oscillators();

/// dh1 = -c1 sqrt(h1) + cu u, dh2 = c1 sqrt(h1) - c2 sqrt(h2),
/// levels restricted to [0.05, 0.25].
SyntheticSystem two_tank_surrogate(double c1 = 0.04, double c2 = 0.05,
                                   double cu = 0.01);

struct SimulationResult {
  Trajectory traj;
  Mat xdot_true;   // noise-free right-hand side at every sample time
  Mat xdot_noisy;  // exported velocities with bounded noise applied
  Vec eps;         // per-sample noise bound actually used
  bool truncated = false;   // state left the declared box
  std::size_t valid_length = 0;  // samples kept before truncation
};

/// Classic fourth-order Runge-Kutta integration with step h. Noise draws are
/// uniform direction with uniform-in-ball radius, then projected into the
/// eps ball, so the bound holds exactly. Deterministic for a fixed seed.
SimulationResult simulate(const SyntheticSystem& system, const Vec& x0,
                          const std::function<Vec(double)>& input,
                          double duration, double h,
                          const NoiseModel& noise = {}, std::uint32_t seed = 0);

}  // namespace tpv
