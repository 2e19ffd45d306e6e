#include "tpv/datapipe.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tpv {

double Trajectory::h() const {
  if (t.size() < 2) throw std::invalid_argument("trajectory too short");
  return t[1] - t[0];
}

void Trajectory::validate() const {
  const std::size_t n = length();
  if (n < 2) throw std::invalid_argument("trajectory too short");
  if (static_cast<std::size_t>(x.rows()) != n ||
      static_cast<std::size_t>(u.rows()) != n)
    throw std::invalid_argument("trajectory row counts disagree");
  const double step = t[1] - t[0];
  if (!(step > 0.0)) throw std::invalid_argument("non-increasing timestamps");
  for (std::size_t i = 1; i < n; ++i) {
    const double d = t[static_cast<Eigen::Index>(i)] -
                     t[static_cast<Eigen::Index>(i - 1)];
    if (std::abs(d - step) > 1e-9 * std::max(1.0, std::abs(step)))
      throw std::invalid_argument("non-uniform sampling");
  }
  if (!t.allFinite() || !x.allFinite() || !u.allFinite())
    throw std::invalid_argument("non-finite trajectory values");
}

namespace {

Mat smooth_channels(const Mat& m, std::size_t w) {
  const Eigen::Index n = m.rows();
  Mat out(m.rows(), m.cols());
  const Eigen::Index iw = static_cast<Eigen::Index>(w);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - iw);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + iw);
    double wsum = 0.0;
    Vec acc = Vec::Zero(m.cols());
    for (Eigen::Index j = lo; j <= hi; ++j) {
      // Triangular weight: W + 1 at the center down to 1 at offset W.
      const double wj = static_cast<double>(iw + 1 - std::abs(j - i));
      wsum += wj;
      acc += wj * m.row(j).transpose();
    }
    out.row(i) = (acc / wsum).transpose();
  }
  return out;
}

}  // namespace

Trajectory smooth(const Trajectory& traj, const SmoothingConfig& cfg) {
  traj.validate();
  if (cfg.half_width < 1)
    throw std::invalid_argument("smoothing half-width must be >= 1");
  if (2 * cfg.half_width + 1 > traj.length())
    throw std::invalid_argument("smoothing window exceeds signal length");
  Trajectory out = traj;
  out.x = smooth_channels(traj.x, cfg.half_width);
  out.u = smooth_channels(traj.u, cfg.half_width);
  return out;
}

Mat central_diff6(const Trajectory& traj) {
  traj.validate();
  const std::size_t n = traj.length();
  if (n < 7) throw std::invalid_argument("need at least 7 samples");
  const double h = traj.h();
  static constexpr double c1 = 3.0 / 4.0, c2 = 3.0 / 20.0, c3 = 1.0 / 60.0;
  Mat out(static_cast<Eigen::Index>(n - 6), traj.x.cols());
  for (std::size_t i = 3; i + 3 < n; ++i) {
    const auto row = [&](std::size_t k) { return traj.x.row(static_cast<Eigen::Index>(k)); };
    out.row(static_cast<Eigen::Index>(i - 3)) =
        (c1 * (row(i + 1) - row(i - 1)) - c2 * (row(i + 2) - row(i - 2)) +
         c3 * (row(i + 3) - row(i - 3))) /
        h;
  }
  return out;
}

double NoiseModel::eps_for(const Vec& xdot) const {
  switch (kind) {
    case Kind::None:
      return 0.0;
    case Kind::Amplitude:
      return value;
    case Kind::RelativeVelocity:
      return std::max(value * xdot.norm(), floor);
  }
  return 0.0;
}

Mat interior_rows(const Mat& m) {
  if (m.rows() < 7) throw std::invalid_argument("need at least 7 rows");
  return m.middleRows(3, m.rows() - 6);
}

std::vector<Sample> snapshots(const Trajectory& traj, const Mat& xdot,
                              std::size_t count, const NoiseModel& noise) {
  traj.validate();
  const std::size_t avail = static_cast<std::size_t>(xdot.rows());
  if (traj.length() < 7 || avail != traj.length() - 6)
    throw std::invalid_argument(
        "velocity rows must match the interior points of the trajectory");
  if (count < 1 || count > avail)
    throw std::invalid_argument("snapshot count exceeds available points");
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    // Equally spaced over [0, avail-1], first and last interior included.
    const std::size_t r =
        count == 1 ? 0 : (s * (avail - 1)) / (count - 1);
    const Eigen::Index ti = static_cast<Eigen::Index>(r + 3);
    Sample smp;
    smp.x = Vec(traj.x.cols() + traj.u.cols());
    smp.x.head(traj.x.cols()) = traj.x.row(ti).transpose();
    smp.x.tail(traj.u.cols()) = traj.u.row(ti).transpose();
    smp.y = xdot.row(static_cast<Eigen::Index>(r)).transpose();
    smp.eps = noise.eps_for(smp.y);
    out.push_back(std::move(smp));
  }
  return out;
}

double l2_lower_bound(const Trajectory& traj, std::size_t tmin,
                      std::size_t tmax) {
  traj.validate();
  const std::size_t n = traj.length();
  if (tmin < 1 || tmin > tmax) throw std::invalid_argument("bad window range");
  tmax = std::min(tmax, n);
  // Prefix sums of per-sample energies.
  Vec ex = Vec::Zero(static_cast<Eigen::Index>(n + 1));
  Vec eu = Vec::Zero(static_cast<Eigen::Index>(n + 1));
  for (std::size_t k = 0; k < n; ++k) {
    ex[static_cast<Eigen::Index>(k + 1)] =
        ex[static_cast<Eigen::Index>(k)] +
        traj.x.row(static_cast<Eigen::Index>(k)).squaredNorm();
    eu[static_cast<Eigen::Index>(k + 1)] =
        eu[static_cast<Eigen::Index>(k)] +
        traj.u.row(static_cast<Eigen::Index>(k)).squaredNorm();
  }
  // Windows anchored at the trajectory start: a window beginning with
  // nonzero stored state would let the ratio exceed the true gain.
  double best = -1.0;
  for (std::size_t tlen = tmin; tlen <= tmax; ++tlen) {
    const double du = eu[static_cast<Eigen::Index>(tlen)];
    if (du <= 0.0) continue;
    best = std::max(best, std::sqrt(ex[static_cast<Eigen::Index>(tlen)] / du));
  }
  if (best < 0.0)
    throw std::runtime_error("every window has zero input energy");
  return best;
}

SyntheticSystem coupled_oscillators() {
  SyntheticSystem s;
  s.name = "coupled-oscillators";
  s.nx = 2;
  s.nu = 1;
  s.rhs = [](const Vec& x, const Vec& u) {
    const double c = 0.3 * std::sin(x[1] - x[0]);
    Vec dx(2);
    dx[0] = -x[0] + c;
    dx[1] = -0.5 * x[1] - c + u[0];
    return dx;
  };
  s.box_lo = Vec::Constant(2, -0.7);
  s.box_hi = Vec::Constant(2, 0.7);
  return s;
}

SyntheticSystem two_tank_surrogate(double c1, double c2, double cu) {
  SyntheticSystem s;
  s.name = "two-tank-surrogate";
  s.nx = 2;
  s.nu = 1;
  s.rhs = [c1, c2, cu](const Vec& x, const Vec& u) {
    Vec dx(2);
    dx[0] = -c1 * std::sqrt(std::max(x[0], 0.0)) + cu * u[0];
    dx[1] = c1 * std::sqrt(std::max(x[0], 0.0)) -
            c2 * std::sqrt(std::max(x[1], 0.0));
    return dx;
  };
  s.box_lo = Vec::Constant(2, 0.05);
  s.box_hi = Vec::Constant(2, 0.25);
  return s;
}

SimulationResult simulate(const SyntheticSystem& system, const Vec& x0,
                          const std::function<Vec(double)>& input,
                          double duration, double h, const NoiseModel& noise,
                          std::uint32_t seed) {
  if (!(h > 0.0) || !(duration >= 0.0))
    throw std::invalid_argument("bad simulation horizon");
  if (static_cast<std::size_t>(x0.size()) != system.nx)
    throw std::invalid_argument("initial state dimension mismatch");
  const std::size_t steps = static_cast<std::size_t>(std::llround(duration / h));
  const std::size_t n = steps + 1;

  SimulationResult res;
  res.traj.t = Vec(static_cast<Eigen::Index>(n));
  res.traj.x = Mat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(system.nx));
  res.traj.u = Mat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(system.nu));
  res.xdot_true = Mat(res.traj.x.rows(), res.traj.x.cols());
  res.xdot_noisy = Mat(res.traj.x.rows(), res.traj.x.cols());
  res.eps = Vec(static_cast<Eigen::Index>(n));

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto in_box = [&](const Vec& x) {
    if (system.box_lo.size() == 0) return true;
    return (x.array() >= system.box_lo.array()).all() &&
           (x.array() <= system.box_hi.array()).all();
  };

  Vec x = x0;
  res.valid_length = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double tk = static_cast<double>(k) * h;
    const Vec uk = input(tk);
    const Eigen::Index ki = static_cast<Eigen::Index>(k);
    if (!in_box(x)) {
      res.truncated = true;
      res.traj.t.conservativeResize(ki);
      res.traj.x.conservativeResize(ki, Eigen::NoChange);
      res.traj.u.conservativeResize(ki, Eigen::NoChange);
      res.xdot_true.conservativeResize(ki, Eigen::NoChange);
      res.xdot_noisy.conservativeResize(ki, Eigen::NoChange);
      res.eps.conservativeResize(ki);
      break;
    }
    res.traj.t[ki] = tk;
    res.traj.x.row(ki) = x.transpose();
    res.traj.u.row(ki) = uk.transpose();
    const Vec dx = system.rhs(x, uk);
    res.xdot_true.row(ki) = dx.transpose();
    const double eps = noise.eps_for(dx);
    res.eps[ki] = eps;
    Vec d = Vec::Zero(dx.size());
    if (eps > 0.0) {
      for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = gauss(rng);
      const double nrm = d.norm();
      if (nrm > 0.0) {
        // Uniform direction, uniform-in-ball radius, then a hard projection
        // so the bound holds exactly.
        const double radius =
            eps * std::pow(unif(rng), 1.0 / static_cast<double>(d.size()));
        d *= std::min(radius, eps) / nrm;
      }
    }
    res.xdot_noisy.row(ki) = (dx + d).transpose();
    res.valid_length = k + 1;
    if (k + 1 < n) {
      // Classic explicit fourth-order step; input held piecewise over the
      // substeps via its continuous-time definition.
      const Vec k1 = system.rhs(x, input(tk));
      const Vec k2 = system.rhs(x + 0.5 * h * k1, input(tk + 0.5 * h));
      const Vec k3 = system.rhs(x + 0.5 * h * k2, input(tk + 0.5 * h));
      const Vec k4 = system.rhs(x + h * k3, input(tk + h));
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return res;
}

}  // namespace tpv
