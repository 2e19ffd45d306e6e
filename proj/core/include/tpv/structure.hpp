#pragma once

#include <string>

#include "tpv/taylor.hpp"

namespace tpv {

/// An unknown scalar nonlinearity shared between outputs. It depends only on
/// the listed subset of the state variables and is approximated by its own
/// Taylor basis of the given order over that subset.
struct SharedNonlinearity {
  std::string name;
  std::vector<std::size_t> vars;  // indices into the full variable vector
  unsigned order = 0;
  DerivativeBounds bounds;  // single output, over vars.size() variables
};

/// One model output written as
///   offset(x) + sum_p theta_p * g_p(x) + sum_s c_s * f_s(x_subset),
/// with theta_p unknown scalars, g_p known polynomials, f_s unknown shared
/// nonlinearities and c_s known scalar multipliers.
struct StructuredOutput {
  Polynomial offset;
  std::vector<std::pair<std::size_t, Polynomial>> scalar_terms;
  std::vector<std::pair<std::size_t, double>> shared_terms;
};

struct StructureSpec {
  std::size_t nvars = 0;     // full variable vector dimension
  std::size_t n_scalar = 0;  // number of unknown scalar parameters
  std::vector<SharedNonlinearity> nonlinearities;
  std::vector<StructuredOutput> outputs;
};

/// Compiled structured model: every output is offset_i(x) + theta^T k_i(x)
/// plus a remainder from the Taylor truncation of the shared nonlinearities.
/// The parameter vector theta stacks the scalar parameters first, then the
/// Taylor coefficients of each nonlinearity in declaration order.
struct StructuredModel {
  std::size_t nvars = 0;
  std::size_t n_theta = 0;
  std::vector<std::size_t> theta_offset;  // start index per nonlinearity
  std::vector<TaylorBasis> bases;         // over each subset, subset omega
  std::vector<Vec> omegas;                // full-space center per nonlinearity
  std::vector<Polynomial> offsets;
  std::vector<std::vector<Polynomial>> regressors;  // k_i(x), length n_theta
  std::vector<Polynomial> rpoly;                    // per-output R^poly
  std::vector<double> nu;  // per-output count of remainder-carrying terms
  StructureSpec spec;

  std::size_t ny() const { return offsets.size(); }
  Vec regressor_eval(std::size_t i, const Vec& x) const;
  /// Squared remainder bound of output i at x:
  /// ( sum_s |c_s| sqrt(R^abs_s(x)) )^2 over the shared terms of output i.
  double rabs(std::size_t i, const Vec& x) const;
  /// Model output i at (x, theta), remainder excluded.
  double predict(std::size_t i, const Vec& x, const Vec& theta) const;
};

/// omega is the Taylor center in the full variable space; each nonlinearity
/// uses the matching sub-vector of omega.
StructuredModel compile_structure(const StructureSpec& spec, const Vec& omega);

/// (y_i - offset_i(x) - theta^T k_i(x))^2 - R^poly_i(x) for a known theta,
/// in joint variables (x_1..x_n, y_1..y_ny).
Polynomial structured_sector_polynomial(const StructuredModel& model,
                                        std::size_t i, const Vec& theta);

}  // namespace tpv
