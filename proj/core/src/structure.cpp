#include "tpv/structure.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tpv {

namespace {

Vec subvector(const Vec& x, const std::vector<std::size_t>& vars) {
  Vec s(static_cast<Eigen::Index>(vars.size()));
  for (std::size_t j = 0; j < vars.size(); ++j)
    s[static_cast<Eigen::Index>(j)] = x[static_cast<Eigen::Index>(vars[j])];
  return s;
}

}  // namespace

Vec StructuredModel::regressor_eval(std::size_t i, const Vec& x) const {
  const auto& k = regressors.at(i);
  Vec v(static_cast<Eigen::Index>(n_theta));
  for (std::size_t p = 0; p < n_theta; ++p)
    v[static_cast<Eigen::Index>(p)] = k[p].eval(x);
  return v;
}

double StructuredModel::rabs(std::size_t i, const Vec& x) const {
  double s = 0.0;
  for (const auto& [sid, c] : spec.outputs.at(i).shared_terms) {
    if (c == 0.0) continue;
    const Vec xs = subvector(x, spec.nonlinearities.at(sid).vars);
    s += std::abs(c) * std::sqrt(remainder_abs(
                           spec.nonlinearities[sid].bounds, bases[sid], 0, xs));
  }
  return s * s;
}

double StructuredModel::predict(std::size_t i, const Vec& x,
                                const Vec& theta) const {
  if (static_cast<std::size_t>(theta.size()) != n_theta)
    throw std::invalid_argument("StructuredModel::predict: theta size");
  return offsets.at(i).eval(x) + theta.dot(regressor_eval(i, x));
}

StructuredModel compile_structure(const StructureSpec& spec,
                                  const Vec& omega) {
  if (static_cast<std::size_t>(omega.size()) != spec.nvars)
    throw std::invalid_argument("compile_structure: omega size mismatch");
  StructuredModel m;
  m.spec = spec;
  m.nvars = spec.nvars;

  m.n_theta = spec.n_scalar;
  for (const auto& nl : spec.nonlinearities) {
    if (nl.bounds.ny() != 1 || nl.bounds.nvars() != nl.vars.size() ||
        nl.bounds.order() != nl.order)
      throw std::invalid_argument("compile_structure: nonlinearity bounds");
    for (std::size_t v : nl.vars)
      if (v >= spec.nvars)
        throw std::invalid_argument("compile_structure: variable out of range");
    m.theta_offset.push_back(m.n_theta);
    m.bases.push_back(build_basis(subvector(omega, nl.vars), nl.order));
    m.omegas.push_back(omega);
    m.n_theta += m.bases.back().nz();
  }

  for (const auto& out : spec.outputs) {
    if (out.offset.nvars() != spec.nvars)
      throw std::invalid_argument("compile_structure: offset nvars mismatch");
    m.offsets.push_back(out.offset);
    std::vector<Polynomial> reg(m.n_theta, Polynomial(spec.nvars));
    for (const auto& [p, g] : out.scalar_terms) {
      if (p >= spec.n_scalar)
        throw std::invalid_argument("compile_structure: parameter index");
      reg.at(p) += g;
    }
    std::size_t nu = 0;
    Polynomial rp(spec.nvars);
    for (const auto& [sid, c] : out.shared_terms) {
      const auto& nl = spec.nonlinearities.at(sid);
      const auto& basis = m.bases.at(sid);
      for (std::size_t l = 0; l < basis.nz(); ++l)
        reg[m.theta_offset[sid] + l] +=
            basis.z[l].embed(spec.nvars, nl.vars) * c;
      if (c != 0.0 && nl.bounds.kappa(0) > 0) {
        ++nu;
        rp += remainder_poly(nl.bounds, basis, 0).embed(spec.nvars, nl.vars) *
              (c * c);
      }
    }
    m.regressors.push_back(std::move(reg));
    m.nu.push_back(static_cast<double>(nu));
    m.rpoly.push_back(rp * static_cast<double>(nu));
  }
  return m;
}

Polynomial structured_sector_polynomial(const StructuredModel& model,
                                        std::size_t i, const Vec& theta) {
  if (static_cast<std::size_t>(theta.size()) != model.n_theta)
    throw std::invalid_argument("structured_sector_polynomial: theta size");
  const std::size_t n = model.nvars, ny = model.ny();
  std::vector<std::size_t> place(n);
  std::iota(place.begin(), place.end(), std::size_t{0});
  const std::size_t nj = n + ny;
  Polynomial fit = model.offsets.at(i);
  for (std::size_t p = 0; p < model.n_theta; ++p)
    fit += model.regressors[i][p] * theta[static_cast<Eigen::Index>(p)];
  Polynomial res = Polynomial::variable(nj, n + i) - fit.embed(nj, place);
  return res * res - model.rpoly.at(i).embed(nj, place);
}

}  // namespace tpv
