#include <sstream>

#include "tpv/sdp.hpp"

namespace tpv {

// Text format, one system per file:
//   line 1: `nblocks nvars`
//   then:   `block i j var coeff` triplet lines (0-based block and entry
//           indices, 1-based var indices; var 0 carries constants).
// The export describes the dual feasibility system of the problem: for each
// PSD block b the slack C_b - sum_k y_k A_{k,b} must be PSD, where y_k is
// var k+1 (one var per equality constraint). Each free-variable equality
// F_col' y = cf is appended as a pair of 1x1 blocks encoding both one-sided
// inequalities, so nblocks = psd blocks + 2 * free variables. The objective
// is not exported; this is a feasibility interchange format.
std::string export_sdp(const SdpProblem& p) {
  std::ostringstream os;
  os.precision(17);
  const std::size_t nb = p.n_blocks(), m = p.n_constraints(),
                    nf = p.n_free();
  os << nb + 2 * nf << ' ' << m << '\n';
  for (const auto& e : p.objective())
    os << e.block << ' ' << e.i << ' ' << e.j << ' ' << 0 << ' ' << e.coeff
       << '\n';
  for (std::size_t k = 0; k < m; ++k)
    for (const auto& e : p.row(k))
      os << e.block << ' ' << e.i << ' ' << e.j << ' ' << (k + 1) << ' '
         << -e.coeff << '\n';
  // Free-variable dual equalities as +/- 1x1 block pairs.
  Vec cf = Vec::Zero(static_cast<Eigen::Index>(nf));
  for (const auto& [var, c] : p.free_objective())
    cf[static_cast<Eigen::Index>(var)] += c;
  for (std::size_t v = 0; v < nf; ++v) {
    const std::size_t bpos = nb + 2 * v, bneg = nb + 2 * v + 1;
    const double c = cf[static_cast<Eigen::Index>(v)];
    if (c != 0.0) {
      os << bpos << " 0 0 0 " << -c << '\n';
      os << bneg << " 0 0 0 " << c << '\n';
    }
    for (std::size_t k = 0; k < m; ++k)
      for (const auto& [var, coeff] : p.free_row(k))
        if (var == v && coeff != 0.0) {
          os << bpos << " 0 0 " << (k + 1) << ' ' << coeff << '\n';
          os << bneg << " 0 0 " << (k + 1) << ' ' << -coeff << '\n';
        }
  }
  return os.str();
}

}  // namespace tpv
