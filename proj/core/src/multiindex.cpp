#include "tpv/multiindex.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tpv {

MultiIndex::MultiIndex(std::vector<unsigned> exponents)
    : exponents_(std::move(exponents)) {}

MultiIndex MultiIndex::zero(std::size_t nvars) {
  return MultiIndex(std::vector<unsigned>(nvars, 0));
}

MultiIndex MultiIndex::unit(std::size_t nvars, std::size_t j) {
  std::vector<unsigned> e(nvars, 0);
  e.at(j) = 1;
  return MultiIndex(std::move(e));
}

unsigned MultiIndex::degree() const {
  return std::accumulate(exponents_.begin(), exponents_.end(), 0u);
}

double MultiIndex::factorial() const {
  if (degree() > 12)
    throw std::overflow_error("MultiIndex::factorial: |alpha| > 12");
  double f = 1.0;
  for (unsigned e : exponents_)
    for (unsigned i = 2; i <= e; ++i) f *= static_cast<double>(i);
  return f;
}

MultiIndex MultiIndex::plus(const MultiIndex& other) const {
  if (other.nvars() != nvars())
    throw std::invalid_argument("MultiIndex::plus: nvars mismatch");
  std::vector<unsigned> e(exponents_);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] += other.exponents_[i];
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::plus_unit(std::size_t j) const {
  std::vector<unsigned> e(exponents_);
  e.at(j) += 1;
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::minus_unit(std::size_t j) const {
  std::vector<unsigned> e(exponents_);
  if (e.at(j) == 0)
    throw std::invalid_argument("MultiIndex::minus_unit: exponent is zero");
  e[j] -= 1;
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::doubled() const {
  std::vector<unsigned> e(exponents_);
  for (auto& x : e) x *= 2;
  return MultiIndex(std::move(e));
}

std::string MultiIndex::str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    if (i) os << ',';
    os << exponents_[i];
  }
  os << ')';
  return os.str();
}

bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
  const unsigned da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  // Within a degree the larger exponent vector (lex) comes first.
  return a.exponents() > b.exponents();
}

namespace {
void enumerate_degree(std::size_t n, unsigned d, std::vector<unsigned>& cur,
                      std::size_t pos, unsigned remaining,
                      std::vector<MultiIndex>& out) {
  if (pos + 1 == n) {
    cur[pos] = remaining;
    out.emplace_back(cur);
    return;
  }
  for (unsigned e = remaining; e != static_cast<unsigned>(-1); --e) {
    cur[pos] = e;
    enumerate_degree(n, d, cur, pos + 1, remaining - e, out);
  }
}
}  // namespace

std::vector<MultiIndex> enumerate_multi_indices(std::size_t n, unsigned dmin,
                                                unsigned dmax) {
  if (dmin > dmax)
    throw std::invalid_argument("enumerate_multi_indices: dmin > dmax");
  // Over zero variables only the empty exponent vector exists (degree 0).
  if (n == 0)
    return dmin == 0 ? std::vector<MultiIndex>{MultiIndex::zero(0)}
                     : std::vector<MultiIndex>{};
  std::vector<MultiIndex> out;
  std::vector<unsigned> cur(n, 0);
  for (unsigned d = dmin; d <= dmax; ++d)
    enumerate_degree(n, d, cur, 0, d, out);
  return out;
}

double binomial(unsigned n, unsigned k) {
  if (k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace tpv
