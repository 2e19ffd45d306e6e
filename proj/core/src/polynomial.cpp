#include "tpv/polynomial.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tpv {

Polynomial::Polynomial(std::size_t nvars, TermMap terms)
    : nvars_(nvars), terms_(std::move(terms)) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (it->first.nvars() != nvars_)
      throw std::invalid_argument("Polynomial: term nvars mismatch");
    it = (it->second == 0.0) ? terms_.erase(it) : std::next(it);
  }
}

Polynomial Polynomial::constant(std::size_t nvars, double c) {
  Polynomial p(nvars);
  p.add_term(MultiIndex::zero(nvars), c);
  return p;
}

Polynomial Polynomial::variable(std::size_t nvars, std::size_t j) {
  Polynomial p(nvars);
  p.add_term(MultiIndex::unit(nvars, j), 1.0);
  return p;
}

Polynomial Polynomial::monomial(const MultiIndex& alpha, double coeff) {
  Polynomial p(alpha.nvars());
  p.add_term(alpha, coeff);
  return p;
}

unsigned Polynomial::degree() const {
  unsigned d = 0;
  for (const auto& [a, c] : terms_) d = std::max(d, a.degree());
  return d;
}

double Polynomial::coeff(const MultiIndex& alpha) const {
  auto it = terms_.find(alpha);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::set_coeff(const MultiIndex& alpha, double c) {
  if (alpha.nvars() != nvars_)
    throw std::invalid_argument("Polynomial::set_coeff: nvars mismatch");
  if (c == 0.0)
    terms_.erase(alpha);
  else
    terms_[alpha] = c;
}

void Polynomial::add_term(const MultiIndex& alpha, double c) {
  if (alpha.nvars() != nvars_)
    throw std::invalid_argument("Polynomial::add_term: nvars mismatch");
  auto [it, inserted] = terms_.try_emplace(alpha, c);
  if (!inserted) it->second += c;
  if (it->second == 0.0) terms_.erase(it);
}

double eval_monomial(const MultiIndex& alpha, const Vec& x) {
  double v = 1.0;
  for (std::size_t i = 0; i < alpha.nvars(); ++i) {
    double p = 1.0, b = x[static_cast<Eigen::Index>(i)];
    for (unsigned e = 0; e < alpha[i]; ++e) p *= b;
    v *= p;
  }
  return v;
}

double Polynomial::eval(const Vec& x) const {
  if (static_cast<std::size_t>(x.size()) != nvars_)
    throw std::invalid_argument("Polynomial::eval: dimension mismatch");
  double v = 0.0;
  for (const auto& [a, c] : terms_) v += c * eval_monomial(a, x);
  return v;
}

Polynomial Polynomial::operator+(const Polynomial& q) const {
  Polynomial r(*this);
  r += q;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& q) const {
  Polynomial r(*this);
  r -= q;
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& q) {
  if (q.nvars_ != nvars_)
    throw std::invalid_argument("Polynomial: nvars mismatch in +");
  for (const auto& [a, c] : q.terms_) add_term(a, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& q) {
  if (q.nvars_ != nvars_)
    throw std::invalid_argument("Polynomial: nvars mismatch in -");
  for (const auto& [a, c] : q.terms_) add_term(a, -c);
  return *this;
}

Polynomial Polynomial::operator*(const Polynomial& q) const {
  if (q.nvars_ != nvars_)
    throw std::invalid_argument("Polynomial: nvars mismatch in *");
  Polynomial r(nvars_);
  for (const auto& [a, ca] : terms_)
    for (const auto& [b, cb] : q.terms_) r.add_term(a.plus(b), ca * cb);
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r(nvars_);
  if (s == 0.0) return r;
  for (const auto& [a, c] : terms_) r.terms_.emplace_hint(r.terms_.end(), a, c * s);
  return r;
}

Polynomial Polynomial::partial(std::size_t j) const {
  if (j >= nvars_)
    throw std::invalid_argument("Polynomial::partial: bad variable index");
  Polynomial r(nvars_);
  for (const auto& [a, c] : terms_)
    if (a[j] > 0) r.add_term(a.minus_unit(j), c * a[j]);
  return r;
}

Polynomial Polynomial::pow(unsigned p) const {
  Polynomial r = Polynomial::constant(nvars_, 1.0);
  for (unsigned i = 0; i < p; ++i) r = r * (*this);
  return r;
}

Polynomial Polynomial::embed(std::size_t nvars,
                             const std::vector<std::size_t>& placement) const {
  if (placement.size() != nvars_)
    throw std::invalid_argument("Polynomial::embed: placement size mismatch");
  Polynomial r(nvars);
  for (const auto& [a, c] : terms_) {
    std::vector<unsigned> e(nvars, 0);
    for (std::size_t i = 0; i < nvars_; ++i) e.at(placement[i]) = a[i];
    r.add_term(MultiIndex(std::move(e)), c);
  }
  return r;
}

double Polynomial::coeff_distance(const Polynomial& q) const {
  double d = 0.0;
  for (const auto& [a, c] : terms_) d = std::max(d, std::abs(c - q.coeff(a)));
  for (const auto& [a, c] : q.terms_) d = std::max(d, std::abs(c - coeff(a)));
  return d;
}

double Polynomial::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [a, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

bool Polynomial::operator==(const Polynomial& q) const {
  return nvars_ == q.nvars_ && terms_ == q.terms_;
}

std::string Polynomial::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [a, c] : terms_) {
    if (!first) os << " + ";
    os << c;
    for (std::size_t i = 0; i < nvars_; ++i)
      if (a[i] > 0) {
        os << "*x" << (i + 1);
        if (a[i] > 1) os << '^' << a[i];
      }
    first = false;
  }
  return os.str();
}

Polynomial shifted_variable(std::size_t nvars, std::size_t j, double c) {
  Polynomial p = Polynomial::variable(nvars, j);
  p.add_term(MultiIndex::zero(nvars), -c);
  return p;
}

Polynomial shifted_monomial(const MultiIndex& alpha, const Vec& omega) {
  const std::size_t n = alpha.nvars();
  if (static_cast<std::size_t>(omega.size()) != n)
    throw std::invalid_argument("shifted_monomial: dimension mismatch");
  // Binomial expansion per variable keeps coefficients exact up to rounding.
  Polynomial r = Polynomial::constant(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (alpha[j] == 0) continue;
    const double w = omega[static_cast<Eigen::Index>(j)];
    Polynomial f(n);
    for (unsigned i = 0; i <= alpha[j]; ++i) {
      const double c =
          binomial(alpha[j], i) * std::pow(-w, alpha[j] - i);
      if (c != 0.0) {
        MultiIndex m = MultiIndex::zero(n);
        for (unsigned e = 0; e < i; ++e) m = m.plus_unit(j);
        f.add_term(m, c);
      }
    }
    r = r * f;
  }
  return r;
}

}  // namespace tpv
