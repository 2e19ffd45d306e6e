#include "tpv/sos.hpp"

#include <Eigen/Eigenvalues>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tpv {

LinExpr LinExpr::atom(std::size_t id, double coeff) {
  LinExpr e;
  if (coeff != 0.0) e.terms_[id] = coeff;
  return e;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  for (const auto& [id, c] : o.terms_) {
    auto [it, inserted] = terms_.try_emplace(id, c);
    if (!inserted) it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
  const_ += o.const_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) { return *this += o * -1.0; }

LinExpr LinExpr::operator+(const LinExpr& o) const {
  LinExpr r(*this);
  r += o;
  return r;
}

LinExpr LinExpr::operator-(const LinExpr& o) const {
  LinExpr r(*this);
  r -= o;
  return r;
}

LinExpr LinExpr::operator*(double s) const {
  LinExpr r;
  r.const_ = const_ * s;
  if (s != 0.0)
    for (const auto& [id, c] : terms_) r.terms_[id] = c * s;
  return r;
}

LinPoly LinPoly::from(const Polynomial& p) {
  LinPoly r(p.nvars());
  for (const auto& [a, c] : p.terms()) r.terms_[a] = LinExpr(c);
  return r;
}

LinPoly LinPoly::from_expr(std::size_t nvars, const LinExpr& e) {
  LinPoly r(nvars);
  r.add_term(MultiIndex::zero(nvars), e);
  return r;
}

void LinPoly::add_term(const MultiIndex& alpha, const LinExpr& e) {
  if (alpha.nvars() != nvars_)
    throw std::invalid_argument("LinPoly::add_term: nvars mismatch");
  auto [it, inserted] = terms_.try_emplace(alpha, e);
  if (!inserted) it->second += e;
  if (it->second.is_zero()) terms_.erase(it);
}

LinExpr LinPoly::coeff(const MultiIndex& alpha) const {
  auto it = terms_.find(alpha);
  return it == terms_.end() ? LinExpr() : it->second;
}

unsigned LinPoly::degree() const {
  unsigned d = 0;
  for (const auto& [a, e] : terms_) d = std::max(d, a.degree());
  return d;
}

LinPoly& LinPoly::operator+=(const LinPoly& o) {
  if (o.nvars_ != nvars_)
    throw std::invalid_argument("LinPoly: nvars mismatch");
  for (const auto& [a, e] : o.terms_) add_term(a, e);
  return *this;
}

LinPoly& LinPoly::operator-=(const LinPoly& o) { return *this += o * -1.0; }

LinPoly LinPoly::operator+(const LinPoly& o) const {
  LinPoly r(*this);
  r += o;
  return r;
}

LinPoly LinPoly::operator-(const LinPoly& o) const {
  LinPoly r(*this);
  r -= o;
  return r;
}

LinPoly LinPoly::operator*(const Polynomial& p) const {
  if (p.nvars() != nvars_)
    throw std::invalid_argument("LinPoly::*: nvars mismatch");
  LinPoly r(nvars_);
  for (const auto& [a, e] : terms_)
    for (const auto& [b, c] : p.terms()) r.add_term(a.plus(b), e * c);
  return r;
}

LinPoly LinPoly::operator*(double s) const {
  LinPoly r(nvars_);
  if (s == 0.0) return r;
  for (const auto& [a, e] : terms_) r.terms_[a] = e * s;
  return r;
}

Polynomial LinPoly::substitute(const Vec& atom_values) const {
  Polynomial r(nvars_);
  for (const auto& [a, e] : terms_) {
    double v = e.constant();
    for (const auto& [id, c] : e.terms())
      v += c * atom_values[static_cast<Eigen::Index>(id)];
    r.add_term(a, v);
  }
  return r;
}

LinPolyMatrix::LinPolyMatrix(std::size_t rows, std::size_t cols,
                             std::size_t nvars)
    : rows_(rows), cols_(cols), nvars_(nvars),
      entries_(rows * cols, LinPoly(nvars)) {}

LinPolyMatrix LinPolyMatrix::from(const PolyMatrix& m) {
  LinPolyMatrix r(m.rows(), m.cols(), m.nvars());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      r(i, j) = LinPoly::from(m(i, j));
  return r;
}

LinPoly& LinPolyMatrix::operator()(std::size_t i, std::size_t j) {
  return entries_.at(i * cols_ + j);
}

const LinPoly& LinPolyMatrix::operator()(std::size_t i, std::size_t j) const {
  return entries_.at(i * cols_ + j);
}

LinPolyMatrix LinPolyMatrix::operator+(const LinPolyMatrix& o) const {
  LinPolyMatrix r(*this);
  r += o;
  return r;
}

LinPolyMatrix& LinPolyMatrix::operator+=(const LinPolyMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_)
    throw std::invalid_argument("LinPolyMatrix::+=: shape mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i)
    entries_[i] += o.entries_[i];
  return *this;
}

PolyMatrix LinPolyMatrix::substitute(const Vec& atom_values) const {
  PolyMatrix r(rows_, cols_, nvars_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      r(i, j) = (*this)(i, j).substitute(atom_values);
  return r;
}

LinPolyMatrix congruence(const PolyMatrix& l, const LinPolyMatrix& q) {
  if (q.rows() != q.cols() || q.rows() != l.rows())
    throw std::invalid_argument("congruence: shape mismatch");
  LinPolyMatrix r(l.cols(), l.cols(), l.nvars());
  for (std::size_t p = 0; p < q.rows(); ++p)
    for (std::size_t s = 0; s < q.cols(); ++s)
      for (std::size_t i = 0; i < l.cols(); ++i)
        for (std::size_t j = 0; j < l.cols(); ++j) {
          const Polynomial known = l(p, i) * l(s, j);
          if (!known.is_zero()) r(i, j) += q(p, s) * known;
        }
  return r;
}

LinPolyMatrix scale_matrix(const LinPoly& t, const PolyMatrix& m) {
  LinPolyMatrix r(m.rows(), m.cols(), m.nvars());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (!m(i, j).is_zero()) r(i, j) = t * m(i, j);
  return r;
}

VerifyReport verify_certificate(const GramCertificate& cert, double eig_tol,
                                double res_tol) {
  VerifyReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  rep.max_residual = 0.0;
  for (const auto& blk : cert.blocks) {
    const Mat g = 0.5 * (blk.gram + blk.gram.transpose());
    const double lmin =
        Eigen::SelfAdjointEigenSolver<Mat>(g, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .minCoeff();
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, lmin);

    // Reconstruct v(x)^T G v(x) and compare coefficients entrywise.
    const std::size_t n = blk.basis.size(), nvars = blk.target.nvars();
    PolyMatrix recon(blk.ncomp, blk.ncomp, nvars);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q) {
        const double v = g(static_cast<Eigen::Index>(p),
                           static_cast<Eigen::Index>(q));
        if (v != 0.0)
          recon(blk.basis[p].first, blk.basis[q].first)
              .add_term(blk.basis[p].second.plus(blk.basis[q].second), v);
      }
    for (std::size_t i = 0; i < blk.ncomp; ++i)
      for (std::size_t j = 0; j < blk.ncomp; ++j)
        rep.max_residual = std::max(
            rep.max_residual, blk.target(i, j).coeff_distance(recon(i, j)));
  }
  if (cert.blocks.empty()) rep.min_eigenvalue = 0.0;
  rep.pass = rep.min_eigenvalue >= -eig_tol && rep.max_residual <= res_tol;
  return rep;
}

namespace {

/// Monomials over a variable subset, embedded in the full variable space.
std::vector<MultiIndex> subset_monomials(std::size_t nvars,
                                         const std::vector<std::size_t>& vars,
                                         unsigned dmin, unsigned dmax) {
  std::vector<MultiIndex> out;
  for (const auto& a : enumerate_multi_indices(vars.size(), dmin, dmax)) {
    std::vector<unsigned> e(nvars, 0);
    for (std::size_t i = 0; i < vars.size(); ++i) e.at(vars[i]) = a[i];
    out.emplace_back(std::move(e));
  }
  return out;
}

}  // namespace

std::size_t SosProgram::add_free_atom() {
  const std::size_t idx = sdp_.add_free();
  atoms_.push_back({true, idx, 0, 0, 0});
  return atoms_.size() - 1;
}

std::size_t SosProgram::add_psd_atom(std::size_t block, std::size_t i,
                                     std::size_t j) {
  atoms_.push_back({false, 0, block, i, j});
  return atoms_.size() - 1;
}

LinExpr SosProgram::scalar() { return LinExpr::atom(add_free_atom()); }

LinExpr SosProgram::nonneg() {
  const std::size_t b = sdp_.add_block(1);
  return LinExpr::atom(add_psd_atom(b, 0, 0));
}

LinPoly SosProgram::free_multiplier(std::size_t nvars,
                                    const std::vector<std::size_t>& vars,
                                    unsigned degree) {
  LinPoly p(nvars);
  for (const auto& a : subset_monomials(nvars, vars, 0, degree))
    p.add_term(a, scalar());
  return p;
}

LinPoly SosProgram::sos_multiplier(std::size_t nvars,
                                   const std::vector<std::size_t>& vars,
                                   unsigned degree) {
  if (degree % 2 != 0)
    throw std::invalid_argument("sos_multiplier: degree must be even");
  const auto basis = subset_monomials(nvars, vars, 0, degree / 2);
  const std::size_t n = basis.size();
  const std::size_t b = sdp_.add_block(n);
  LinPoly p(nvars);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double w = (i == j) ? 1.0 : 2.0;
      p.add_term(basis[i].plus(basis[j]),
                 LinExpr::atom(add_psd_atom(b, i, j), w));
    }
  return p;
}

void SosProgram::add_constraint_row(const LinExpr& e, double rhs) {
  const std::size_t row = sdp_.add_constraint(rhs - e.constant());
  for (const auto& [id, c] : e.terms()) {
    const Atom& a = atoms_.at(id);
    if (a.is_free)
      sdp_.add_free_entry(row, a.free_index, c);
    else
      sdp_.add_entry(row, a.block, a.i, a.j, (a.i == a.j) ? c : c / 2.0);
  }
}

void SosProgram::require_eq(const LinExpr& e, double rhs) {
  add_constraint_row(e, rhs);
}

void SosProgram::require_zero(const LinPoly& p) {
  for (const auto& [a, e] : p.terms()) add_constraint_row(e, 0.0);
}

void SosProgram::minimize(const LinExpr& objective) {
  for (const auto& [id, c] : objective.terms()) {
    const Atom& a = atoms_.at(id);
    if (a.is_free)
      sdp_.add_free_objective(a.free_index, c);
    else
      sdp_.add_objective_entry(a.block, a.i, a.j, (a.i == a.j) ? c : c / 2.0);
  }
}

std::size_t SosProgram::require_sos(const LinPoly& target, unsigned half_degree,
                                    const std::vector<std::size_t>& vars,
                                    bool reduce) {
  LinPolyMatrix m(1, 1, target.nvars());
  m(0, 0) = target;
  return require_sos_matrix(m, half_degree, vars, reduce);
}

std::size_t SosProgram::require_sos_matrix(const LinPolyMatrix& target,
                                           unsigned half_degree,
                                           const std::vector<std::size_t>& vars,
                                           bool reduce) {
  if (target.rows() != target.cols())
    throw std::invalid_argument("require_sos_matrix: target not square");
  const std::size_t nc = target.rows(), nvars = target.nvars();
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t j = 0; j < nc; ++j)
      if (target(i, j).degree() > 2 * half_degree) {
        std::ostringstream os;
        os << "require_sos_matrix: entry (" << i << ", " << j << ") has degree "
           << target(i, j).degree() << " > " << 2 * half_degree;
        throw std::invalid_argument(os.str());
      }

  std::vector<std::vector<MultiIndex>> bases(
      nc, subset_monomials(nvars, vars, 0, half_degree));
  if (reduce) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t a = 0; a < nc; ++a) {
        // Count of basis pairs reaching each even monomial in component a.
        std::map<MultiIndex, std::size_t, GradedLexLess> pair_count;
        for (std::size_t p = 0; p < bases[a].size(); ++p)
          for (std::size_t q = p; q < bases[a].size(); ++q)
            ++pair_count[bases[a][p].plus(bases[a][q])];
        std::vector<MultiIndex> kept;
        for (const auto& beta : bases[a]) {
          const MultiIndex sq = beta.doubled();
          const bool in_diag = target(a, a).terms().count(sq) > 0;
          // A basis monomial is removable when its square appears nowhere in
          // the target diagonal and only the pair (beta, beta) reaches it:
          // the PSD Gram then forces the whole row to zero.
          if (!in_diag && pair_count[sq] == 1)
            changed = true;
          else
            kept.push_back(beta);
        }
        bases[a] = std::move(kept);
      }
    }
  }

  std::vector<std::pair<std::size_t, MultiIndex>> labels;
  for (std::size_t a = 0; a < nc; ++a)
    for (const auto& beta : bases[a]) labels.emplace_back(a, beta);
  const std::size_t n = labels.size();
  if (n == 0)
    throw std::invalid_argument("require_sos_matrix: empty Gram basis");
  const std::size_t block = sdp_.add_block(n);

  // Gram contributions per component pair and monomial.
  std::map<std::pair<std::size_t, std::size_t>,
           std::map<MultiIndex, LinExpr, GradedLexLess>>
      contrib;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p; q < n; ++q) {
      const std::size_t a = std::min(labels[p].first, labels[q].first);
      const std::size_t b = std::max(labels[p].first, labels[q].first);
      const double w = (labels[p].first == labels[q].first && p != q) ? 2.0
                                                                      : 1.0;
      contrib[{a, b}][labels[p].second.plus(labels[q].second)] +=
          LinExpr::atom(add_psd_atom(block, p, q), w);
    }

  // One coefficient-matching equation per (component pair, monomial).
  for (std::size_t a = 0; a < nc; ++a)
    for (std::size_t b = a; b < nc; ++b) {
      auto& side = contrib[{a, b}];
      for (const auto& [mono, te] : target(a, b).terms())
        side.try_emplace(mono, LinExpr());
      for (const auto& [mono, ge] : side)
        add_constraint_row(ge - target(a, b).coeff(mono), 0.0);
    }

  records_.push_back({block, nc, std::move(labels), target});
  return records_.size() - 1;
}

Vec SosProgram::atom_values(const SdpSolution& sol) const {
  Vec v(static_cast<Eigen::Index>(atoms_.size()));
  for (std::size_t id = 0; id < atoms_.size(); ++id) {
    const Atom& a = atoms_[id];
    v[static_cast<Eigen::Index>(id)] =
        a.is_free ? sol.f[static_cast<Eigen::Index>(a.free_index)]
                  : sol.X[a.block](static_cast<Eigen::Index>(a.i),
                                   static_cast<Eigen::Index>(a.j));
  }
  return v;
}

double SosProgram::value(const LinExpr& e, const SdpSolution& sol) const {
  const Vec v = atom_values(sol);
  double r = e.constant();
  for (const auto& [id, c] : e.terms())
    r += c * v[static_cast<Eigen::Index>(id)];
  return r;
}

Polynomial SosProgram::value(const LinPoly& p, const SdpSolution& sol) const {
  return p.substitute(atom_values(sol));
}

GramCertificate SosProgram::certificate(const SdpSolution& sol) const {
  const Vec v = atom_values(sol);
  GramCertificate cert;
  for (const auto& rec : records_) {
    GramBlock blk;
    blk.ncomp = rec.ncomp;
    blk.basis = rec.basis;
    blk.gram = sol.X.at(rec.block);
    blk.target = rec.target.substitute(v);
    cert.blocks.push_back(std::move(blk));
  }
  return cert;
}

}  // namespace tpv
