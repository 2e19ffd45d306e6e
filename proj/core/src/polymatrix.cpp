#include "tpv/polymatrix.hpp"

#include <stdexcept>

namespace tpv {

PolyMatrix::PolyMatrix(std::size_t rows, std::size_t cols, std::size_t nvars)
    : rows_(rows), cols_(cols), nvars_(nvars),
      entries_(rows * cols, Polynomial(nvars)) {}

Polynomial& PolyMatrix::operator()(std::size_t i, std::size_t j) {
  return entries_.at(i * cols_ + j);
}

const Polynomial& PolyMatrix::operator()(std::size_t i, std::size_t j) const {
  return entries_.at(i * cols_ + j);
}

unsigned PolyMatrix::degree() const {
  unsigned d = 0;
  for (const auto& p : entries_) d = std::max(d, p.degree());
  return d;
}

bool PolyMatrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i + 1; j < cols_; ++j)
      if (!((*this)(i, j) == (*this)(j, i))) return false;
  return true;
}

Mat PolyMatrix::eval(const Vec& x) const {
  Mat m(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (*this)(i, j).eval(x);
  return m;
}

PolyMatrix PolyMatrix::transpose() const {
  PolyMatrix t(cols_, rows_, nvars_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

PolyMatrix PolyMatrix::operator+(const PolyMatrix& other) const {
  if (other.rows_ != rows_ || other.cols_ != cols_)
    throw std::invalid_argument("PolyMatrix::+: shape mismatch");
  PolyMatrix r(*this);
  for (std::size_t i = 0; i < entries_.size(); ++i)
    r.entries_[i] += other.entries_[i];
  return r;
}

PolyMatrix PolyMatrix::operator*(const Polynomial& s) const {
  PolyMatrix r(*this);
  for (auto& e : r.entries_) e = e * s;
  return r;
}

PolyMatrix PolyMatrix::operator*(const PolyMatrix& other) const {
  if (other.rows_ != cols_)
    throw std::invalid_argument("PolyMatrix::*: shape mismatch");
  PolyMatrix r(rows_, other.cols_, nvars_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < other.cols_; ++j)
      for (std::size_t k = 0; k < cols_; ++k)
        r(i, j) += (*this)(i, k) * other(k, j);
  return r;
}

PolyMatrix PolyMatrix::from_constant(const Mat& m, std::size_t nvars) {
  PolyMatrix r(static_cast<std::size_t>(m.rows()),
               static_cast<std::size_t>(m.cols()), nvars);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0)
        r(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
            Polynomial::constant(nvars, m(i, j));
  return r;
}

PolyMatrix kron_regressor(const std::vector<Polynomial>& z, std::size_t ny) {
  if (ny < 1) throw std::invalid_argument("kron_regressor: ny < 1");
  if (z.empty()) throw std::invalid_argument("kron_regressor: empty z");
  const std::size_t nz = z.size(), nvars = z.front().nvars();
  PolyMatrix k(ny, ny * nz, nvars);
  for (std::size_t i = 0; i < ny; ++i)
    for (std::size_t j = 0; j < nz; ++j) k(i, i * nz + j) = z[j];
  return k;
}

}  // namespace tpv
