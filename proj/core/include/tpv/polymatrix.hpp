#pragma once

#include <vector>

#include "tpv/polynomial.hpp"

namespace tpv {

/// Dense matrix of polynomials sharing one variable space.
class PolyMatrix {
 public:
  PolyMatrix() : rows_(0), cols_(0), nvars_(0) {}
  PolyMatrix(std::size_t rows, std::size_t cols, std::size_t nvars);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nvars() const { return nvars_; }

  Polynomial& operator()(std::size_t i, std::size_t j);
  const Polynomial& operator()(std::size_t i, std::size_t j) const;

  unsigned degree() const;
  bool is_symmetric() const;
  Mat eval(const Vec& x) const;
  PolyMatrix transpose() const;
  PolyMatrix operator+(const PolyMatrix& other) const;
  PolyMatrix operator*(const Polynomial& s) const;
  PolyMatrix operator*(const PolyMatrix& other) const;

  static PolyMatrix from_constant(const Mat& m, std::size_t nvars);

 private:
  std::size_t rows_, cols_, nvars_;
  std::vector<Polynomial> entries_;
};

/// K(x) = I_ny (kron) z(x)^T, so that A z(x) = K(x) vec(A^T).
PolyMatrix kron_regressor(const std::vector<Polynomial>& z, std::size_t ny);

}  // namespace tpv
