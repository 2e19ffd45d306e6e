#pragma once

#include <string>
#include <vector>

#include "tpv/polynomial.hpp"

namespace tpv {

/// Semidefinite program in primal standard form:
///   minimize    sum_b <C_b, X_b> + cf' f
///   subject to  sum_b <A_{k,b}, X_b> + F_k f = b_k   (k = 1..m)
///               X_b PSD, f free.
/// Symmetric matrix data is stored as upper-triangle triplets; an entry
/// (i, j, c) with i < j stands for c at both (i, j) and (j, i), so its
/// inner-product contribution is 2*c*X_ij.
class SdpProblem {
 public:
  struct Entry {
    std::size_t block, i, j;
    double coeff;
  };

  std::size_t add_block(std::size_t size);
  std::size_t add_free();
  /// Returns the new constraint index.
  std::size_t add_constraint(double rhs);

  void add_entry(std::size_t row, std::size_t block, std::size_t i,
                 std::size_t j, double coeff);
  void add_free_entry(std::size_t row, std::size_t var, double coeff);
  void add_objective_entry(std::size_t block, std::size_t i, std::size_t j,
                           double coeff);
  void add_free_objective(std::size_t var, double coeff);

  std::size_t n_blocks() const { return block_sizes_.size(); }
  std::size_t block_size(std::size_t b) const { return block_sizes_.at(b); }
  const std::vector<std::size_t>& block_sizes() const { return block_sizes_; }
  std::size_t n_free() const { return n_free_; }
  std::size_t n_constraints() const { return rhs_.size(); }
  const std::vector<Entry>& row(std::size_t k) const { return rows_.at(k); }
  const std::vector<std::pair<std::size_t, double>>& free_row(
      std::size_t k) const {
    return free_rows_.at(k);
  }
  double rhs(std::size_t k) const { return rhs_.at(k); }
  const std::vector<Entry>& objective() const { return obj_; }
  const std::vector<std::pair<std::size_t, double>>& free_objective() const {
    return free_obj_;
  }

  /// <A_k, X> over all blocks plus F_k f.
  double row_value(std::size_t k, const std::vector<Mat>& X,
                   const Vec& f) const;
  double objective_value(const std::vector<Mat>& X, const Vec& f) const;

 private:
  std::vector<std::size_t> block_sizes_;
  std::size_t n_free_ = 0;
  std::vector<std::vector<Entry>> rows_;
  std::vector<std::vector<std::pair<std::size_t, double>>> free_rows_;
  std::vector<double> rhs_;
  std::vector<Entry> obj_;
  std::vector<std::pair<std::size_t, double>> free_obj_;
};

enum class SdpStatus { Optimal, Infeasible, MaxIterations, NumericalFailure };

std::string to_string(SdpStatus s);

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  std::vector<Mat> X;
  Vec f;
  Vec y;  // equality multipliers
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;          // relative duality gap
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::size_t iterations = 0;
};

struct SdpOptions {
  double tol = 1e-8;
  std::size_t max_iter = 120;
  bool verbose = false;
  /// Feasibility queries reject solutions whose entries exceed this bound;
  /// weakly infeasible systems can drive the interpolation variable to zero
  /// only along diverging iterates, and problems here are unit-ball scaled.
  double feas_norm_cap = 1e6;
};

/// Narrow backend contract: PSD blocks, linear equalities, optional linear
/// objective. Any conic interior-point implementation can plug in.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual bool supports_free_variables() const { return true; }
  virtual bool supports_objective() const { return true; }
  virtual SdpSolution solve(const SdpProblem& problem) const = 0;
};

/// Reference dense primal-dual interior-point method (Nesterov-Todd scaling,
/// infeasible start, adaptive centering).
class InteriorPointBackend : public SolverBackend {
 public:
  explicit InteriorPointBackend(SdpOptions opts = {}) : opts_(opts) {}
  SdpSolution solve(const SdpProblem& problem) const override;

 private:
  SdpOptions opts_;
};

SdpSolution solve_sdp(const SdpProblem& problem, const SdpOptions& opts = {});

struct FeasibilityResult {
  bool feasible = false;
  /// Optimal value of the auxiliary interpolation variable; 0 when the
  /// original constraints admit a PSD solution.
  double t = 0.0;
  SdpSolution solution;  // variables of the original problem
};

/// Decides feasibility of the constraints of `problem` (its objective is
/// ignored) by minimizing a single nonnegative interpolation variable t that
/// shifts an always-feasible starting point onto the constraint set.
FeasibilityResult solve_feasibility(const SdpProblem& problem,
                                    const SdpOptions& opts = {});

/// Sparse text export: header `nblocks nvars`, one 1x1 pseudo-block per free
/// variable appended after the PSD blocks, then `block i j var coeff` lines
/// where var 0 carries constants. Documented in detail in the docstring of
/// the implementation.
std::string export_sdp(const SdpProblem& problem);

}  // namespace tpv
