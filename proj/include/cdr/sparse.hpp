#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace cdr {

/// Compressed-row sparse matrix.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Checks the CSR invariants: compressed, sorted unique column indices,
/// monotone offsets and finite stored values.
bool is_valid_csr(const SparseMatrix& a);

/// Direct solve by banded LU with partial pivoting. The band is detected from
/// the sparsity pattern, so structured FEM matrices factor in O(n w^2).
/// Throws SolverError when a pivot falls below 1e-14 in magnitude.
Eigen::VectorXd lu_solve(const SparseMatrix& a, const Eigen::VectorXd& rhs);

/// Incomplete LU factorization with zero fill-in, stored in the pattern of A.
class Ilu0 {
 public:
  explicit Ilu0(const SparseMatrix& a);
  /// Solves (L U) x = r.
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;

 private:
  SparseMatrix lu_;
  Eigen::VectorXi diag_;
};

struct GmresResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
};

inline constexpr int kGmresRestart = 30;

/// Right-preconditioned restarted GMRES(30) with ILU(0).
/// Throws SolverError carrying the final relative residual after `max_iter`
/// iterations, or when the ILU(0) factorization meets a zero pivot.
GmresResult gmres_ilu(const SparseMatrix& a, const Eigen::VectorXd& rhs, double tol, int max_iter);

inline constexpr int kDirectSolverLimit = 20000;

/// LU for up to 20000 unknowns, GMRES+ILU(0) with tol 1e-10 beyond that.
Eigen::VectorXd solve_linear(const SparseMatrix& a, const Eigen::VectorXd& rhs);

}  // namespace cdr
