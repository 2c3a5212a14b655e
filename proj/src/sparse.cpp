#include "cdr/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cdr {

bool is_valid_csr(const SparseMatrix& a) {
  if (!a.isCompressed()) return false;
  const int* outer = a.outerIndexPtr();
  const int* inner = a.innerIndexPtr();
  const double* values = a.valuePtr();
  for (int r = 0; r < a.rows(); ++r) {
    if (outer[r + 1] < outer[r]) return false;
    for (int k = outer[r]; k < outer[r + 1]; ++k) {
      if (inner[k] < 0 || inner[k] >= a.cols()) return false;
      if (k > outer[r] && inner[k] <= inner[k - 1]) return false;
      if (!std::isfinite(values[k])) return false;
    }
  }
  return true;
}

namespace {

void require_square(const SparseMatrix& a, const Eigen::VectorXd& rhs, const char* who) {
  if (a.rows() != a.cols()) throw std::invalid_argument(std::string(who) + ": matrix not square");
  if (rhs.size() != a.rows()) throw std::invalid_argument(std::string(who) + ": rhs size mismatch");
}

// LAPACK-style band storage with room for the fill created by row pivoting:
// entry (i, j) lives at (i - j + kl + ku, j).
class BandLu {
 public:
  BandLu(const SparseMatrix& a) : n_(static_cast<int>(a.rows())) {
    for (int r = 0; r < n_; ++r) {
      for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
        kl_ = std::max(kl_, r - static_cast<int>(it.col()));
        ku_ = std::max(ku_, static_cast<int>(it.col()) - r);
      }
    }
    band_.setZero(2 * kl_ + ku_ + 1, n_);
    for (int r = 0; r < n_; ++r) {
      for (SparseMatrix::InnerIterator it(a, r); it; ++it) at(r, static_cast<int>(it.col())) = it.value();
    }
  }

  Eigen::VectorXd solve(Eigen::VectorXd b) {
    const int upper = kl_ + ku_;
    for (int k = 0; k < n_; ++k) {
      const int last_row = std::min(n_ - 1, k + kl_);
      const int last_col = std::min(n_ - 1, k + upper);
      int p = k;
      for (int i = k + 1; i <= last_row; ++i) {
        if (std::abs(at(i, k)) > std::abs(at(p, k))) p = i;
      }
      const double pivot = at(p, k);
      if (!(std::abs(pivot) >= 1e-14)) {
        throw SolverError("lu_solve: singular pivot at row " + std::to_string(k), std::abs(pivot));
      }
      if (p != k) {
        for (int j = k; j <= last_col; ++j) std::swap(at(k, j), at(p, j));
        std::swap(b[k], b[p]);
      }
      for (int i = k + 1; i <= last_row; ++i) {
        const double l = at(i, k) / at(k, k);
        if (l == 0.0) continue;
        at(i, k) = 0.0;
        for (int j = k + 1; j <= last_col; ++j) at(i, j) -= l * at(k, j);
        b[i] -= l * b[k];
      }
    }
    Eigen::VectorXd x(n_);
    for (int i = n_ - 1; i >= 0; --i) {
      double s = b[i];
      const int last_col = std::min(n_ - 1, i + upper);
      for (int j = i + 1; j <= last_col; ++j) s -= at(i, j) * x[j];
      x[i] = s / at(i, i);
    }
    return x;
  }

 private:
  double& at(int i, int j) { return band_(i - j + kl_ + ku_, j); }

  int n_;
  int kl_ = 0;
  int ku_ = 0;
  Eigen::MatrixXd band_;
};

}  // namespace

Eigen::VectorXd lu_solve(const SparseMatrix& a, const Eigen::VectorXd& rhs) {
  require_square(a, rhs, "lu_solve");
  if (a.rows() == 0) return Eigen::VectorXd();
  BandLu lu(a);
  return lu.solve(rhs);
}

Ilu0::Ilu0(const SparseMatrix& a) : lu_(a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("Ilu0: matrix not square");
  lu_.makeCompressed();
  const int n = static_cast<int>(lu_.rows());
  const int* outer = lu_.outerIndexPtr();
  const int* inner = lu_.innerIndexPtr();
  double* val = lu_.valuePtr();
  diag_.setConstant(n, -1);
  for (int i = 0; i < n; ++i) {
    for (int k = outer[i]; k < outer[i + 1]; ++k) {
      if (inner[k] == i) diag_[i] = k;
    }
    if (diag_[i] < 0) throw SolverError("ILU(0): missing diagonal in row " + std::to_string(i), 0.0);
  }
  std::vector<int> pos(n, -1);
  for (int i = 0; i < n; ++i) {
    for (int k = outer[i]; k < outer[i + 1]; ++k) pos[inner[k]] = k;
    for (int kk = outer[i]; kk < outer[i + 1] && inner[kk] < i; ++kk) {
      const int k = inner[kk];
      const double ukk = val[diag_[k]];
      if (ukk == 0.0) throw SolverError("ILU(0): zero pivot in row " + std::to_string(k), 0.0);
      val[kk] /= ukk;
      const double lik = val[kk];
      for (int jj = diag_[k] + 1; jj < outer[k + 1]; ++jj) {
        const int p = pos[inner[jj]];
        if (p >= 0) val[p] -= lik * val[jj];
      }
    }
    for (int k = outer[i]; k < outer[i + 1]; ++k) pos[inner[k]] = -1;
    if (val[diag_[i]] == 0.0) throw SolverError("ILU(0): zero pivot in row " + std::to_string(i), 0.0);
  }
}

Eigen::VectorXd Ilu0::apply(const Eigen::VectorXd& r) const {
  const int n = static_cast<int>(lu_.rows());
  const int* outer = lu_.outerIndexPtr();
  const int* inner = lu_.innerIndexPtr();
  const double* val = lu_.valuePtr();
  Eigen::VectorXd y = r;
  for (int i = 0; i < n; ++i) {
    double s = y[i];
    for (int k = outer[i]; k < diag_[i]; ++k) s -= val[k] * y[inner[k]];
    y[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = diag_[i] + 1; k < outer[i + 1]; ++k) s -= val[k] * y[inner[k]];
    y[i] = s / val[diag_[i]];
  }
  return y;
}

GmresResult gmres_ilu(const SparseMatrix& a, const Eigen::VectorXd& rhs, double tol, int max_iter) {
  require_square(a, rhs, "gmres_ilu");
  if (!(tol > 0.0)) throw std::invalid_argument("gmres_ilu: tol must be positive");
  const int n = static_cast<int>(a.rows());
  GmresResult result;
  result.x = Eigen::VectorXd::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return result;

  const Ilu0 precond(a);
  const int m = kGmresRestart;
  Eigen::MatrixXd v(n, m + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
  Eigen::VectorXd cs(m), sn(m), g(m + 1);

  double rel = 1.0;
  while (result.iterations < max_iter) {
    Eigen::VectorXd r = rhs - a * result.x;
    double beta = r.norm();
    rel = beta / bnorm;
    if (rel <= tol) break;
    v.col(0) = r / beta;
    g.setZero();
    g[0] = beta;
    h.setZero();
    int j = 0;
    for (; j < m && result.iterations < max_iter; ++j) {
      ++result.iterations;
      Eigen::VectorXd w = a * precond.apply(v.col(j));
      for (int i = 0; i <= j; ++i) {
        h(i, j) = w.dot(v.col(i));
        w -= h(i, j) * v.col(i);
      }
      h(j + 1, j) = w.norm();
      if (h(j + 1, j) > 0.0) v.col(j + 1) = w / h(j + 1, j);
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
        h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
        h(i, j) = t;
      }
      const double denom = std::hypot(h(j, j), h(j + 1, j));
      cs[j] = h(j, j) / denom;
      sn[j] = h(j + 1, j) / denom;
      h(j, j) = denom;
      h(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      rel = std::abs(g[j + 1]) / bnorm;
      if (rel <= tol || denom == 0.0) {
        ++j;
        break;
      }
    }
    const Eigen::VectorXd y =
        h.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    result.x += precond.apply(v.leftCols(j) * y);
  }
  rel = (rhs - a * result.x).norm() / bnorm;
  result.relative_residual = rel;
  if (!(rel <= tol)) {
    throw SolverError("gmres_ilu: no convergence after " + std::to_string(result.iterations) +
                          " iterations (relative residual " + std::to_string(rel) + ")",
                      rel);
  }
  return result;
}

Eigen::VectorXd solve_linear(const SparseMatrix& a, const Eigen::VectorXd& rhs) {
  if (a.rows() <= kDirectSolverLimit) return lu_solve(a, rhs);
  return gmres_ilu(a, rhs, 1e-10, 5000).x;
}

}  // namespace cdr
