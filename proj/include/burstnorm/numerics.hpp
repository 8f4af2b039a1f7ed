#pragma once

// Dense real matrix kernel shared by every other module. Matrices are
// Eigen::MatrixXd values; every public operation rejects NaN/Inf input and
// reports dimension problems as ErrorKind::kShape.

#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "burstnorm/errors.hpp"

namespace burstnorm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline void require_finite(const Matrix& m, std::string_view what) {
  require(m.rows() >= 1 && m.cols() >= 1, ErrorKind::kShape,
          std::string(what) + " must have at least one row and one column");
  require(m.allFinite(), ErrorKind::kDomain,
          std::string(what) + " contains NaN or Inf");
}

inline void require_square(const Matrix& m, std::string_view what) {
  require_finite(m, what);
  require(m.rows() == m.cols(), ErrorKind::kShape,
          std::string(what) + " must be square, got " +
              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline double max_abs_entry(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Symmetry tolerance: |s(i,j) - s(j,i)| <= 1e-12 * max(1, max |s|).
inline bool is_symmetric(const Matrix& s) {
  if (s.rows() != s.cols()) return false;
  const double tol = 1e-12 * std::max(1.0, max_abs_entry(s));
  return (s - s.transpose()).cwiseAbs().maxCoeff() <= tol;
}

inline void require_symmetric(const Matrix& s, std::string_view what) {
  require_square(s, what);
  require(is_symmetric(s), ErrorKind::kShape,
          std::string(what) + " is not symmetric");
}

inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
  require_finite(a, "left factor");
  require_finite(b, "right factor");
  require(a.cols() == b.rows(), ErrorKind::kShape,
          "product of " + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()) + " and " + std::to_string(b.rows()) +
              "x" + std::to_string(b.cols()));
  return a * b;
}

/// e^{m t} by scaling and squaring with a truncated Taylor series.
inline Matrix mat_exp(const Matrix& m, double t) {
  require_square(m, "exponent matrix");
  require(std::isfinite(t), ErrorKind::kDomain, "time must be finite");
  const Eigen::Index n = m.rows();
  Matrix x = m * t;

  // Scale until the 1-norm is at most 1/2.
  const double norm1 = x.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  x = std::ldexp(1.0, -squarings) * x;

  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k < 64; ++k) {
    term = term * x / static_cast<double>(k);
    result += term;
    const double term_norm = term.cwiseAbs().colwise().sum().maxCoeff();
    const double sum_norm = result.cwiseAbs().colwise().sum().maxCoeff();
    if (term_norm <= 1e-16 * sum_norm) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  require_finite(a, "left Kronecker factor");
  require_finite(b, "right Kronecker factor");
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline constexpr Eigen::Index kMaxSpectralDim = 4096;

/// Largest eigenvalue magnitude. Uses the real Schur form (Hessenberg QR),
/// so complex-conjugate dominant pairs are handled.
inline double spectral_radius(const Matrix& m) {
  require_square(m, "matrix");
  require(m.rows() <= kMaxSpectralDim, ErrorKind::kSize,
          "spectral radius limited to dimension " +
              std::to_string(kMaxSpectralDim));
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    // Fall back to a power-iteration estimate so the caller has something.
    Vector v = Vector::Ones(m.rows()).normalized();
    double estimate = 0.0;
    for (int k = 0; k < 1000; ++k) {
      Vector next = m * v;
      estimate = next.norm();
      if (estimate == 0.0) break;
      v = next / estimate;
    }
    throw ConvergenceError("QR iteration did not converge", estimate);
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// True iff s - margin*I admits a Cholesky factorization.
inline bool is_positive_definite(const Matrix& s, double margin) {
  require(std::isfinite(margin) && margin >= 0.0, ErrorKind::kDomain,
          "margin must be finite and non-negative");
  require_symmetric(s, "matrix");
  const Matrix shifted = s - margin * Matrix::Identity(s.rows(), s.cols());
  Eigen::LLT<Matrix> llt(shifted);
  return llt.info() == Eigen::Success;
}

inline constexpr double kMaxConditionNumber = 1e12;

/// Solves a*x = b with partial-pivot LU; rejects reciprocal condition
/// estimates below 1/kMaxConditionNumber.
inline Matrix solve_linear(const Matrix& a, const Matrix& b) {
  require_square(a, "coefficient matrix");
  require_finite(b, "right-hand side");
  require(a.rows() == b.rows(), ErrorKind::kShape,
          "right-hand side has " + std::to_string(b.rows()) +
              " rows, expected " + std::to_string(a.rows()));
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond * kMaxConditionNumber >= 1.0)) {
    fail(ErrorKind::kSingularity,
         "matrix is singular or ill-conditioned (rcond " +
             std::to_string(rcond) + ")");
  }
  Matrix x = lu.solve(b);
  const double bnorm = b.norm();
  Matrix residual = a * x - b;
  if (residual.norm() > 1e-10 * bnorm) {
    x -= lu.solve(residual);  // one step of iterative refinement
    residual = a * x - b;
    require(residual.norm() <= 1e-10 * bnorm, ErrorKind::kSingularity,
            "residual check failed after refinement");
  }
  return x;
}

/// 17 significant digits: enough to round-trip any double.
inline std::string format_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline std::string format_g6(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

/// Debug dump, one matrix row per line.
inline std::string to_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_g17(m(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace burstnorm
