#pragma once

// H-infinity norm certification for Markov jump linear systems.
//
// For a fixed gamma the model satisfies ||G||_inf^2 < gamma when there are
// symmetric P_i > 0 such that, for every mode i, with P_pi = sum_j p_ij P_j,
//
//   [ P_i       *         *     *  ]
//   [ 0         gamma I   *     *  ]  > 0.
//   [ P_pi A_i  P_pi J_i  P_pi  *  ]
//   [ C_i       E_i       0     I  ]
//
// Strict inequalities are realized with a margin: every block and every
// P_i must be >= margin * I. The bound is valid under mean-square stability
// and weak controllability; only the former is checked.

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "burstnorm/errors.hpp"
#include "burstnorm/mjls.hpp"
#include "burstnorm/numerics.hpp"
#include "burstnorm/sdp.hpp"

namespace burstnorm {

inline constexpr const char* kSolverId = "burstnorm-logbarrier/1";

struct LmiCertificate {
  std::vector<Matrix> P;  // one per mode
  double gamma = 0.0;
  double margin = 0.0;
  int newton_steps = 0;
  std::vector<std::string> warnings;
};

struct HinfResult {
  double gamma_star = 0.0;  // certified (feasible) upper end of the bracket
  double gamma_lower = 0.0; // last infeasible gamma, 0 if none
  double norm = 0.0;        // sqrt(gamma_star)
  LmiCertificate certificate;
  int iterations = 0;       // feasibility solves
  double tolerance = 0.0;
};

inline void require_certificate_shape(const MjlsModel& model, const std::vector<Matrix>& P) {
  require(P.size() == model.n_modes(), ErrorKind::kShape,
          "expected one P matrix per mode");
  for (const auto& p : P) {
    require(p.rows() == model.n_states() && p.cols() == model.n_states(),
            ErrorKind::kShape, "P matrix has wrong dimension");
    require_symmetric(p, "P");
  }
}

/// P_pi = sum_j p_ij P_j.
inline Matrix p_expected(const MjlsModel& model, const std::vector<Matrix>& P,
                         std::size_t i) {
  require_certificate_shape(model, P);
  require(i < model.n_modes(), ErrorKind::kDomain, "mode index out of range");
  Matrix out = Matrix::Zero(model.n_states(), model.n_states());
  for (std::size_t j = 0; j < model.n_modes(); ++j) {
    const double pij = model.chain()(i, j);
    if (pij != 0.0) out += pij * P[j];
  }
  return 0.5 * (out + out.transpose());
}

namespace internal {

// Block matrix for mode i without input validation; P_pi supplied.
inline Matrix lmi_block(const Mode& mode, const Matrix& p_i, const Matrix& p_pi,
                        double gamma) {
  const auto n = mode.n_states();
  const auto m = mode.n_inputs();
  const auto r = mode.n_outputs();
  Matrix out = Matrix::Zero(2 * n + m + r, 2 * n + m + r);
  out.block(0, 0, n, n) = p_i;
  out.block(n, n, m, m) = gamma * Matrix::Identity(m, m);
  out.block(n + m, 0, n, n) = p_pi * mode.A;
  out.block(n + m, n, n, m) = p_pi * mode.J;
  out.block(n + m, n + m, n, n) = p_pi;
  out.block(2 * n + m, 0, r, n) = mode.C;
  out.block(2 * n + m, n, r, m) = mode.E;
  out.block(2 * n + m, 2 * n + m, r, r) = Matrix::Identity(r, r);
  // Symmetric completion of the upper triangle.
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

}  // namespace internal

/// The (2n+m+r) x (2n+m+r) block matrix of mode i.
inline Matrix assemble_lmi(const MjlsModel& model, std::size_t i,
                           const std::vector<Matrix>& P, double gamma) {
  require(std::isfinite(gamma), ErrorKind::kDomain, "gamma must be finite");
  const Matrix p_pi = p_expected(model, P, i);
  return internal::lmi_block(model.mode(i), P[i], p_pi, gamma);
}

/// Default strictness margin, 1e-7 * (1 + largest model entry).
inline double default_margin(const MjlsModel& model) {
  return 1e-7 * (1.0 + model.max_abs_entry());
}

/// Independent re-check of a certificate by Cholesky factorizations.
inline bool verify_certificate(const MjlsModel& model, const LmiCertificate& cert,
                               double margin) {
  require_certificate_shape(model, cert.P);
  for (std::size_t i = 0; i < model.n_modes(); ++i) {
    if (!is_positive_definite(cert.P[i], margin)) return false;
    const Matrix block = assemble_lmi(model, i, cert.P, cert.gamma);
    if (!is_positive_definite(block, margin)) return false;
  }
  return true;
}

struct FeasibilityOptions {
  sdp::Options solver;
  double trace_bound_scale = 1e8;  // sum_i tr(P_i) <= scale * N * n
};

/// Searches for a certificate at `gamma`. Returns nullopt when the solver
/// proves no certificate with the requested margin exists.
inline std::optional<LmiCertificate> feasible(const MjlsModel& model, double gamma,
                                              double margin,
                                              const FeasibilityOptions& options = {}) {
  require(std::isfinite(gamma) && gamma > 0.0, ErrorKind::kDomain, "gamma must be positive");
  require(std::isfinite(margin) && margin > 0.0, ErrorKind::kDomain, "margin must be positive");

  const std::size_t N = model.n_modes();
  const Eigen::Index n = model.n_states();
  const std::size_t per_mode = static_cast<std::size_t>(n * (n + 1) / 2);
  const std::size_t vars = N * per_mode;

  // Variable v <-> (mode, row, col) with row <= col.
  struct Slot {
    std::size_t mode;
    Eigen::Index row, col;
  };
  std::vector<Slot> slots;
  slots.reserve(vars);
  for (std::size_t j = 0; j < N; ++j) {
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a; b < n; ++b) slots.push_back({j, a, b});
    }
  }
  auto unit = [n](Eigen::Index a, Eigen::Index b) {
    Matrix e = Matrix::Zero(n, n);
    e(a, b) = 1.0;
    e(b, a) = 1.0;
    return e;
  };

  std::vector<sdp::AffineBlock> blocks;
  const Matrix zero_n = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < N; ++i) {
    const Mode& mode = model.mode(i);
    sdp::AffineBlock block;
    block.constant = internal::lmi_block(mode, zero_n, zero_n, gamma);
    block.coefficients.resize(vars);
    for (std::size_t v = 0; v < vars; ++v) {
      const Slot& s = slots[v];
      const double weight = model.chain()(i, s.mode);
      if (s.mode != i && weight == 0.0) continue;
      const Matrix e = unit(s.row, s.col);
      const Matrix p_i = s.mode == i ? e : zero_n;
      block.coefficients[v] =
          internal::lmi_block(mode, p_i, weight * e, gamma) - block.constant;
    }
    blocks.push_back(std::move(block));
  }

  // Keeps the barrier bounded when some P directions are unconstrained.
  const double trace_bound =
      options.trace_bound_scale * static_cast<double>(N) * static_cast<double>(n);
  sdp::AffineBlock trace;
  trace.margin = false;
  trace.constant = Matrix::Constant(1, 1, trace_bound);
  trace.coefficients.resize(vars);
  for (std::size_t v = 0; v < vars; ++v) {
    if (slots[v].row == slots[v].col) trace.coefficients[v] = Matrix::Constant(1, 1, -1.0);
  }
  blocks.push_back(std::move(trace));

  Vector y0 = Vector::Zero(static_cast<Eigen::Index>(vars));
  for (std::size_t v = 0; v < vars; ++v) {
    if (slots[v].row == slots[v].col) y0(static_cast<Eigen::Index>(v)) = 1.0;
  }

  const auto result = sdp::maximize_margin(blocks, y0, margin, options.solver);
  if (result.status != sdp::Status::kFeasible) return std::nullopt;

  LmiCertificate cert;
  cert.gamma = gamma;
  cert.margin = margin;
  cert.newton_steps = result.newton_steps;
  cert.P.assign(N, Matrix::Zero(n, n));
  for (std::size_t v = 0; v < vars; ++v) {
    const Slot& s = slots[v];
    const double value = result.y(static_cast<Eigen::Index>(v));
    cert.P[s.mode](s.row, s.col) = value;
    cert.P[s.mode](s.col, s.row) = value;
  }
  if (!verify_certificate(model, cert, margin)) {
    fail(ErrorKind::kSolver, "returned certificate failed re-verification");
  }
  for (std::size_t i = 0; i < N; ++i) {
    const Matrix block = assemble_lmi(model, i, cert.P, gamma);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(block, Eigen::EigenvaluesOnly);
    const double cond = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
    if (cond > 1e10) {
      cert.warnings.push_back("mode " + std::to_string(i) +
                              " block condition number " + format_g6(cond));
    }
  }
  return cert;
}

inline constexpr double kDefaultRelTol = 1e-5;

struct HinfOptions {
  double rel_tol = kDefaultRelTol;
  std::optional<double> margin;  // default_margin(model) when unset
  FeasibilityOptions feasibility;
};

/// Smallest certified gamma by doubling then bisection; norm = sqrt(gamma).
inline HinfResult hinf_norm(const MjlsModel& model, const HinfOptions& options = {}) {
  require(options.rel_tol >= 1e-8 && options.rel_tol <= 1e-2, ErrorKind::kDomain,
          "relative tolerance must lie in [1e-8, 1e-2]");
  const double radius = mss_radius(model);
  if (!(radius < 1.0)) {
    fail(ErrorKind::kStability,
         "model is not mean-square stable (second-moment spectral radius " +
             format_g6(radius) + ")");
  }
  const double margin = options.margin.value_or(default_margin(model));

  HinfResult out;
  out.tolerance = options.rel_tol;
  double lo = 0.0;
  double hi = 1.0;
  std::optional<LmiCertificate> best;
  const double cap = std::ldexp(1.0, 64);
  while (true) {
    ++out.iterations;
    best = feasible(model, hi, margin, options.feasibility);
    if (best) break;
    lo = hi;
    hi *= 2.0;
    if (hi > cap) {
      fail(ErrorKind::kUnbounded, "no certificate found for gamma up to 2^64");
    }
  }
  while ((hi - lo) / hi > options.rel_tol) {
    const double mid = 0.5 * (lo + hi);
    ++out.iterations;
    auto cert = feasible(model, mid, margin, options.feasibility);
    if (cert) {
      hi = mid;
      best = std::move(cert);
    } else {
      lo = mid;
    }
  }
  out.gamma_star = hi;
  out.gamma_lower = lo;
  out.norm = std::sqrt(hi);
  out.certificate = std::move(*best);
  return out;
}

inline HinfResult hinf_norm(const MjlsModel& model, double rel_tol) {
  HinfOptions options;
  options.rel_tol = rel_tol;
  return hinf_norm(model, options);
}

/// Largest singular value of C (e^{jw} I - A)^{-1} J + E over a uniform
/// grid on [0, pi]. A lower bound on the deterministic H-infinity norm.
inline double deterministic_oracle(const Mode& mode, std::size_t grid_points) {
  validate_mode(mode);
  require(grid_points >= 2, ErrorKind::kDomain, "need at least two grid points");
  const double radius = spectral_radius(mode.A);
  if (!(radius < 1.0)) {
    fail(ErrorKind::kStability, "A is not Schur stable (spectral radius " +
                                    format_g6(radius) + ")");
  }
  using CMatrix = Eigen::MatrixXcd;
  const CMatrix a = mode.A.cast<std::complex<double>>();
  const CMatrix j = mode.J.cast<std::complex<double>>();
  const CMatrix c = mode.C.cast<std::complex<double>>();
  const CMatrix e = mode.E.cast<std::complex<double>>();
  const double pi = std::acos(-1.0);
  double best = 0.0;
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double omega = pi * static_cast<double>(k) / static_cast<double>(grid_points - 1);
    CMatrix resolvent = -a;
    resolvent.diagonal().array() += std::polar(1.0, omega);
    const CMatrix g = c * resolvent.partialPivLu().solve(j) + e;
    Eigen::JacobiSVD<CMatrix> svd(g);
    best = std::max(best, svd.singularValues()(0));
  }
  return best;
}

}  // namespace burstnorm
