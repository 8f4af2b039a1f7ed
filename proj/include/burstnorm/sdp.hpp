#pragma once

// Small dense linear-matrix-inequality feasibility by a log-barrier
// path-following method.
//
// Given affine symmetric blocks F_b(y) = F_b0 + sum_k y_k F_bk, the solver
// works on
//
//   maximize t  subject to  F_b(y) - t I >= 0   (margin blocks)
//                           F_b(y)       >= 0   (plain blocks)
//
// and stops as soon as either a point with every margin block certified
// positive definite at `target` is found, or the barrier duality bound
// shows t* < target.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "burstnorm/errors.hpp"
#include "burstnorm/numerics.hpp"

namespace burstnorm::sdp {

struct AffineBlock {
  Matrix constant;
  std::vector<Matrix> coefficients;  // one per decision variable; empty() = zero
  bool margin = true;

  Eigen::Index dim() const { return constant.rows(); }

  Matrix evaluate(const Vector& y) const {
    Matrix out = constant;
    for (std::size_t k = 0; k < coefficients.size(); ++k) {
      if (coefficients[k].size() != 0) out += y(static_cast<Eigen::Index>(k)) * coefficients[k];
    }
    return out;
  }
};

struct Options {
  double initial_barrier_weight = 1.0;
  double barrier_growth = 10.0;
  double max_barrier_weight = 1e14;
  int max_newton_per_stage = 80;
  double centering_tolerance = 1e-9;  // on half the squared Newton decrement
};

enum class Status { kFeasible, kInfeasible };

struct Result {
  Status status = Status::kInfeasible;
  Vector y;
  double t = 0.0;             // best margin reached
  double upper_bound = 0.0;   // duality bound on the optimal margin
  int newton_steps = 0;
};

namespace internal {

struct Evaluation {
  bool interior = false;
  double objective = 0.0;
  Vector gradient;
  Matrix hessian;
};

// x = (y, t). Objective: -weight * t - sum_b log det S_b(x).
inline Evaluation evaluate(const std::vector<AffineBlock>& blocks,
                           const std::vector<std::vector<std::size_t>>& active,
                           const Vector& x, double weight, bool derivatives) {
  const Eigen::Index d = x.size() - 1;
  const double t = x(d);
  Evaluation ev;
  ev.objective = -weight * t;
  if (derivatives) {
    ev.gradient = Vector::Zero(d + 1);
    ev.gradient(d) = -weight;
    ev.hessian = Matrix::Zero(d + 1, d + 1);
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const AffineBlock& block = blocks[b];
    Matrix s = block.evaluate(x.head(d));
    if (block.margin) s.diagonal().array() -= t;
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) return ev;
    const Matrix& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      if (!(l(i, i) > 0.0)) return ev;
      ev.objective -= 2.0 * std::log(l(i, i));
    }
    if (!derivatives) continue;

    const Matrix s_inv = llt.solve(Matrix::Identity(s.rows(), s.cols()));
    const auto& act = active[b];
    std::vector<Matrix> w;
    w.reserve(act.size() + 1);
    for (const std::size_t k : act) w.push_back(s_inv * block.coefficients[k]);
    if (block.margin) w.push_back(-s_inv);

    std::vector<Eigen::Index> index;
    index.reserve(w.size());
    for (const std::size_t k : act) index.push_back(static_cast<Eigen::Index>(k));
    if (block.margin) index.push_back(d);

    for (std::size_t a = 0; a < w.size(); ++a) {
      ev.gradient(index[a]) -= w[a].trace();
      for (std::size_t c = a; c < w.size(); ++c) {
        // tr(W_a W_c) without forming the product.
        const double h = w[a].cwiseProduct(w[c].transpose()).sum();
        ev.hessian(index[a], index[c]) += h;
        if (c != a) ev.hessian(index[c], index[a]) += h;
      }
    }
  }
  ev.interior = std::isfinite(ev.objective);
  return ev;
}

inline bool certified(const std::vector<AffineBlock>& blocks, const Vector& y,
                      double target) {
  for (const auto& block : blocks) {
    Matrix s = block.evaluate(y);
    if (block.margin) s.diagonal().array() -= target;
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

}  // namespace internal

/// Decides whether max t >= target. `y0` must satisfy every plain block
/// strictly; margin blocks may be violated at y0.
inline Result maximize_margin(const std::vector<AffineBlock>& blocks, const Vector& y0,
                              double target, const Options& options = {}) {
  require(!blocks.empty(), ErrorKind::kShape, "no constraint blocks");
  const Eigen::Index d = y0.size();
  std::vector<std::vector<std::size_t>> active(blocks.size());
  double total_dim = 0.0;
  bool any_margin = false;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& block = blocks[b];
    require(block.coefficients.size() == static_cast<std::size_t>(d), ErrorKind::kShape,
            "block coefficient count does not match the variable count");
    for (std::size_t k = 0; k < block.coefficients.size(); ++k) {
      if (block.coefficients[k].size() != 0) active[b].push_back(k);
    }
    total_dim += static_cast<double>(block.dim());
    any_margin = any_margin || block.margin;
  }
  require(any_margin, ErrorKind::kShape, "at least one margin block is required");

  Result result;
  result.upper_bound = std::numeric_limits<double>::infinity();

  // Start strictly inside: t below the smallest margin-block eigenvalue.
  double t0 = std::numeric_limits<double>::infinity();
  for (const auto& block : blocks) {
    const Matrix s = block.evaluate(y0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    const double lambda_min = eig.eigenvalues().minCoeff();
    if (block.margin) {
      t0 = std::min(t0, lambda_min);
    } else if (!(lambda_min > 0.0)) {
      fail(ErrorKind::kSolver, "starting point violates a plain constraint block");
    }
  }
  Vector x(d + 1);
  x.head(d) = y0;
  x(d) = t0 - 1.0 - std::abs(t0);

  auto finish = [&](Status status) {
    result.status = status;
    result.y = x.head(d);
    result.t = x(d);
    return result;
  };

  if (internal::certified(blocks, y0, target)) {
    x(d) = target;
    return finish(Status::kFeasible);
  }

  for (double weight = options.initial_barrier_weight;
       weight <= options.max_barrier_weight; weight *= options.barrier_growth) {
    bool centered = false;
    bool stalled = false;
    for (int step = 0; step < options.max_newton_per_stage; ++step) {
      const auto ev = internal::evaluate(blocks, active, x, weight, true);
      if (!ev.interior) fail(ErrorKind::kSolver, "iterate left the interior");

      Eigen::LDLT<Matrix> ldlt(ev.hessian);
      Vector dx = -ldlt.solve(ev.gradient);
      if (ldlt.info() != Eigen::Success || !dx.allFinite()) {
        // Hessian is numerically singular: regularize lightly.
        const double shift = 1e-12 * std::max(1.0, ev.hessian.diagonal().maxCoeff());
        Matrix h = ev.hessian;
        h.diagonal().array() += shift;
        dx = -h.ldlt().solve(ev.gradient);
        if (!dx.allFinite()) fail(ErrorKind::kSolver, "Newton system is singular");
      }
      const double slope = ev.gradient.dot(dx);
      const double decrement = -slope;
      if (decrement / 2.0 <= options.centering_tolerance) {
        centered = true;
        break;
      }

      double alpha = 1.0;
      bool accepted = false;
      while (alpha > 1e-14) {
        const Vector trial = x + alpha * dx;
        const auto trial_ev = internal::evaluate(blocks, active, trial, weight, false);
        if (trial_ev.interior && trial_ev.objective <= ev.objective + 0.25 * alpha * slope) {
          x = trial;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      ++result.newton_steps;
      if (!accepted) {
        stalled = true;
        break;
      }
      if (x(d) >= target && internal::certified(blocks, x.head(d), target)) {
        return finish(Status::kFeasible);
      }
    }

    const double gap = total_dim / weight;
    result.upper_bound = x(d) + gap;
    if (centered && x(d) + 2.0 * gap < target) return finish(Status::kInfeasible);
    if (stalled) {
      // Rounding limits further progress. Claim infeasibility only when the
      // remaining gap is small enough that a point with twice the target
      // margin would already have been found.
      if (x(d) < target && gap < 0.5 * target) return finish(Status::kInfeasible);
      fail(ErrorKind::kSolver, "line search stalled at barrier weight " +
                                   format_g6(weight));
    }
  }
  // Barrier weight cap: the optimal margin sits within rounding of target.
  return finish(Status::kInfeasible);
}

}  // namespace burstnorm::sdp
