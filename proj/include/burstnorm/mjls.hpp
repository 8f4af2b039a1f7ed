#pragma once

// Markov jump linear systems
//
//   x(k+1) = A_i x(k) + J_i w(k)
//   z(k)   = C_i x(k) + E_i w(k),     i = theta(k)
//
// with theta driven by a TransitionMatrix. Mode k of a model is paired with
// chain state k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "burstnorm/errors.hpp"
#include "burstnorm/markov.hpp"
#include "burstnorm/numerics.hpp"

namespace burstnorm {

struct Mode {
  Matrix A;  // n x n
  Matrix J;  // n x m
  Matrix C;  // r x n
  Matrix E;  // r x m

  Eigen::Index n_states() const { return A.rows(); }
  Eigen::Index n_inputs() const { return J.cols(); }
  Eigen::Index n_outputs() const { return C.rows(); }
};

inline void validate_mode(const Mode& mode) {
  require_square(mode.A, "A");
  require_finite(mode.J, "J");
  require_finite(mode.C, "C");
  require_finite(mode.E, "E");
  const auto n = mode.A.rows();
  require(mode.J.rows() == n, ErrorKind::kShape, "J must have as many rows as A");
  require(mode.C.cols() == n, ErrorKind::kShape, "C must have as many columns as A");
  require(mode.E.rows() == mode.C.rows() && mode.E.cols() == mode.J.cols(),
          ErrorKind::kShape, "E must be (rows of C) x (columns of J)");
}

inline void validate_modes(const std::vector<Mode>& modes) {
  require(!modes.empty(), ErrorKind::kShape, "at least one mode is required");
  for (const auto& mode : modes) validate_mode(mode);
  const Mode& first = modes.front();
  for (const auto& mode : modes) {
    require(mode.n_states() == first.n_states() &&
                mode.n_inputs() == first.n_inputs() &&
                mode.n_outputs() == first.n_outputs(),
            ErrorKind::kShape, "modes have inconsistent dimensions");
  }
}

inline constexpr const char* kLostLabel = "lost";
inline constexpr const char* kReceivedLabel = "received";

/// Discrete modes not yet paired with a chain.
struct ModeSet {
  std::vector<Mode> modes;
  std::vector<std::string> labels;  // empty or one per mode
};

class MjlsModel {
 public:
  MjlsModel(std::vector<Mode> modes, TransitionMatrix chain,
            std::vector<std::string> labels = {})
      : modes_(std::move(modes)), chain_(std::move(chain)),
        labels_(std::move(labels)) {
    validate_modes(modes_);
    require(chain_.n_states() == modes_.size(), ErrorKind::kShape,
            "transition matrix has " + std::to_string(chain_.n_states()) +
                " states for " + std::to_string(modes_.size()) + " modes");
    require(labels_.empty() || labels_.size() == modes_.size(), ErrorKind::kShape,
            "one label per mode is required");
  }

  std::size_t n_modes() const { return modes_.size(); }
  Eigen::Index n_states() const { return modes_.front().n_states(); }
  Eigen::Index n_inputs() const { return modes_.front().n_inputs(); }
  Eigen::Index n_outputs() const { return modes_.front().n_outputs(); }
  const std::vector<Mode>& modes() const { return modes_; }
  const Mode& mode(std::size_t i) const { return modes_.at(i); }
  const TransitionMatrix& chain() const { return chain_; }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Largest absolute entry over all mode matrices.
  double max_abs_entry() const {
    double out = 0.0;
    for (const auto& m : modes_) {
      out = std::max({out, burstnorm::max_abs_entry(m.A), burstnorm::max_abs_entry(m.J),
                      burstnorm::max_abs_entry(m.C), burstnorm::max_abs_entry(m.E)});
    }
    return out;
  }

 private:
  std::vector<Mode> modes_;
  TransitionMatrix chain_;
  std::vector<std::string> labels_;
};

/// Continuous-time plant with one output map per future discrete mode.
struct ContinuousPlant {
  struct Output {
    Matrix C;
    Matrix E;
    std::string label;
  };
  Matrix A;
  Matrix J;
  std::vector<Output> outputs;
};

/// Two-car mass-spring-damper plant. Output 0 is the received-measurement
/// mode, output 1 the lost-measurement mode (all zero).
inline ContinuousPlant build_example() {
  ContinuousPlant plant;
  plant.A.resize(4, 4);
  plant.A << 0, 0, 1, 0,
             0, 0, 0, 1,
             0, 26.29, -15.96, -0.02,
             0, 68.52, -15.25, -0.04;
  plant.J = 0.5 * Matrix::Identity(4, 4);

  Matrix c_received = Matrix::Zero(2, 4);
  c_received(0, 0) = 1.0;
  c_received(1, 1) = 1.0;
  Matrix e_received = Matrix::Zero(2, 4);
  e_received(0, 0) = 0.05;
  e_received(1, 1) = 0.05;
  plant.outputs.push_back({c_received, e_received, kReceivedLabel});
  plant.outputs.push_back({Matrix::Zero(2, 4), Matrix::Zero(2, 4), kLostLabel});
  return plant;
}

inline constexpr double kExampleSamplePeriod = 0.01;

/// Zero-order-hold discretization of (A, J); (C, E) are copied per output.
/// The top-right block of exp([[A, J], [0, 0]] T) is (int_0^T e^{As} ds) J.
inline ModeSet zoh_discretize(const ContinuousPlant& plant, double period) {
  require(std::isfinite(period) && period > 0.0, ErrorKind::kDomain,
          "sample period must be positive");
  require_square(plant.A, "A");
  require_finite(plant.J, "J");
  require(plant.J.rows() == plant.A.rows(), ErrorKind::kShape,
          "J must have as many rows as A");
  require(!plant.outputs.empty(), ErrorKind::kShape, "plant has no outputs");

  const auto n = plant.A.rows();
  const auto m = plant.J.cols();
  Matrix augmented = Matrix::Zero(n + m, n + m);
  augmented.topLeftCorner(n, n) = plant.A;
  augmented.topRightCorner(n, m) = plant.J;
  const Matrix phi = mat_exp(augmented, period);

  ModeSet out;
  for (const auto& output : plant.outputs) {
    out.modes.push_back(
        {phi.topLeftCorner(n, n), phi.topRightCorner(n, m), output.C, output.E});
    out.labels.push_back(output.label);
  }
  validate_modes(out.modes);
  return out;
}

enum class ModeMapping {
  kStateOneLost,      // chain state index 0 (stationary prob = PLR) drives the lost mode
  kStateOneReceived,  // chain state index 0 drives the received mode
};

inline std::string to_string(ModeMapping mapping) {
  return mapping == ModeMapping::kStateOneLost ? "state1_lost" : "state1_received";
}

inline ModeMapping parse_mode_mapping(const std::string& text) {
  if (text == "state1_lost") return ModeMapping::kStateOneLost;
  if (text == "state1_received") return ModeMapping::kStateOneReceived;
  fail(ErrorKind::kDomain, "unknown mode mapping '" + text + "'");
}

/// Pairs modes with chain states. A {received, lost} labelled pair is
/// ordered by `mapping`; any other set keeps its order under kStateOneLost
/// and is reversed under kStateOneReceived.
inline MjlsModel attach_chain(const ModeSet& set, const TransitionMatrix& chain,
                              ModeMapping mapping = ModeMapping::kStateOneLost) {
  require(set.modes.size() == chain.n_states(), ErrorKind::kShape,
          std::to_string(set.modes.size()) + " modes cannot be driven by a " +
              std::to_string(chain.n_states()) + "-state chain");

  std::vector<std::size_t> order(set.modes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const bool labelled_channel =
      set.labels.size() == 2 &&
      ((set.labels[0] == kLostLabel && set.labels[1] == kReceivedLabel) ||
       (set.labels[0] == kReceivedLabel && set.labels[1] == kLostLabel));
  if (labelled_channel) {
    const std::size_t lost = set.labels[0] == kLostLabel ? 0 : 1;
    const std::size_t received = 1 - lost;
    order = mapping == ModeMapping::kStateOneLost
                ? std::vector<std::size_t>{lost, received}
                : std::vector<std::size_t>{received, lost};
  } else if (mapping == ModeMapping::kStateOneReceived) {
    std::reverse(order.begin(), order.end());
  }

  std::vector<Mode> modes;
  std::vector<std::string> labels;
  for (const std::size_t i : order) {
    modes.push_back(set.modes[i]);
    if (!set.labels.empty()) labels.push_back(set.labels[i]);
  }
  return MjlsModel(std::move(modes), chain, std::move(labels));
}

inline constexpr Eigen::Index kMaxSecondMomentDim = 4096;

/// Second-moment operator (P' kron I) * blockdiag(A_i kron A_i). It maps
/// vec(Q_i(k)) to vec(Q_j(k+1)) with Q_j(k+1) = sum_i p_ij A_i Q_i A_i'.
inline Matrix second_moment_operator(const MjlsModel& model) {
  const auto n = model.n_states();
  const auto N = static_cast<Eigen::Index>(model.n_modes());
  const auto n2 = n * n;
  require(N * n2 <= kMaxSecondMomentDim, ErrorKind::kSize,
          "second-moment operator of dimension " + std::to_string(N * n2) +
              " exceeds " + std::to_string(kMaxSecondMomentDim));
  Matrix op = Matrix::Zero(N * n2, N * n2);
  for (Eigen::Index i = 0; i < N; ++i) {
    const Matrix aa = kron(model.mode(static_cast<std::size_t>(i)).A,
                           model.mode(static_cast<std::size_t>(i)).A);
    for (Eigen::Index j = 0; j < N; ++j) {
      const double pij = model.chain()(static_cast<std::size_t>(i),
                                       static_cast<std::size_t>(j));
      if (pij != 0.0) op.block(j * n2, i * n2, n2, n2) = pij * aa;
    }
  }
  return op;
}

/// Mean-square stable iff the result is below one.
inline double mss_radius(const MjlsModel& model) {
  return spectral_radius(second_moment_operator(model));
}

struct Trajectory {
  std::vector<Vector> x;  // horizon + 1 states
  std::vector<Vector> z;  // horizon outputs
  std::vector<Vector> w;  // horizon inputs
  std::vector<std::size_t> theta;
};

inline Trajectory simulate(const MjlsModel& model, const std::vector<Vector>& w,
                           const std::vector<std::size_t>& theta, const Vector& x0) {
  require(w.size() == theta.size(), ErrorKind::kShape,
          "input and mode sequences differ in length");
  require(x0.size() == model.n_states(), ErrorKind::kShape,
          "initial state has wrong dimension");
  require(x0.allFinite(), ErrorKind::kDomain, "initial state is not finite");

  Trajectory out;
  out.w = w;
  out.theta = theta;
  out.x.reserve(w.size() + 1);
  out.z.reserve(w.size());
  out.x.push_back(x0);
  for (std::size_t k = 0; k < w.size(); ++k) {
    require(theta[k] < model.n_modes(), ErrorKind::kDomain,
            "mode index " + std::to_string(theta[k]) + " out of range");
    require(w[k].size() == model.n_inputs(), ErrorKind::kShape,
            "input " + std::to_string(k) + " has wrong dimension");
    const Mode& mode = model.mode(theta[k]);
    const Vector& x = out.x.back();
    out.z.push_back(mode.C * x + mode.E * w[k]);
    out.x.push_back(mode.A * x + mode.J * w[k]);
  }
  return out;
}

inline Trajectory simulate(const MjlsModel& model, const std::vector<Vector>& w,
                           const StatePath& theta, const Vector& x0) {
  return simulate(model, w, theta.states, x0);
}

/// Stream ids for seed derivation; inputs and chain use separate streams so
/// two models driven with the same seed see identical inputs.
inline constexpr std::uint64_t kInputStream = 0;
inline constexpr std::uint64_t kChainStream = 1;

/// Unit-energy white Gaussian input sequence.
inline std::vector<Vector> unit_energy_input(Eigen::Index inputs, std::size_t horizon,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vector> w(horizon, Vector(inputs));
  double energy = 0.0;
  for (auto& wk : w) {
    for (Eigen::Index j = 0; j < inputs; ++j) wk(j) = gauss(rng);
    energy += wk.squaredNorm();
  }
  const double scale = 1.0 / std::sqrt(energy);
  for (auto& wk : w) wk *= scale;
  return w;
}

/// ||z||_2 / ||w||_2 for each trial, with x0 = 0, unit-energy Gaussian w
/// and a stationary-initialized chain path.
inline std::vector<double> empirical_gains(const MjlsModel& model, std::size_t trials,
                                           std::size_t horizon, std::uint64_t seed) {
  require(trials >= 1, ErrorKind::kDomain, "trials must be at least 1");
  require(horizon >= 1, ErrorKind::kDomain, "horizon must be at least 1");
  std::vector<double> gains;
  gains.reserve(trials);
  const Vector x0 = Vector::Zero(model.n_states());
  for (std::size_t t = 0; t < trials; ++t) {
    const auto w = unit_energy_input(model.n_inputs(), horizon,
                                     mix_seed(seed, t, kInputStream));
    const StatePath theta =
        sample_path(model.chain(), horizon, mix_seed(seed, t, kChainStream));
    // Run the recursion in place rather than storing the trajectory.
    Vector x = x0;
    double z_energy = 0.0;
    for (std::size_t k = 0; k < horizon; ++k) {
      const Mode& mode = model.mode(theta.states[k]);
      z_energy += (mode.C * x + mode.E * w[k]).squaredNorm();
      x = mode.A * x + mode.J * w[k];
    }
    gains.push_back(std::sqrt(z_energy));  // ||w|| = 1
  }
  return gains;
}

/// Monte Carlo lower estimate of the H-infinity norm: the largest per-trial gain.
inline double empirical_gain(const MjlsModel& model, std::size_t trials,
                             std::size_t horizon, std::uint64_t seed) {
  const auto gains = empirical_gains(model, trials, horizon, seed);
  return *std::max_element(gains.begin(), gains.end());
}

}  // namespace burstnorm
