#pragma once

// Finite Markov chains and the two-state packet-loss channels.
//
// State convention: chain state index 0 is the LOSS state and index 1 the
// RECEIVED state, so the stationary probability of index 0 is the packet
// loss rate. With that convention the Gilbert matrix [[1-p, p], [q, 1-q]]
// has PLR = q / (p + q), and p is the exit probability of the loss state.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "burstnorm/errors.hpp"
#include "burstnorm/numerics.hpp"

namespace burstnorm {

inline constexpr std::size_t kLossState = 0;
inline constexpr std::size_t kReceivedState = 1;

/// Row-stochastic square matrix. Entries lie in [0, 1] and rows sum to one
/// within 1e-12.
class TransitionMatrix {
 public:
  explicit TransitionMatrix(Matrix probabilities)
      : p_(std::move(probabilities)) {
    require_square(p_, "transition matrix");
    for (Eigen::Index i = 0; i < p_.rows(); ++i) {
      for (Eigen::Index j = 0; j < p_.cols(); ++j) {
        require(p_(i, j) >= 0.0 && p_(i, j) <= 1.0, ErrorKind::kDomain,
                "transition probability (" + std::to_string(i) + "," +
                    std::to_string(j) + ") = " + format_g17(p_(i, j)) +
                    " outside [0,1]");
      }
      require(std::abs(p_.row(i).sum() - 1.0) <= 1e-12, ErrorKind::kDomain,
              "row " + std::to_string(i) + " sums to " +
                  format_g17(p_.row(i).sum()));
    }
  }

  static TransitionMatrix identity(std::size_t n) {
    return TransitionMatrix(Matrix::Identity(n, n));
  }

  std::size_t n_states() const { return static_cast<std::size_t>(p_.rows()); }
  const Matrix& matrix() const { return p_; }
  double operator()(std::size_t i, std::size_t j) const {
    return p_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Matrix p_;
};

/// Gilbert channel: p exits the loss state, q exits the received state.
/// (p, q) = (1, 1) is excluded because that chain is periodic.
class GilbertParams {
 public:
  GilbertParams(double p, double q) : p_(p), q_(q) {
    require(std::isfinite(p) && p > 0.0 && p <= 1.0, ErrorKind::kDomain,
            "Gilbert p must lie in (0,1], got " + format_g17(p));
    require(std::isfinite(q) && q > 0.0 && q <= 1.0, ErrorKind::kDomain,
            "Gilbert q must lie in (0,1], got " + format_g17(q));
    require(!(p == 1.0 && q == 1.0), ErrorKind::kDomain,
            "Gilbert (p,q) = (1,1) is periodic");
  }

  double p() const { return p_; }
  double q() const { return q_; }

 private:
  double p_;
  double q_;
};

class BernoulliParams {
 public:
  explicit BernoulliParams(double plr) : plr_(plr) {
    require(std::isfinite(plr) && plr > 0.0 && plr < 1.0, ErrorKind::kDomain,
            "packet loss rate must lie in (0,1), got " + format_g17(plr));
  }

  double plr() const { return plr_; }

 private:
  double plr_;
};

inline TransitionMatrix gilbert_matrix(const GilbertParams& g) {
  Matrix m(2, 2);
  m << 1.0 - g.p(), g.p(),
       g.q(), 1.0 - g.q();
  return TransitionMatrix(std::move(m));
}

/// Memoryless loss: both rows are [plr, 1 - plr].
inline TransitionMatrix bernoulli_matrix(const BernoulliParams& b) {
  Matrix m(2, 2);
  m << b.plr(), 1.0 - b.plr(),
       b.plr(), 1.0 - b.plr();
  return TransitionMatrix(std::move(m));
}

/// Gilbert parameters whose matrix equals the Bernoulli matrix at plr.
inline GilbertParams bernoulli_equivalent(const BernoulliParams& b) {
  return GilbertParams(1.0 - b.plr(), b.plr());
}

/// P^n by binary exponentiation.
inline TransitionMatrix n_step(const TransitionMatrix& chain, std::size_t n) {
  require(n >= 1, ErrorKind::kDomain, "step count must be at least 1");
  const Eigen::Index dim = static_cast<Eigen::Index>(chain.n_states());
  Matrix result = Matrix::Identity(dim, dim);
  Matrix base = chain.matrix();
  while (n > 0) {
    if (n & 1U) result = result * base;
    n >>= 1U;
    if (n > 0) base = base * base;
  }
  // Renormalize rows so accumulated rounding does not break the invariant.
  for (Eigen::Index i = 0; i < dim; ++i) {
    result.row(i) = result.row(i).cwiseMax(0.0).cwiseMin(1.0);
    result.row(i) /= result.row(i).sum();
  }
  return TransitionMatrix(std::move(result));
}

inline constexpr int kMaxSteadyStateSquarings = 1024;

/// Stationary distribution. Two-state chains use the closed form
/// [q/(p+q), p/(p+q)]; larger chains square P until successive iterates
/// agree to 1e-12 and all rows coincide.
inline Vector steady_state(const TransitionMatrix& chain) {
  const Eigen::Index n = static_cast<Eigen::Index>(chain.n_states());
  if (n == 1) return Vector::Ones(1);
  if (n == 2) {
    const double p = chain(0, 1);
    const double q = chain(1, 0);
    if (p + q == 0.0) {
      throw ConvergenceError("reducible chain has no unique stationary distribution", 0.0);
    }
    if (p + q == 2.0) {
      throw ConvergenceError("periodic chain: powers do not converge", 0.0);
    }
    Vector pi(2);
    pi << q / (p + q), p / (p + q);
    return pi;
  }

  Matrix current = chain.matrix();
  double change = 0.0;
  for (int k = 0; k < kMaxSteadyStateSquarings; ++k) {
    Matrix next = current * current;
    change = (next - current).cwiseAbs().maxCoeff();
    current = std::move(next);
    if (change < 1e-12) break;
  }
  const double row_spread =
      (current.rowwise() - current.row(0)).cwiseAbs().maxCoeff();
  if (change >= 1e-12 || row_spread > 1e-9) {
    throw ConvergenceError(
        "chain has no unique limiting distribution (periodic or reducible)",
        row_spread);
  }
  Vector pi = current.colwise().mean().transpose();
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

/// Stationary probability of the loss state, q / (p + q).
inline double plr_of(const GilbertParams& g) { return g.q() / (g.p() + g.q()); }

/// The set of Gilbert pairs sharing a stationary PLR: the line
/// q = p * plr / (1 - plr), sampled in p.
struct IsoPlrRegion {
  double plr = 0.0;
  double step = 0.0;
  std::vector<GilbertParams> pairs;  // p strictly increasing

  double p_max() const { return std::min(1.0, (1.0 - plr) / plr); }
};

inline double iso_plr_q(double plr, double p) { return p * plr / (1.0 - plr); }

inline IsoPlrRegion iso_plr_region(double plr, double p_step) {
  require(std::isfinite(plr) && plr > 0.0 && plr < 1.0, ErrorKind::kDomain,
          "PLR must lie in (0,1), got " + format_g17(plr));
  require(std::isfinite(p_step) && p_step > 0.0 && p_step <= 0.1,
          ErrorKind::kDomain,
          "p step must lie in (0,0.1], got " + format_g17(p_step));

  IsoPlrRegion region;
  region.plr = plr;
  region.step = p_step;
  const double p_max = region.p_max();
  const double q_of_pmax = std::min(1.0, iso_plr_q(plr, p_max));

  auto admissible = [](double p, double q) { return !(p == 1.0 && q == 1.0); };

  if (p_max < p_step) {
    if (admissible(p_max, q_of_pmax)) region.pairs.emplace_back(p_max, q_of_pmax);
  } else {
    const double slack = 1e-12 * p_max;
    for (std::size_t k = 1;; ++k) {
      double p = static_cast<double>(k) * p_step;
      if (p > p_max + slack) break;
      p = std::min(p, p_max);
      const double q = std::min(1.0, iso_plr_q(plr, p));
      if (admissible(p, q)) region.pairs.emplace_back(p, q);
    }
  }

  // Keep the Bernoulli-equivalent chain a member of its own region.
  const double p_ber = 1.0 - plr;
  const auto at = std::lower_bound(
      region.pairs.begin(), region.pairs.end(), p_ber,
      [](const GilbertParams& g, double p) { return g.p() < p; });
  const bool present =
      (at != region.pairs.end() && std::abs(at->p() - p_ber) <= 1e-12) ||
      (at != region.pairs.begin() && std::abs((at - 1)->p() - p_ber) <= 1e-12);
  if (!present) region.pairs.insert(at, GilbertParams(p_ber, plr));
  return region;
}

/// Region as CSV with header `plr,p,q`, 17 significant digits.
inline std::string region_csv(const std::vector<IsoPlrRegion>& regions) {
  std::string out = "plr,p,q\n";
  for (const auto& region : regions) {
    for (const auto& g : region.pairs) {
      out += format_g17(region.plr) + ',' + format_g17(g.p()) + ',' +
             format_g17(g.q()) + '\n';
    }
  }
  return out;
}

inline constexpr const char* kRngAlgorithm = "mt19937_64";

/// splitmix64 finalizer; derives independent stream seeds from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (a + 1) +
                    0xBF58476D1CE4E5B9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct StatePath {
  std::vector<std::size_t> states;
  std::uint64_t seed = 0;
  TransitionMatrix chain = TransitionMatrix::identity(1);
};

/// Samples a chain path of `horizon` states. With no initial state, the
/// first state is drawn from the stationary distribution.
inline StatePath sample_path(const TransitionMatrix& chain, std::size_t horizon,
                             std::uint64_t seed,
                             std::optional<std::size_t> initial = std::nullopt) {
  require(horizon >= 1, ErrorKind::kDomain, "horizon must be at least 1");
  const std::size_t n = chain.n_states();
  if (initial) {
    require(*initial < n, ErrorKind::kDomain,
            "initial state " + std::to_string(*initial) + " out of range");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::discrete_distribution<std::size_t>> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector row = chain.matrix().row(static_cast<Eigen::Index>(i)).transpose();
    rows.emplace_back(row.data(), row.data() + row.size());
  }

  StatePath path{{}, seed, chain};
  path.states.reserve(horizon);
  std::size_t state = 0;
  if (initial) {
    state = *initial;
  } else {
    const Vector pi = steady_state(chain);
    std::discrete_distribution<std::size_t> first(pi.data(), pi.data() + pi.size());
    state = first(rng);
  }
  path.states.push_back(state);
  for (std::size_t k = 1; k < horizon; ++k) {
    state = rows[state](rng);
    path.states.push_back(state);
  }
  return path;
}

struct BurstStats {
  double mean_burst_length = 0.0;  // 0 when has_bursts is false
  std::size_t burst_count = 0;
  std::size_t loss_count = 0;
  double empirical_plr = 0.0;
  bool has_bursts = false;
};

/// Statistics of maximal runs of `loss_state` along a state sequence.
inline BurstStats burst_stats(const std::vector<std::size_t>& states,
                              std::size_t loss_state = kLossState) {
  require(!states.empty(), ErrorKind::kDomain, "path is empty");
  BurstStats stats;
  bool in_burst = false;
  for (const std::size_t s : states) {
    if (s == loss_state) {
      ++stats.loss_count;
      if (!in_burst) ++stats.burst_count;
      in_burst = true;
    } else {
      in_burst = false;
    }
  }
  stats.has_bursts = stats.burst_count > 0;
  stats.empirical_plr =
      static_cast<double>(stats.loss_count) / static_cast<double>(states.size());
  if (stats.has_bursts) {
    stats.mean_burst_length = static_cast<double>(stats.loss_count) /
                              static_cast<double>(stats.burst_count);
  }
  return stats;
}

inline BurstStats burst_stats(const StatePath& path,
                              std::size_t loss_state = kLossState) {
  return burst_stats(path.states, loss_state);
}

}  // namespace burstnorm
