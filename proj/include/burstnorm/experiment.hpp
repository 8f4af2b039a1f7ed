#pragma once

// Worst-case Gilbert versus Bernoulli comparison along iso-PLR regions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "burstnorm/errors.hpp"
#include "burstnorm/hinf.hpp"
#include "burstnorm/markov.hpp"
#include "burstnorm/mjls.hpp"

namespace burstnorm {

inline std::vector<double> default_plr_values() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

struct SweepConfig {
  std::vector<double> plr_values = default_plr_values();
  double p_step_coarse = 0.01;
  double p_step_fine = 1e-4;
  double rel_tol = kDefaultRelTol;
  std::uint64_t seed = 1;
  ModeMapping mapping = ModeMapping::kStateOneLost;
  bool flat = false;  // evaluate every point at p_step_fine, no refinement
  double sample_period = kExampleSamplePeriod;

  void validate() const {
    require(!plr_values.empty(), ErrorKind::kDomain, "no PLR values");
    for (const double plr : plr_values) (void)BernoulliParams(plr);
    require(p_step_fine > 0.0 && p_step_fine <= p_step_coarse && p_step_coarse <= 0.1,
            ErrorKind::kDomain, "need 0 < p_step_fine <= p_step_coarse <= 0.1");
    require(rel_tol >= 1e-8 && rel_tol <= 1e-2, ErrorKind::kDomain,
            "rel_tol must lie in [1e-8, 1e-2]");
    require(sample_period > 0.0, ErrorKind::kDomain, "sample period must be positive");
  }
};

struct CurvePoint {
  double p = 0.0;
  double q = 0.0;
  double norm = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  std::string error;  // set when ok is false
};

struct ComparisonRow {
  double plr = 0.0;
  double gil_norm = std::numeric_limits<double>::quiet_NaN();
  double ber_norm = std::numeric_limits<double>::quiet_NaN();
  double err = std::numeric_limits<double>::quiet_NaN();  // (gil - ber) / ber
  double argmax_p = std::numeric_limits<double>::quiet_NaN();
  double argmax_q = std::numeric_limits<double>::quiet_NaN();
  std::size_t flagged_points = 0;
  bool ok = false;
  std::string error;
};

struct RegionSweep {
  ComparisonRow row;
  std::vector<CurvePoint> curve;       // coarse (or flat) samples, p increasing
  std::vector<CurvePoint> refinement;  // extra samples around the coarse maximum
};

/// Norm at one chain, with model-property failures recorded instead of thrown.
inline CurvePoint evaluate_chain(const ModeSet& modes, const TransitionMatrix& chain,
                                 double p, double q, const SweepConfig& cfg) {
  CurvePoint point;
  point.p = p;
  point.q = q;
  try {
    const MjlsModel model = attach_chain(modes, chain, cfg.mapping);
    point.norm = hinf_norm(model, cfg.rel_tol).norm;
    point.ok = true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kStability && e.kind() != ErrorKind::kUnbounded &&
        e.kind() != ErrorKind::kSolver) {
      throw;
    }
    point.error = e.what();
  }
  return point;
}

inline CurvePoint evaluate_pair(const ModeSet& modes, const GilbertParams& g,
                                const SweepConfig& cfg) {
  return evaluate_chain(modes, gilbert_matrix(g), g.p(), g.q(), cfg);
}

/// Coarse sweep of the region line, then nested-grid refinement (x10 per
/// level) around the coarse maximum down to p_step_fine.
inline RegionSweep worst_case_over_region(const ModeSet& modes, double plr,
                                          const SweepConfig& cfg) {
  cfg.validate();
  const BernoulliParams ber(plr);
  const GilbertParams ber_pair = bernoulli_equivalent(ber);

  RegionSweep sweep;
  sweep.row.plr = plr;
  const CurvePoint ber_point =
      evaluate_chain(modes, bernoulli_matrix(ber), ber_pair.p(), ber_pair.q(), cfg);
  if (ber_point.ok) sweep.row.ber_norm = ber_point.norm;

  const double step = cfg.flat ? cfg.p_step_fine : cfg.p_step_coarse;
  const IsoPlrRegion region = iso_plr_region(plr, step);
  const double p_max = region.p_max();

  for (const auto& g : region.pairs) {
    // The Bernoulli pair is the Bernoulli chain; reuse its evaluation.
    if (std::abs(g.p() - ber_pair.p()) <= 1e-12) {
      sweep.curve.push_back(ber_point);
    } else {
      sweep.curve.push_back(evaluate_pair(modes, g, cfg));
    }
  }
  // Region endpoint, when the step grid does not land on it.
  if (region.pairs.back().p() < p_max - 1e-12) {
    const double q_end = std::min(1.0, iso_plr_q(plr, p_max));
    if (!(p_max == 1.0 && q_end == 1.0)) {
      sweep.curve.push_back(evaluate_pair(modes, GilbertParams(p_max, q_end), cfg));
    }
  }

  const CurvePoint* best = nullptr;
  for (const auto& point : sweep.curve) {
    if (!point.ok) {
      ++sweep.row.flagged_points;
      continue;
    }
    if (best == nullptr || point.norm > best->norm) best = &point;
  }
  if (best == nullptr) {
    sweep.row.error = ber_point.ok ? "no stable point on the region"
                                   : ber_point.error;
    return sweep;
  }
  CurvePoint best_point = *best;

  if (!cfg.flat) {
    double level = cfg.p_step_coarse;
    while (level > cfg.p_step_fine * (1.0 + 1e-9)) {
      const double sub = std::max(level / 10.0, cfg.p_step_fine);
      const double centre = best_point.p;
      for (int k = -9; k <= 9; ++k) {
        if (k == 0) continue;
        const double p = centre + k * sub;
        if (p <= 0.0 || p > p_max + 1e-12) continue;
        const double pc = std::min(p, p_max);
        const double q = std::min(1.0, iso_plr_q(plr, pc));
        if (pc == 1.0 && q == 1.0) continue;
        CurvePoint point = evaluate_pair(modes, GilbertParams(pc, q), cfg);
        if (!point.ok) ++sweep.row.flagged_points;
        if (point.ok && point.norm > best_point.norm) best_point = point;
        sweep.refinement.push_back(std::move(point));
      }
      level = sub;
    }
  }

  sweep.row.gil_norm = best_point.norm;
  sweep.row.argmax_p = best_point.p;
  sweep.row.argmax_q = best_point.q;
  if (ber_point.ok) {
    sweep.row.err = (sweep.row.gil_norm - sweep.row.ber_norm) / sweep.row.ber_norm;
    sweep.row.ok = true;
  } else {
    sweep.row.error = ber_point.error;
  }
  return sweep;
}

inline RegionSweep worst_case_over_region(const ContinuousPlant& plant, double plr,
                                          const SweepConfig& cfg) {
  return worst_case_over_region(zoh_discretize(plant, cfg.sample_period), plr, cfg);
}

/// One row per configured PLR; deterministic given cfg.
inline std::vector<ComparisonRow> reproduce_table(const ModeSet& modes, const SweepConfig& cfg,
                                                  std::vector<RegionSweep>* sweeps = nullptr) {
  cfg.validate();
  std::vector<ComparisonRow> rows;
  for (const double plr : cfg.plr_values) {
    RegionSweep sweep = worst_case_over_region(modes, plr, cfg);
    rows.push_back(sweep.row);
    if (sweeps != nullptr) sweeps->push_back(std::move(sweep));
  }
  return rows;
}

inline std::vector<ComparisonRow> reproduce_table(const ContinuousPlant& plant,
                                                  const SweepConfig& cfg,
                                                  std::vector<RegionSweep>* sweeps = nullptr) {
  return reproduce_table(zoh_discretize(plant, cfg.sample_period), cfg, sweeps);
}

/// CSV `plr,gil,ber,err,argmax_p,argmax_q`; failed rows carry "nan".
inline std::string table_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "plr,gil,ber,err,argmax_p,argmax_q\n";
  for (const auto& row : rows) {
    out += format_g17(row.plr) + ',' + format_g17(row.gil_norm) + ',' +
           format_g17(row.ber_norm) + ',' + format_g17(row.err) + ',' +
           format_g17(row.argmax_p) + ',' + format_g17(row.argmax_q) + '\n';
  }
  return out;
}

inline std::string curve_csv(const std::vector<RegionSweep>& sweeps) {
  std::string out = "plr,p,q,norm,ok,refinement\n";
  for (const auto& sweep : sweeps) {
    auto emit = [&](const CurvePoint& point, bool refined) {
      out += format_g17(sweep.row.plr) + ',' + format_g17(point.p) + ',' +
             format_g17(point.q) + ',' + format_g17(point.norm) + ',' +
             (point.ok ? "1" : "0") + ',' + (refined ? "1" : "0") + '\n';
    };
    for (const auto& point : sweep.curve) emit(point, false);
    for (const auto& point : sweep.refinement) emit(point, true);
  }
  return out;
}

/// Sampled region lines for every configured PLR at p_step_fine.
inline std::string region_figure_data(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<IsoPlrRegion> regions;
  for (const double plr : cfg.plr_values) regions.push_back(iso_plr_region(plr, cfg.p_step_fine));
  return region_csv(regions);
}

// Published comparison values for the two-car example.
struct ReferenceRow {
  double plr;
  double gil;
  double ber;
  double printed_err;  // as printed, fraction
};

inline std::vector<ReferenceRow> reference_table() {
  return {{0.1, 1.1435, 1.1315, 0.001},  {0.2, 1.5430, 1.5346, 0.005},
          {0.3, 1.8511, 1.8268, 0.013},  {0.4, 2.1033, 2.0893, 0.0067},
          {0.5, 2.3317, 2.3264, 0.0022}, {0.6, 2.5923, 2.5362, 0.0221},
          {0.7, 2.8576, 2.7425, 0.0419}, {0.8, 3.1023, 2.9183, 0.0630},
          {0.9, 3.2198, 3.1131, 0.0342}};
}

struct DeviationReport {
  double max_ber_deviation = std::numeric_limits<double>::infinity();
  double max_gil_deviation = std::numeric_limits<double>::infinity();
  std::size_t compared_rows = 0;
  bool within(double tol) const {
    return compared_rows == reference_table().size() && max_ber_deviation <= tol &&
           max_gil_deviation <= tol;
  }
  std::string text;
};

/// Column-by-column comparison against reference_table(). Relative
/// deviations are |computed - reference| / reference; rows whose norm could
/// not be computed are listed and count as not compared.
inline DeviationReport compare_with_reference(const std::vector<ComparisonRow>& rows,
                                              const std::string& label) {
  DeviationReport report;
  std::ostringstream out;
  out << "comparison against reference values (" << label << ")\n";
  out << "plr   gil        ref_gil  dev_gil    ber        ref_ber  dev_ber    err        ref_err(recomputed) ref_err(printed)\n";
  double max_ber = 0.0;
  double max_gil = 0.0;
  for (const auto& ref : reference_table()) {
    const auto it = std::find_if(rows.begin(), rows.end(), [&](const ComparisonRow& r) {
      return std::abs(r.plr - ref.plr) < 1e-9;
    });
    const double recomputed = (ref.gil - ref.ber) / ref.ber;
    out << format_g6(ref.plr) << "   ";
    if (it == rows.end() || !it->ok) {
      out << "(no value: " << (it == rows.end() ? std::string("row not computed") : it->error)
          << ")  ref_gil " << format_g6(ref.gil) << " ref_ber " << format_g6(ref.ber) << "\n";
      continue;
    }
    const double dg = std::abs(it->gil_norm - ref.gil) / ref.gil;
    const double db = std::abs(it->ber_norm - ref.ber) / ref.ber;
    max_gil = std::max(max_gil, dg);
    max_ber = std::max(max_ber, db);
    ++report.compared_rows;
    out << format_g6(it->gil_norm) << "  " << format_g6(ref.gil) << "  " << format_g6(dg)
        << "  " << format_g6(it->ber_norm) << "  " << format_g6(ref.ber) << "  "
        << format_g6(db) << "  " << format_g6(it->err) << "  " << format_g6(recomputed)
        << "  " << format_g6(ref.printed_err) << "\n";
  }
  for (const auto& ref : reference_table()) {
    const double recomputed = (ref.gil - ref.ber) / ref.ber;
    if (std::abs(recomputed - ref.printed_err) > 0.005) {
      out << "note: printed ERR at PLR " << format_g6(ref.plr) << " is "
          << format_g6(100 * ref.printed_err) << "% but its own columns give "
          << format_g6(100 * recomputed) << "%\n";
    }
  }
  if (report.compared_rows > 0) {
    report.max_ber_deviation = max_ber;
    report.max_gil_deviation = max_gil;
  }
  out << "compared rows: " << report.compared_rows << "/" << reference_table().size()
      << ", max relative deviation gil " << format_g6(report.max_gil_deviation) << ", ber "
      << format_g6(report.max_ber_deviation) << "\n";
  report.text = out.str();
  return report;
}

struct MonteCarloEntry {
  double plr = 0.0;
  std::string chain;  // "bernoulli" or "gilbert"
  double p = 0.0;
  double q = 0.0;
  double certified_norm = std::numeric_limits<double>::quiet_NaN();
  double max_gain = std::numeric_limits<double>::quiet_NaN();
  double min_margin = std::numeric_limits<double>::quiet_NaN();  // norm - max gain
  std::size_t trials = 0;
  std::size_t violations = 0;
  double mean_burst = std::numeric_limits<double>::quiet_NaN();
  double expected_burst = std::numeric_limits<double>::quiet_NaN();  // 1 / p
  bool ok = false;
  std::string error;
};

struct MonteCarloReport {
  std::vector<MonteCarloEntry> entries;
  std::size_t violations = 0;
  bool all_certified = true;
  std::string text() const;
};

inline std::string MonteCarloReport::text() const {
  std::ostringstream out;
  out << "plr,chain,p,q,certified_norm,max_gain,min_margin,trials,violations,mean_burst,expected_burst,status\n";
  for (const auto& e : entries) {
    out << format_g17(e.plr) << ',' << e.chain << ',' << format_g17(e.p) << ','
        << format_g17(e.q) << ',' << format_g17(e.certified_norm) << ','
        << format_g17(e.max_gain) << ',' << format_g17(e.min_margin) << ',' << e.trials << ','
        << e.violations << ',' << format_g17(e.mean_burst) << ','
        << format_g17(e.expected_burst) << ',' << (e.ok ? "ok" : "\"" + e.error + "\"") << '\n';
  }
  return out.str();
}

/// Gilbert pair used for validation: same PLR as Bernoulli at plr, with
/// both exit probabilities halved (longer bursts).
inline GilbertParams bursty_pair(double plr) {
  return GilbertParams(0.5 * (1.0 - plr), 0.5 * plr);
}

/// Checks empirical gains against certified norms for the Bernoulli chain
/// and a bursty Gilbert chain at each PLR. Both chains at one PLR share the
/// input seed.
inline MonteCarloReport monte_carlo_validate(const ModeSet& modes, const SweepConfig& cfg,
                                             std::size_t trials, std::size_t horizon) {
  cfg.validate();
  require(trials >= 10, ErrorKind::kDomain, "at least 10 trials are required");
  require(horizon >= 1, ErrorKind::kDomain, "horizon must be at least 1");
  MonteCarloReport report;
  for (std::size_t idx = 0; idx < cfg.plr_values.size(); ++idx) {
    const double plr = cfg.plr_values[idx];
    const std::uint64_t seed = mix_seed(cfg.seed, idx);
    const GilbertParams ber_pair = bernoulli_equivalent(BernoulliParams(plr));
    const GilbertParams bursty = bursty_pair(plr);
    struct Case {
      const char* name;
      TransitionMatrix chain;
      GilbertParams g;
    };
    const Case cases[] = {{"bernoulli", bernoulli_matrix(BernoulliParams(plr)), ber_pair},
                          {"gilbert", gilbert_matrix(bursty), bursty}};
    for (const auto& c : cases) {
      MonteCarloEntry entry;
      entry.plr = plr;
      entry.chain = c.name;
      entry.p = c.g.p();
      entry.q = c.g.q();
      entry.trials = trials;
      entry.expected_burst = 1.0 / c.g.p();
      try {
        const MjlsModel model = attach_chain(modes, c.chain, cfg.mapping);
        entry.certified_norm = hinf_norm(model, cfg.rel_tol).norm;
        const auto gains = empirical_gains(model, trials, horizon, seed);
        entry.max_gain = *std::max_element(gains.begin(), gains.end());
        entry.min_margin = entry.certified_norm - entry.max_gain;
        for (const double g : gains) {
          if (g > entry.certified_norm) ++entry.violations;
        }
        entry.ok = true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kStability && e.kind() != ErrorKind::kUnbounded &&
            e.kind() != ErrorKind::kSolver) {
          throw;
        }
        entry.error = e.what();
        report.all_certified = false;
      }
      // Burst statistics of the same chain paths the gain trials used.
      std::size_t losses = 0;
      std::size_t bursts = 0;
      for (std::size_t t = 0; t < trials; ++t) {
        const StatePath path =
            sample_path(c.chain, horizon, mix_seed(seed, t, kChainStream));
        const BurstStats stats = burst_stats(path, kLossState);
        losses += stats.loss_count;
        bursts += stats.burst_count;
      }
      if (bursts > 0) entry.mean_burst = static_cast<double>(losses) / static_cast<double>(bursts);
      report.violations += entry.violations;
      report.entries.push_back(std::move(entry));
    }
  }
  return report;
}

inline MonteCarloReport monte_carlo_validate(const ContinuousPlant& plant,
                                             const SweepConfig& cfg, std::size_t trials,
                                             std::size_t horizon) {
  return monte_carlo_validate(zoh_discretize(plant, cfg.sample_period), cfg, trials, horizon);
}

}  // namespace burstnorm
