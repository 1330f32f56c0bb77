#include "pansketch/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pansketch/cropped_sum.hpp"
#include "pansketch/distinct.hpp"
#include "pansketch/dot_product.hpp"
#include "pansketch/heavy_hitters.hpp"
#include "pansketch/rng.hpp"

namespace pansketch {

const char kExperimentCsvHeader[] =
    "trial,truth,estimate,abs_error,rel_error,within_bound,elapsed_us,"
    "mean_abs_error,p90_abs_error,frac_within_bound";

namespace {

struct TrialRow {
  uint64_t trial = 0;
  double truth = 0.0;
  double estimate = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  bool within_bound = false;
  uint64_t elapsed_us = 0;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Confidence parameter used by every per-kind theoretical bound the summary
// reports against.
constexpr double kBoundAlpha = 2.0;

TrialRow run_trial(const ExperimentSpec& spec, uint64_t trial) {
  const auto start = std::chrono::steady_clock::now();
  const uint64_t trial_seed = derive_seed(spec.seed, kSaltTrial) ^ trial;

  StreamGen gen = spec.stream;
  gen.seed = derive_seed(trial_seed, kSaltStream);
  const Stream stream = generate(gen);

  TrialRow row;
  row.trial = trial;

  switch (spec.kind) {
    case ExperimentKind::kDistinct: {
      const StateVector state =
          materialize(gen.m, StreamMode::kTurnstile, stream);
      row.truth = static_cast<double>(distinct_count(state));
      DistinctConfig config;
      config.calibration = spec.calibration;
      config.z = spec.z;
      config.approx_eps = spec.approx_eps;
      config.noise_mode =
          spec.noise_disabled ? NoiseMode::kDisabled : NoiseMode::kStandard;
      config.alpha =
          spec.noise_disabled
              ? 0.0
              : spec.alpha_total / spec.calibration->params.r;
      config.noise_seed = derive_seed(trial_seed, kSaltNoise);
      NoisySketch sketch(config);
      sketch.ingest(stream);
      row.estimate = sketch.estimate();
      const double additive =
          spec.noise_disabled ? 0.0 : sketch.theoretical_additive_error(0.05);
      row.abs_error = std::abs(row.estimate - row.truth);
      row.within_bound =
          row.abs_error <= spec.approx_eps * row.truth + additive;
      break;
    }
    case ExperimentKind::kCroppedSum: {
      const StateVector state =
          materialize(gen.m, StreamMode::kCashRegister, stream);
      row.truth = cropped_moment(state, 1.0, static_cast<double>(spec.tau));
      CroppedSumEstimator est(gen.m, spec.tau, spec.priv_eps,
                              derive_seed(trial_seed, kSaltInit));
      est.ingest(stream);
      row.estimate = est.estimate();
      row.abs_error = std::abs(row.estimate - row.truth);
      row.within_bound = row.abs_error <= est.deviation_bound(kBoundAlpha);
      break;
    }
    case ExperimentKind::kHeavyHitters: {
      const StateVector state =
          materialize(gen.m, StreamMode::kCashRegister, stream);
      HHConfig config;
      config.k = spec.hh_k;
      config.c = spec.hh_c;
      config.beta = spec.hh_beta;
      config.delta = spec.hh_delta;
      config.priv_eps = spec.priv_eps;
      config.seed = derive_seed(trial_seed, kSaltInit);
      config.f1 = spec.hh_f1;
      config.u0 = spec.hh_u0;
      HHEstimator est(config);
      est.ingest(stream);
      row.truth = static_cast<double>(hh_count(state, spec.hh_k));
      row.estimate = est.estimate();
      row.abs_error = std::abs(row.estimate - row.truth);
      // Theorem-shaped check: estimate inside the sandwich
      // [(1-beta) * HH(k), HH(2 c^2 k^2 / delta)] widened by the noise
      // envelope on both sides.
      const double upper_level =
          2.0 * spec.hh_c * spec.hh_c * spec.hh_k * spec.hh_k / spec.hh_delta;
      const double hh_upper = static_cast<double>(hh_count(state, upper_level));
      const double env = est.deviation_bound(kBoundAlpha);
      row.within_bound =
          row.estimate >= (1.0 - spec.hh_beta) * row.truth - env &&
          row.estimate <= hh_upper + env;
      break;
    }
    case ExperimentKind::kDot: {
      StreamGen right = spec.stream_right;
      right.seed = derive_seed(trial_seed, kSaltRight);
      const Stream stream_r = generate(right);
      const StateVector sa =
          materialize(gen.m, StreamMode::kCashRegister, stream);
      const StateVector sb =
          materialize(right.m, StreamMode::kCashRegister, stream_r);
      row.truth = cropped_dot(sa, sb, static_cast<double>(spec.tau));
      DotProductEstimator est(gen.m, spec.tau, spec.priv_eps,
                              derive_seed(trial_seed, kSaltInit));
      est.ingest_left(stream);
      est.ingest_right(stream_r);
      row.estimate = est.estimate();
      row.abs_error = std::abs(row.estimate - row.truth);
      row.within_bound = row.abs_error <= est.deviation_bound(kBoundAlpha);
      break;
    }
    case ExperimentKind::kT2: {
      const StateVector state =
          materialize(gen.m, StreamMode::kCashRegister, stream);
      row.truth = cropped_moment(state, 2.0, static_cast<double>(spec.tau));
      T2Estimator est(gen.m, spec.tau, spec.priv_eps,
                      derive_seed(trial_seed, kSaltInit));
      est.ingest(stream);
      row.estimate = est.estimate();
      row.abs_error = std::abs(row.estimate - row.truth);
      row.within_bound = row.abs_error <= est.deviation_bound(kBoundAlpha);
      break;
    }
  }

  row.rel_error = row.truth != 0.0 ? row.abs_error / std::abs(row.truth) : 0.0;
  if (spec.record_timing) {
    row.elapsed_us = static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(
            std::chrono::steady_clock::now() - start)
            .count());
  }
  return row;
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentSpec& spec, std::ostream& out) {
  if (spec.kind == ExperimentKind::kDistinct && spec.trials > 0) {
    if (!spec.calibration) {
      throw std::invalid_argument("distinct experiment needs a calibration");
    }
    if (spec.calibration->params.m != spec.stream.m) {
      throw std::invalid_argument(
          "calibration universe m=" +
          std::to_string(spec.calibration->params.m) +
          " does not match the stream universe m=" +
          std::to_string(spec.stream.m));
    }
  }
  // Degenerate spec: header-only file and an all-zero summary.
  if (spec.trials == 0) {
    out << kExperimentCsvHeader << '\n';
    return ExperimentSummary{};
  }

  std::vector<TrialRow> rows(spec.trials);
  const int64_t n = static_cast<int64_t>(spec.trials);
  if (spec.parallel) {
    // Exceptions cannot unwind out of the parallel region; capture the first
    // one and rethrow after the loop joins.
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
    for (int64_t t = 0; t < n; ++t) {
      try {
        rows[t] = run_trial(spec, static_cast<uint64_t>(t));
      } catch (...) {
#pragma omp critical(experiment_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    for (int64_t t = 0; t < n; ++t) {
      rows[t] = run_trial(spec, static_cast<uint64_t>(t));
    }
  }

  ExperimentSummary summary;
  summary.trials = spec.trials;
  std::vector<double> abs_errors;
  abs_errors.reserve(spec.trials);
  uint64_t within = 0;
  for (const TrialRow& row : rows) {
    summary.mean_abs_error += row.abs_error;
    abs_errors.push_back(row.abs_error);
    within += row.within_bound;
  }
  summary.mean_abs_error /= static_cast<double>(spec.trials);
  std::sort(abs_errors.begin(), abs_errors.end());
  // p90: smallest value with at least 90% of the sample at or below it.
  const size_t idx = static_cast<size_t>(
      std::ceil(0.9 * static_cast<double>(abs_errors.size()))) - 1;
  summary.p90_abs_error = abs_errors[std::min(idx, abs_errors.size() - 1)];
  summary.frac_within_bound =
      static_cast<double>(within) / static_cast<double>(spec.trials);

  out << kExperimentCsvHeader << '\n';
  for (const TrialRow& row : rows) {
    out << row.trial << ',' << fmt(row.truth) << ',' << fmt(row.estimate)
        << ',' << fmt(row.abs_error) << ',' << fmt(row.rel_error) << ','
        << (row.within_bound ? 1 : 0) << ',' << row.elapsed_us << ",,,\n";
  }
  out << "summary,,,,,,," << fmt(summary.mean_abs_error) << ','
      << fmt(summary.p90_abs_error) << ',' << fmt(summary.frac_within_bound)
      << '\n';
  return summary;
}

}  // namespace pansketch
