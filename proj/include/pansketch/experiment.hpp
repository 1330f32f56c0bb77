#pragma once

// Monte Carlo experiment harness: repeated (stream, estimator) trials against
// the exact oracle, written as RFC-4180-style CSV with a fixed header and a
// trailing summary row. Output is a pure function of the ExperimentSpec
// (trial rows are emitted in trial order regardless of how many threads ran
// them); wall-clock timing is opt-in because it would break reproducibility.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "pansketch/stable.hpp"
#include "pansketch/stream.hpp"

namespace pansketch {

enum class ExperimentKind { kDistinct, kCroppedSum, kHeavyHitters, kDot, kT2 };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kDistinct;
  StreamGen stream;       // per-trial seeds are derived from spec.seed
  uint64_t trials = 10;
  uint64_t seed = 0;
  bool record_timing = false;  // keep CSV deterministic by default
  bool parallel = true;        // OpenMP over trials; serial path for testing

  // distinct
  std::shared_ptr<const Calibration> calibration;
  double z = 1.0;
  double alpha_total = 1.0;   // split over r columns
  double approx_eps = 0.25;
  bool noise_disabled = false;

  // croppedsum / dot / t2
  uint64_t tau = 8;
  double priv_eps = 0.5;

  // heavy hitters
  double hh_k = 10.0;
  double hh_c = 2.0;
  double hh_beta = 0.5;
  double hh_delta = 0.1;
  std::optional<double> hh_f1;
  std::optional<uint64_t> hh_u0;

  // dot: the right-hand stream (left uses `stream`)
  StreamGen stream_right;
};

struct ExperimentSummary {
  uint64_t trials = 0;
  double mean_abs_error = 0.0;
  double p90_abs_error = 0.0;
  double frac_within_bound = 0.0;
};

// Writes header, trial rows and the summary row to `out`; returns the summary.
ExperimentSummary run_experiment(const ExperimentSpec& spec, std::ostream& out);

extern const char kExperimentCsvHeader[];

}  // namespace pansketch
