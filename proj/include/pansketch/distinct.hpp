#pragma once

// Pan-private distinct count over turnstile streams. The sketch keeps r
// running sums sk[j] = sum_i a_i * X[i][j] of p-stable matrix entries, each
// initialized with Laplace noise scaled to the column's global sensitivity
// 2 * Z * row_norm[j]. The estimate is the lower median of |sk[j]|^p divided
// by the calibrated scale factor sfp. Updates are linear, so the noisy state
// keeps the full distribution requirements no matter how the stream
// continues, and insert/delete pairs cancel exactly.

#include <cstdint>
#include <memory>
#include <vector>

#include "pansketch/stable.hpp"
#include "pansketch/stream.hpp"

namespace pansketch {

enum class NoiseMode { kStandard, kDisabled };

struct DistinctConfig {
  std::shared_ptr<const Calibration> calibration;
  double z = 1.0;           // promised bound on max |a_i| over the run
  double alpha = 0.0;       // per-column privacy budget; total spend, alpha*r
  double approx_eps = 0.25; // multiplicative accuracy target
  NoiseMode noise_mode = NoiseMode::kStandard;
  uint64_t noise_seed = 0;

  void validate() const;       // throws std::invalid_argument
  uint64_t config_hash() const;
};

class NoisySketch {
 public:
  explicit NoisySketch(DistinctConfig config);

  // Single update: adds delta * X[item][j] to every column.
  void update(const Update& u);
  // Whole-stream ingestion; the OpenMP kernel parallelizes over columns and
  // accumulates each column in stream order, so results are bit-identical to
  // the serial reference.
  void ingest(const Stream& stream);
  void ingest_serial(const Stream& stream);

  // Lower median of |entries|^p divided by sfp. Pure; never mutates state.
  double estimate() const;

  // Additive deviation bound ((2*Z*max_norm/alpha) * ln(1/delta))^p scaled by
  // the estimate's 1/sfp factor. Zero when noise is disabled.
  double theoretical_additive_error(double delta) const;

  // Total privacy budget this sketch consumes (alpha per column).
  double privacy_spent() const;

  std::vector<unsigned char> snapshot() const;
  static NoisySketch restore(DistinctConfig config,
                             const std::vector<unsigned char>& bytes);

  const DistinctConfig& config() const { return config_; }
  const std::vector<double>& entries() const { return entries_; }

 private:
  DistinctConfig config_;
  std::vector<double> entries_;
};

}  // namespace pansketch
