#pragma once

// Symmetric p-stable variate generation (Chambers-Mallows-Stuck) and the
// calibration a sketch needs before use: the estimate scale factor
// sfp = median |X|^p and the per-column maximum matrix magnitudes that set the
// noise scale. Matrix entries X[i][j] are never stored; x_entry() recomputes
// them on demand from (master_seed, item, column), so both sides of a
// computation always see the same matrix.

#include <cstdint>
#include <string>
#include <vector>

namespace pansketch {

struct StableParams {
  double p = 0.5;          // stability index, 0 < p <= 1
  uint32_t r = 1;          // number of sketch columns
  uint64_t m = 0;          // universe size
  uint64_t master_seed = 0;

  void validate() const;   // throws std::invalid_argument
};

// Chambers-Mallows-Stuck transform of two uniforms. Inputs are clamped to
// [1e-12, 1 - 1e-12]; output is always finite (log-space evaluation with the
// exponent saturated below overflow). p = 1 reduces to tan(pi*(r1 - 1/2)),
// the standard Cauchy.
double stable_variate(double r1, double r2, double p);

// Matrix entry X[item][col] for the given parameters: draws the col-th
// (r1, r2) pair from the generator keyed with (master_seed, item). Pure.
double x_entry(const StableParams& params, uint64_t item, uint32_t col);

struct Calibration {
  StableParams params;
  uint64_t n_samples = 0;          // Monte Carlo size behind sfp
  double sfp = 0.0;                // median |X|^p over n_samples fresh draws
  std::vector<double> row_norms;   // row_norms[j] = max_i |X[i][j]|, size r

  double max_row_norm() const;
};

// Monte Carlo sfp + exact row-norm enumeration over the full universe.
// n_samples must be >= 1e5 (below that the median estimate is too loose to
// certify the advertised tolerances). The OpenMP build parallelizes over
// items; calibrate_serial is the reference implementation and produces
// bit-identical results.
Calibration calibrate(const StableParams& params, uint64_t n_samples);
Calibration calibrate_serial(const StableParams& params, uint64_t n_samples);

// Versioned binary cache (see snapshot.hpp for the container format).
// Round-trips every field exactly.
std::vector<unsigned char> serialize(const Calibration& cal);
Calibration deserialize_calibration(const std::vector<unsigned char>& bytes);
void save_calibration(const std::string& path, const Calibration& cal);
Calibration load_calibration(const std::string& path);

// Lower median: the ceil(n/2)-th order statistic (1-indexed). Mutates its
// scratch argument.
double lower_median(std::vector<double>& values);

}  // namespace pansketch
