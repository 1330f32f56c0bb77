#include "pansketch/stable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pansketch/rng.hpp"
#include "pansketch/snapshot.hpp"

namespace pansketch {

namespace {
constexpr double kClamp = 1e-12;
// e^700 ~ 1e304 < DBL_MAX; saturating the log-magnitude here keeps the output
// finite even at the clamp boundary with tiny p.
constexpr double kMaxLogMagnitude = 700.0;
constexpr uint64_t kMinCalibrationSamples = 100000;

double clamp_unit(double u) {
  return std::min(std::max(u, kClamp), 1.0 - kClamp);
}
}  // namespace

void StableParams::validate() const {
  if (!(p > 0.0) || p > 1.0) {
    throw std::invalid_argument("stability index p must be in (0, 1]");
  }
  if (r == 0) throw std::invalid_argument("sketch width r must be >= 1");
  if (m == 0) throw std::invalid_argument("universe size m must be >= 1");
}

double stable_variate(double r1, double r2, double p) {
  if (!(p > 0.0) || p > 1.0) {
    throw std::invalid_argument("stability index p must be in (0, 1]");
  }
  r1 = clamp_unit(r1);
  r2 = clamp_unit(r2);
  const double theta = std::numbers::pi * (r1 - 0.5);
  const double s = std::sin(p * theta);
  if (s == 0.0) return 0.0;
  // Magnitude in log space; |theta| < pi/2 strictly after clamping, so both
  // cosines are positive, and w = -ln(r2) > 0.
  const double w = -std::log(r2);
  double log_mag = std::log(std::abs(s)) - std::log(std::cos(theta)) / p +
                   (1.0 - p) / p *
                       (std::log(std::cos(theta * (1.0 - p))) - std::log(w));
  log_mag = std::min(log_mag, kMaxLogMagnitude);
  return std::copysign(std::exp(log_mag), s);
}

double x_entry(const StableParams& params, uint64_t item, uint32_t col) {
  const uint64_t key = params.master_seed ^ item;
  const double r1 = uniform01(key, 2ULL * col);
  const double r2 = uniform01(key, 2ULL * col + 1);
  return stable_variate(r1, r2, params.p);
}

double Calibration::max_row_norm() const {
  if (row_norms.empty()) throw std::logic_error("calibration has no row norms");
  return *std::max_element(row_norms.begin(), row_norms.end());
}

double lower_median(std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("median of empty range");
  const size_t idx = (values.size() - 1) / 2;  // ceil(n/2)-th, 0-indexed
  std::nth_element(values.begin(), values.begin() + idx, values.end());
  return values[idx];
}

namespace {

double sample_sfp(const StableParams& params, uint64_t n_samples) {
  const uint64_t key = derive_seed(params.master_seed, kSaltSfp);
  std::vector<double> draws(n_samples);
#pragma omp parallel for schedule(static)
  for (int64_t k = 0; k < static_cast<int64_t>(n_samples); ++k) {
    const double r1 = uniform01(key, 2ULL * static_cast<uint64_t>(k));
    const double r2 = uniform01(key, 2ULL * static_cast<uint64_t>(k) + 1);
    draws[k] = std::pow(std::abs(stable_variate(r1, r2, params.p)), params.p);
  }
  return lower_median(draws);
}

double sample_sfp_serial(const StableParams& params, uint64_t n_samples) {
  const uint64_t key = derive_seed(params.master_seed, kSaltSfp);
  std::vector<double> draws(n_samples);
  for (uint64_t k = 0; k < n_samples; ++k) {
    const double r1 = uniform01(key, 2 * k);
    const double r2 = uniform01(key, 2 * k + 1);
    draws[k] = std::pow(std::abs(stable_variate(r1, r2, params.p)), params.p);
  }
  return lower_median(draws);
}

std::vector<double> enumerate_row_norms(const StableParams& params) {
  std::vector<double> norms(params.r, 0.0);
#pragma omp parallel
  {
    std::vector<double> local(params.r, 0.0);
#pragma omp for schedule(static) nowait
    for (int64_t i = 0; i < static_cast<int64_t>(params.m); ++i) {
      for (uint32_t j = 0; j < params.r; ++j) {
        const double v =
            std::abs(x_entry(params, static_cast<uint64_t>(i), j));
        if (v > local[j]) local[j] = v;
      }
    }
#pragma omp critical
    {
      for (uint32_t j = 0; j < params.r; ++j) {
        if (local[j] > norms[j]) norms[j] = local[j];
      }
    }
  }
  return norms;
}

std::vector<double> enumerate_row_norms_serial(const StableParams& params) {
  std::vector<double> norms(params.r, 0.0);
  for (uint64_t i = 0; i < params.m; ++i) {
    for (uint32_t j = 0; j < params.r; ++j) {
      const double v = std::abs(x_entry(params, i, j));
      if (v > norms[j]) norms[j] = v;
    }
  }
  return norms;
}

void check_samples(uint64_t n_samples) {
  if (n_samples < kMinCalibrationSamples) {
    throw std::invalid_argument(
        "calibration needs at least 1e5 Monte Carlo samples");
  }
}

}  // namespace

Calibration calibrate(const StableParams& params, uint64_t n_samples) {
  params.validate();
  check_samples(n_samples);
  Calibration cal;
  cal.params = params;
  cal.n_samples = n_samples;
  cal.sfp = sample_sfp(params, n_samples);
  cal.row_norms = enumerate_row_norms(params);
  return cal;
}

Calibration calibrate_serial(const StableParams& params, uint64_t n_samples) {
  params.validate();
  check_samples(n_samples);
  Calibration cal;
  cal.params = params;
  cal.n_samples = n_samples;
  cal.sfp = sample_sfp_serial(params, n_samples);
  cal.row_norms = enumerate_row_norms_serial(params);
  return cal;
}

std::vector<unsigned char> serialize(const Calibration& cal) {
  PayloadWriter w;
  w.put_f64(cal.params.p);
  w.put_u32(cal.params.r);
  w.put_u64(cal.params.m);
  w.put_u64(cal.params.master_seed);
  w.put_u64(cal.n_samples);
  w.put_f64(cal.sfp);
  w.put_u64(cal.row_norms.size());
  for (double v : cal.row_norms) w.put_f64(v);
  return wrap_snapshot(PayloadKind::kCalibration, w.bytes());
}

Calibration deserialize_calibration(const std::vector<unsigned char>& bytes) {
  const std::vector<unsigned char> payload =
      unwrap_snapshot(bytes, PayloadKind::kCalibration);
  PayloadReader r(payload.data(), payload.size());
  Calibration cal;
  cal.params.p = r.get_f64();
  cal.params.r = r.get_u32();
  cal.params.m = r.get_u64();
  cal.params.master_seed = r.get_u64();
  cal.n_samples = r.get_u64();
  cal.sfp = r.get_f64();
  const uint64_t n = r.get_u64();
  if (n != cal.params.r) {
    throw std::runtime_error("calibration row-norm count mismatch");
  }
  cal.row_norms.resize(n);
  for (uint64_t j = 0; j < n; ++j) cal.row_norms[j] = r.get_f64();
  if (r.remaining() != 0) {
    throw std::runtime_error("calibration payload has trailing bytes");
  }
  cal.params.validate();
  return cal;
}

void save_calibration(const std::string& path, const Calibration& cal) {
  write_file(path, serialize(cal));
}

Calibration load_calibration(const std::string& path) {
  return deserialize_calibration(read_file(path));
}

}  // namespace pansketch
