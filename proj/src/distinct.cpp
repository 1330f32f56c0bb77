#include "pansketch/distinct.hpp"

#include <cmath>
#include <stdexcept>

#include "pansketch/rng.hpp"
#include "pansketch/snapshot.hpp"

namespace pansketch {

void DistinctConfig::validate() const {
  if (!calibration) throw std::invalid_argument("sketch config needs a calibration");
  calibration->params.validate();
  if (calibration->row_norms.size() != calibration->params.r) {
    throw std::invalid_argument("calibration row norms do not match r");
  }
  if (!(calibration->sfp > 0.0)) {
    throw std::invalid_argument("calibration sfp must be positive");
  }
  if (z < 1.0) throw std::invalid_argument("turnstile bound Z must be >= 1");
  if (!(approx_eps > 0.0) || approx_eps >= 1.0) {
    throw std::invalid_argument("approx_eps must be in (0, 1)");
  }
  const double p_limit = std::log2(z);
  if (calibration->params.p * p_limit >= approx_eps) {
    throw std::invalid_argument(
        "stability index too large: need p * log2(Z) < approx_eps");
  }
  if (noise_mode == NoiseMode::kStandard && !(alpha > 0.0)) {
    throw std::invalid_argument("privacy budget alpha must be positive");
  }
}

uint64_t DistinctConfig::config_hash() const {
  PayloadWriter w;
  w.put_f64(calibration->params.p);
  w.put_u32(calibration->params.r);
  w.put_u64(calibration->params.m);
  w.put_u64(calibration->params.master_seed);
  w.put_u64(calibration->n_samples);
  w.put_f64(calibration->sfp);
  for (double v : calibration->row_norms) w.put_f64(v);
  w.put_f64(z);
  w.put_f64(alpha);
  w.put_f64(approx_eps);
  w.put_u8(noise_mode == NoiseMode::kStandard ? 1 : 0);
  w.put_u64(noise_seed);
  return fnv1a64(w.bytes().data(), w.bytes().size());
}

NoisySketch::NoisySketch(DistinctConfig config) : config_(std::move(config)) {
  config_.validate();
  const Calibration& cal = *config_.calibration;
  entries_.assign(cal.params.r, 0.0);
  if (config_.noise_mode == NoiseMode::kStandard) {
    for (uint32_t j = 0; j < cal.params.r; ++j) {
      const double sensitivity = 2.0 * config_.z * cal.row_norms[j];
      entries_[j] = laplace(config_.noise_seed, j, sensitivity / config_.alpha);
    }
  }
}

void NoisySketch::update(const Update& u) {
  const StableParams& params = config_.calibration->params;
  if (u.item >= params.m) {
    throw std::out_of_range("sketch update outside universe");
  }
  if (u.delta == 0) return;
  const double d = static_cast<double>(u.delta);
  for (uint32_t j = 0; j < params.r; ++j) {
    entries_[j] += d * x_entry(params, u.item, j);
  }
}

void NoisySketch::ingest(const Stream& stream) {
  const StableParams& params = config_.calibration->params;
  for (const Update& u : stream) {
    if (u.item >= params.m) {
      throw std::out_of_range("sketch update outside universe");
    }
  }
  const int64_t r = static_cast<int64_t>(params.r);
#pragma omp parallel for schedule(static)
  for (int64_t j = 0; j < r; ++j) {
    double acc = entries_[j];
    for (const Update& u : stream) {
      if (u.delta == 0) continue;
      acc += static_cast<double>(u.delta) *
             x_entry(params, u.item, static_cast<uint32_t>(j));
    }
    entries_[j] = acc;
  }
}

void NoisySketch::ingest_serial(const Stream& stream) {
  for (const Update& u : stream) update(u);
}

double NoisySketch::estimate() const {
  const Calibration& cal = *config_.calibration;
  std::vector<double> powered(entries_.size());
  for (size_t j = 0; j < entries_.size(); ++j) {
    powered[j] = std::pow(std::abs(entries_[j]), cal.params.p);
  }
  return lower_median(powered) / cal.sfp;
}

double NoisySketch::theoretical_additive_error(double delta) const {
  if (!(delta > 0.0) || delta >= 1.0) {
    throw std::invalid_argument("tail probability delta must be in (0, 1)");
  }
  if (config_.noise_mode == NoiseMode::kDisabled) return 0.0;
  const Calibration& cal = *config_.calibration;
  const double scale = 2.0 * config_.z * cal.max_row_norm() / config_.alpha;
  const double xi = std::pow(scale * std::log(1.0 / delta), cal.params.p);
  return xi / cal.sfp;
}

double NoisySketch::privacy_spent() const {
  if (config_.noise_mode == NoiseMode::kDisabled) return 0.0;
  return config_.alpha * config_.calibration->params.r;
}

std::vector<unsigned char> NoisySketch::snapshot() const {
  PayloadWriter w;
  w.put_u64(config_.config_hash());
  w.put_u64(entries_.size());
  for (double v : entries_) w.put_f64(v);
  return wrap_snapshot(PayloadKind::kDistinctSketch, w.bytes());
}

NoisySketch NoisySketch::restore(DistinctConfig config,
                                 const std::vector<unsigned char>& bytes) {
  const std::vector<unsigned char> payload =
      unwrap_snapshot(bytes, PayloadKind::kDistinctSketch);
  PayloadReader r(payload.data(), payload.size());
  const uint64_t hash = r.get_u64();
  // Building through the constructor validates the config; the noisy init is
  // then overwritten with the recorded entries.
  NoisySketch sketch(std::move(config));
  if (hash != sketch.config_.config_hash()) {
    throw std::runtime_error("snapshot does not match this sketch config");
  }
  const uint64_t n = r.get_u64();
  if (n != sketch.entries_.size()) {
    throw std::runtime_error("snapshot entry count mismatch");
  }
  for (uint64_t j = 0; j < n; ++j) sketch.entries_[j] = r.get_f64();
  if (r.remaining() != 0) {
    throw std::runtime_error("snapshot payload has trailing bytes");
  }
  return sketch;
}

}  // namespace pansketch
