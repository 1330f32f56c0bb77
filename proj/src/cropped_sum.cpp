#include "pansketch/cropped_sum.hpp"

#include <cmath>
#include <stdexcept>

#include "pansketch/rng.hpp"
#include "pansketch/snapshot.hpp"

namespace pansketch {

namespace {
// Per-item draw schedule: counters 0 and 1 initialize the modular counter and
// the bit; counter 2+k is the k-th bit redraw.
constexpr uint64_t kDrawInit = 0;
constexpr uint64_t kDrawBit = 1;
constexpr uint64_t kDrawRedrawBase = 2;

void validate_params(uint64_t h, uint64_t tau, double eps) {
  if (h == 0) throw std::invalid_argument("cropped sum needs h >= 1");
  if (tau == 0) throw std::invalid_argument("cropped sum needs tau >= 1");
  if (!(eps > 0.0) || eps >= 2.0) {
    throw std::invalid_argument("cropped sum needs eps in (0, 2)");
  }
}
}  // namespace

CroppedSumEstimator::CroppedSumEstimator(uint64_t h, uint64_t tau, double eps,
                                         uint64_t seed)
    : h_(h), tau_(tau), eps_(eps), seed_(seed) {
  validate_params(h, tau, eps);
  counters_.resize(h);
  bits_.resize(h);
  draws_.assign(h, 0);
  for (uint64_t i = 0; i < h; ++i) {
    const uint64_t key = derive_seed(seed_, kSaltInit) ^ i;
    counters_[i] = static_cast<uint32_t>(uniform_below(key, kDrawInit, tau_));
    bits_[i] = static_cast<uint8_t>(mix64(key, kDrawBit) & 1);
  }
}

uint8_t CroppedSumEstimator::draw_bit(uint64_t item) {
  const uint64_t key = derive_seed(seed_, kSaltInit) ^ item;
  const double u = uniform01(key, kDrawRedrawBase + draws_[item]++);
  return u < 0.5 + eps_ / 4.0 ? 1 : 0;
}

void CroppedSumEstimator::update(const Update& u) {
  if (u.item >= h_) throw std::out_of_range("cropped sum update outside universe");
  if (u.delta == 0) return;
  if (u.delta < 0) {
    throw std::invalid_argument("cropped sum is cash-register only (delta >= 1)");
  }
  const uint64_t total = counters_[u.item] + static_cast<uint64_t>(u.delta);
  const uint64_t wraps = total / tau_;
  counters_[u.item] = static_cast<uint32_t>(total % tau_);
  if (wraps > 0) {
    // One redraw per wrap; only the last one survives, so advance the cursor
    // past the unobserved draws and take the final one. Equivalent to (and
    // cursor-compatible with) redrawing wraps times in a row.
    draws_[u.item] += static_cast<uint32_t>(wraps - 1);
    bits_[u.item] = draw_bit(u.item);
  }
}

void CroppedSumEstimator::ingest(const Stream& stream) {
  std::vector<int64_t> totals(h_, 0);
  for (const Update& u : stream) {
    if (u.item >= h_) throw std::out_of_range("cropped sum update outside universe");
    if (u.delta < 0) {
      throw std::invalid_argument("cropped sum is cash-register only (delta >= 1)");
    }
    totals[u.item] += u.delta;
  }
  const int64_t n = static_cast<int64_t>(h_);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    if (totals[i] > 0) update(Update{static_cast<uint64_t>(i), totals[i]});
  }
}

void CroppedSumEstimator::ingest_serial(const Stream& stream) {
  for (const Update& u : stream) update(u);
}

uint64_t CroppedSumEstimator::ones_count() const {
  const int64_t n = static_cast<int64_t>(h_);
  uint64_t ones = 0;
#pragma omp parallel for schedule(static) reduction(+ : ones)
  for (int64_t i = 0; i < n; ++i) ones += bits_[i];
  return ones;
}

uint64_t CroppedSumEstimator::ones_count_serial() const {
  uint64_t ones = 0;
  for (uint8_t b : bits_) ones += b;
  return ones;
}

double CroppedSumEstimator::estimate() const {
  const double ones = static_cast<double>(ones_count());
  return (ones - static_cast<double>(h_) / 2.0) * 4.0 *
         static_cast<double>(tau_) / eps_;
}

double CroppedSumEstimator::deviation_bound(double alpha) const {
  if (!(alpha > 0.0)) throw std::invalid_argument("confidence alpha must be > 0");
  return 4.0 * alpha * static_cast<double>(tau_) *
         std::sqrt(static_cast<double>(h_)) / eps_;
}

void CroppedSumEstimator::append_payload(std::vector<unsigned char>& out) const {
  PayloadWriter w;
  w.put_u64(h_);
  w.put_u64(tau_);
  w.put_f64(eps_);
  for (uint32_t c : counters_) w.put_u32(c);
  // bits packed 8 per byte
  uint8_t acc = 0;
  for (uint64_t i = 0; i < h_; ++i) {
    acc |= static_cast<uint8_t>((bits_[i] & 1) << (i % 8));
    if (i % 8 == 7) {
      w.put_u8(acc);
      acc = 0;
    }
  }
  if (h_ % 8 != 0) w.put_u8(acc);
  out.insert(out.end(), w.bytes().begin(), w.bytes().end());
}

CroppedSumEstimator CroppedSumEstimator::from_payload(const unsigned char* data,
                                                      size_t len,
                                                      size_t* consumed,
                                                      uint64_t continuation_seed) {
  PayloadReader r(data, len);
  CroppedSumEstimator est;
  est.h_ = r.get_u64();
  est.tau_ = r.get_u64();
  est.eps_ = r.get_f64();
  validate_params(est.h_, est.tau_, est.eps_);
  est.seed_ = continuation_seed;
  est.counters_.resize(est.h_);
  for (uint64_t i = 0; i < est.h_; ++i) {
    est.counters_[i] = r.get_u32();
    if (est.counters_[i] >= est.tau_) {
      throw std::runtime_error("cropped sum snapshot: counter out of range");
    }
  }
  est.bits_.resize(est.h_);
  const uint64_t packed = (est.h_ + 7) / 8;
  for (uint64_t b = 0; b < packed; ++b) {
    const uint8_t byte = r.get_u8();
    for (uint64_t k = 0; k < 8 && b * 8 + k < est.h_; ++k) {
      est.bits_[b * 8 + k] = (byte >> k) & 1;
    }
  }
  // Continuation redraws start from a fresh cursor under the new key; the
  // redraw distribution is unchanged (draws are iid).
  est.draws_.assign(est.h_, 0);
  *consumed = len - r.remaining();
  return est;
}

std::vector<unsigned char> CroppedSumEstimator::snapshot() const {
  std::vector<unsigned char> payload;
  append_payload(payload);
  return wrap_snapshot(PayloadKind::kCroppedSum, payload);
}

CroppedSumEstimator CroppedSumEstimator::restore(
    const std::vector<unsigned char>& bytes, uint64_t continuation_seed) {
  const std::vector<unsigned char> payload =
      unwrap_snapshot(bytes, PayloadKind::kCroppedSum);
  size_t consumed = 0;
  CroppedSumEstimator est = from_payload(payload.data(), payload.size(),
                                         &consumed, continuation_seed);
  if (consumed != payload.size()) {
    throw std::runtime_error("cropped sum snapshot has trailing bytes");
  }
  return est;
}

}  // namespace pansketch
