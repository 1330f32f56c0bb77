#pragma once

// Pan-private cropped first moment T1(tau) = sum_i min(a_i, tau) for
// cash-register streams. Per item the state is a counter mod tau (initialized
// uniformly) and one bit (initialized fair). Every time an item's counter
// wraps, its bit is redrawn with success probability 1/2 + eps/4. An item
// with a_i arrivals wraps a_i/tau times in expectation thanks to the uniform
// counter start, so P[bit=1] = 1/2 + eps * min(a_i, tau) / (4 * tau) and the
// debiased count of ones estimates T1.

#include <cstdint>
#include <vector>

#include "pansketch/stream.hpp"

namespace pansketch {

class CroppedSumEstimator {
 public:
  // universe size h >= 1, modulus tau >= 1, privacy parameter eps in (0, 2).
  CroppedSumEstimator(uint64_t h, uint64_t tau, double eps, uint64_t seed);

  // Processes delta >= 1 unit arrivals of item (delta = 0 is a no-op). The
  // bit is redrawn once per wrap crossed, exactly as if the units arrived one
  // at a time.
  void update(const Update& u);
  void update(uint64_t item, int64_t delta) { update(Update{item, delta}); }

  // Whole-stream ingestion. Items evolve independently, so the OpenMP kernel
  // aggregates per-item totals and replays them item-parallel; results are
  // bit-identical to sequential updates.
  void ingest(const Stream& stream);
  void ingest_serial(const Stream& stream);

  // (ones - h/2) * 4 * tau / eps. Pure.
  double estimate() const;

  uint64_t ones_count() const;
  uint64_t ones_count_serial() const;

  // High-probability bound 4 * alpha * tau * sqrt(h) / eps on
  // |estimate - T1(tau)|, violated with probability at most 2 * exp(-2*alpha)
  // for confidence parameter alpha >= 1 (Hoeffding on the ones count).
  double deviation_bound(double alpha) const;

  double privacy_spent() const { return eps_; }

  uint64_t h() const { return h_; }
  uint64_t tau() const { return tau_; }
  double eps() const { return eps_; }
  uint8_t bit(uint64_t item) const { return bits_[item]; }
  uint32_t counter(uint64_t item) const { return counters_[item]; }

  // Snapshot carries only the pan-private state (h, tau, eps, counters,
  // bits); the redraw cursor is deliberately not part of it. restore() keys
  // continuation randomness from continuation_seed.
  std::vector<unsigned char> snapshot() const;
  static CroppedSumEstimator restore(const std::vector<unsigned char>& bytes,
                                     uint64_t continuation_seed);

  // Payload-level (un)packing shared with the heavy-hitter container.
  void append_payload(std::vector<unsigned char>& out) const;
  static CroppedSumEstimator from_payload(const unsigned char* data,
                                          size_t len, size_t* consumed,
                                          uint64_t continuation_seed);

 private:
  CroppedSumEstimator() = default;

  uint8_t draw_bit(uint64_t item);

  uint64_t h_ = 0;
  uint64_t tau_ = 0;
  double eps_ = 0.0;
  uint64_t seed_ = 0;
  std::vector<uint32_t> counters_;
  std::vector<uint8_t> bits_;
  // In-memory redraw cursors (draws consumed per item). Reproducibility
  // bookkeeping only: never serialized, never part of the private state.
  std::vector<uint32_t> draws_;
};

}  // namespace pansketch
