#pragma once

// Pan-private heavy-hitter count HH(k) = |{i : a_i >= F1/k}| for
// cash-register streams. Items are hashed into a reduced universe of h
// buckets; two cropped-sum estimators at thresholds F1/k and F1/(ck) run over
// the buckets, and the difference of their estimates, normalized by
// (F1/k - F1/(ck)), counts buckets whose mass clears the high threshold.
// Known-F1 mode uses the promised F1 directly; otherwise an ensemble of
// members at projected totals F1' in {1, 2, 4, ..., >= U0} is maintained and
// queries are answered by the member at 2^ceil(log2 F1) using the publicly
// tracked running total.

#include <cstdint>
#include <optional>
#include <vector>

#include "pansketch/cropped_sum.hpp"
#include "pansketch/stream.hpp"

namespace pansketch {

// Pairwise-independent hash [0, 2^61-1) -> [0, h): ((a*x + b) mod p) mod h
// with p = 2^61 - 1, a and b drawn from the key.
class PairwiseHash {
 public:
  PairwiseHash(uint64_t key, uint64_t h);
  uint64_t operator()(uint64_t x) const;
  uint64_t buckets() const { return h_; }
  uint64_t a() const { return a_; }
  uint64_t b() const { return b_; }

 private:
  uint64_t a_ = 1;
  uint64_t b_ = 0;
  uint64_t h_ = 1;
};

// Smallest bucket count satisfying both analysis requirements:
// h >= k/(beta*delta) (survival of true heavy hitters) and
// h >= (sqrt(2)+2)*c*k (no spurious heavy hitters from hashed tails).
uint64_t choose_h(double k, double c, double beta, double delta);

struct HHConfig {
  double k = 2.0;        // heavy-hitter level, >= 1
  double c = 2.0;        // threshold separation, > 1
  double beta = 0.5;     // relative undercount slack, in (0, 1]
  double delta = 0.1;    // failure probability, in (0, 1)
  double priv_eps = 0.5; // per cropped-sum privacy parameter
  uint64_t h = 0;        // bucket count; 0 = choose_h(k, c, beta, delta)
  uint64_t seed = 0;     // estimator seeds (and hash key unless overridden)
  std::optional<uint64_t> hash_key;  // explicit hash key override
  // Exactly one of the two below: a promised final total F1, or an upper
  // bound U0 that switches on the doubling ensemble.
  std::optional<double> f1;
  std::optional<uint64_t> u0;

  void validate() const;
};

class HHEstimator {
 public:
  explicit HHEstimator(HHConfig config);

  void update(const Update& u);
  // Fan-out driver: ensemble members are independent, so they ingest the
  // hashed stream member-parallel; bit-identical to the serial path.
  void ingest(const Stream& stream);
  void ingest_serial(const Stream& stream);

  // (x1 - x2) / (F1/k - F1/(ck)) for the selected member. Throws
  // std::domain_error when the relevant F1 is not positive.
  double estimate() const;

  // Additive deviation envelope of the noiseless-core comparison:
  // 4 * (c+1) * alpha * sqrt(h) / ((c-1) * eps).
  double deviation_bound(double alpha) const;

  // 2 * priv_eps per member pair; ensemble mode pays for every member.
  double privacy_spent() const;

  double tracked_f1() const { return f1_running_; }
  const PairwiseHash& hash() const { return hash_; }
  size_t member_count() const { return members_.size(); }

  std::vector<unsigned char> snapshot() const;
  static HHEstimator restore(HHConfig config,
                             const std::vector<unsigned char>& bytes,
                             uint64_t continuation_seed);

 private:
  struct Member {
    double projected_f1 = 0.0;
    CroppedSumEstimator high;
    CroppedSumEstimator low;
  };

  static Member make_member(const HHConfig& config, double projected_f1,
                            uint64_t member_index);
  double combine(const Member& member) const;

  HHConfig config_;
  PairwiseHash hash_;
  std::vector<Member> members_;  // one entry in known-F1 mode
  double f1_running_ = 0.0;      // public running total (cash-register sum)
};

}  // namespace pansketch
