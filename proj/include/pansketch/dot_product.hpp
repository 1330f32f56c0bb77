#pragma once

// Pan-private cropped dot product (a . a')(tau) = sum_i min(a_i * a'_i, tau)
// over a pair of cash-register streams on a shared universe, and the cropped
// second moment T2(tau) as the self-paired special case. Each side runs the
// cropped-sum state machine with modulus sqrt(tau) (tau must be a perfect
// square); with o = #{i : b_i = b'_i = 1} and per-side one-counts o_a, o_b,
//
//   est = (o - o_a/2 - o_b/2 + m/4) * 16 * tau / eps^2
//
// is unbiased for sum_i min(a_i, sqrt(tau)) * min(a'_i, sqrt(tau)), which
// equals the cropped dot whenever per-item products do not straddle the crop.

#include <cstdint>
#include <vector>

#include "pansketch/cropped_sum.hpp"
#include "pansketch/stream.hpp"

namespace pansketch {

class DotProductEstimator {
 public:
  // universe size m >= 1, tau a positive perfect square, eps in (0, 2).
  DotProductEstimator(uint64_t m, uint64_t tau, double eps, uint64_t seed);

  void update_left(const Update& u) { left_.update(u); }
  void update_right(const Update& u) { right_.update(u); }
  void ingest_left(const Stream& s) { left_.ingest(s); }
  void ingest_right(const Stream& s) { right_.ingest(s); }

  double estimate() const;

  // 16 * alpha * tau * sqrt(m) / eps^2 * (1 + eps / (4 * sqrt(tau))).
  double deviation_bound(double alpha) const;

  // Both sides answer under intrusion: eps per side.
  double privacy_spent() const { return 2.0 * eps_; }

  uint64_t m() const { return m_; }
  uint64_t tau() const { return tau_; }
  const CroppedSumEstimator& left() const { return left_; }
  const CroppedSumEstimator& right() const { return right_; }

 private:
  uint64_t m_;
  uint64_t tau_;
  double eps_;
  CroppedSumEstimator left_;
  CroppedSumEstimator right_;
};

// Cropped second moment: feeds every update to both sides (independent
// randomness per side).
class T2Estimator {
 public:
  T2Estimator(uint64_t m, uint64_t tau, double eps, uint64_t seed)
      : inner_(m, tau, eps, seed) {}

  void update(const Update& u) {
    inner_.update_left(u);
    inner_.update_right(u);
  }
  void ingest(const Stream& s) {
    inner_.ingest_left(s);
    inner_.ingest_right(s);
  }

  double estimate() const { return inner_.estimate(); }
  double deviation_bound(double alpha) const { return inner_.deviation_bound(alpha); }
  double privacy_spent() const { return inner_.privacy_spent(); }

 private:
  DotProductEstimator inner_;
};

// Exact integer square root check; returns sqrt(tau) or throws.
uint64_t require_perfect_square(uint64_t tau);

}  // namespace pansketch
