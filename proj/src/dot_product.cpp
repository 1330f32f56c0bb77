#include "pansketch/dot_product.hpp"

#include <cmath>
#include <stdexcept>

#include "pansketch/rng.hpp"

namespace pansketch {

uint64_t require_perfect_square(uint64_t tau) {
  if (tau == 0) throw std::invalid_argument("crop threshold tau must be >= 1");
  const uint64_t root =
      static_cast<uint64_t>(std::llround(std::sqrt(static_cast<double>(tau))));
  for (uint64_t s : {root > 0 ? root - 1 : 0, root, root + 1}) {
    if (s != 0 && s * s == tau) return s;
  }
  throw std::invalid_argument("crop threshold tau must be a perfect square");
}

DotProductEstimator::DotProductEstimator(uint64_t m, uint64_t tau, double eps,
                                         uint64_t seed)
    : m_(m),
      tau_(tau),
      eps_(eps),
      left_(m, require_perfect_square(tau), eps, derive_seed(seed, kSaltLeft)),
      right_(m, require_perfect_square(tau), eps, derive_seed(seed, kSaltRight)) {}

double DotProductEstimator::estimate() const {
  uint64_t both = 0;
  for (uint64_t i = 0; i < m_; ++i) {
    both += static_cast<uint64_t>(left_.bit(i) & right_.bit(i));
  }
  const double o = static_cast<double>(both);
  const double oa = static_cast<double>(left_.ones_count_serial());
  const double ob = static_cast<double>(right_.ones_count_serial());
  const double md = static_cast<double>(m_);
  return (o - oa / 2.0 - ob / 2.0 + md / 4.0) * 16.0 *
         static_cast<double>(tau_) / (eps_ * eps_);
}

double DotProductEstimator::deviation_bound(double alpha) const {
  if (!(alpha > 0.0)) throw std::invalid_argument("confidence alpha must be > 0");
  const double tau = static_cast<double>(tau_);
  return 16.0 * alpha * tau * std::sqrt(static_cast<double>(m_)) /
         (eps_ * eps_) * (1.0 + eps_ / (4.0 * std::sqrt(tau)));
}

}  // namespace pansketch
