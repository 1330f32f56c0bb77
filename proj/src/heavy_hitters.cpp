#include "pansketch/heavy_hitters.hpp"

#include <cmath>
#include <stdexcept>

#include "pansketch/rng.hpp"
#include "pansketch/snapshot.hpp"

namespace pansketch {

namespace {
constexpr uint64_t kMersenne61 = (1ULL << 61) - 1;

uint64_t mulmod61(uint64_t x, uint64_t y) {
  const unsigned __int128 prod = static_cast<unsigned __int128>(x) * y;
  uint64_t lo = static_cast<uint64_t>(prod & kMersenne61);
  uint64_t hi = static_cast<uint64_t>(prod >> 61);
  uint64_t sum = lo + hi;
  if (sum >= kMersenne61) sum -= kMersenne61;
  return sum;
}
}  // namespace

PairwiseHash::PairwiseHash(uint64_t key, uint64_t h) : h_(h) {
  if (h == 0) throw std::invalid_argument("hash needs at least one bucket");
  a_ = 1 + uniform_below(key, 0, kMersenne61 - 1);  // in [1, p)
  b_ = uniform_below(key, 1, kMersenne61);          // in [0, p)
}

uint64_t PairwiseHash::operator()(uint64_t x) const {
  uint64_t v = mulmod61(a_, x % kMersenne61);
  v += b_;
  if (v >= kMersenne61) v -= kMersenne61;
  return v % h_;
}

uint64_t choose_h(double k, double c, double beta, double delta) {
  if (!(k >= 1.0)) throw std::invalid_argument("choose_h needs k >= 1");
  if (!(c > 1.0)) throw std::invalid_argument("choose_h needs c > 1");
  if (!(beta > 0.0) || beta > 1.0) {
    throw std::invalid_argument("choose_h needs beta in (0, 1]");
  }
  if (!(delta > 0.0) || delta >= 1.0) {
    throw std::invalid_argument("choose_h needs delta in (0, 1)");
  }
  const double survival = k / (beta * delta);
  const double spurious = (std::sqrt(2.0) + 2.0) * c * k;
  return static_cast<uint64_t>(std::ceil(std::max(survival, spurious)));
}

void HHConfig::validate() const {
  if (!(k >= 1.0)) throw std::invalid_argument("heavy hitters need k >= 1");
  if (!(c > 1.0)) throw std::invalid_argument("heavy hitters need c > 1");
  if (!(beta > 0.0) || beta > 1.0) {
    throw std::invalid_argument("beta must be in (0, 1]");
  }
  if (!(delta > 0.0) || delta >= 1.0) {
    throw std::invalid_argument("delta must be in (0, 1)");
  }
  if (!(priv_eps > 0.0) || priv_eps >= 2.0) {
    throw std::invalid_argument("priv_eps must be in (0, 2)");
  }
  if (f1.has_value() == u0.has_value()) {
    throw std::invalid_argument(
        "exactly one of a known F1 or an ensemble bound U0 is required");
  }
  if (f1 && !(*f1 > 0.0)) throw std::invalid_argument("known F1 must be positive");
  if (u0 && *u0 == 0) throw std::invalid_argument("ensemble bound U0 must be >= 1");
}

HHEstimator::Member HHEstimator::make_member(const HHConfig& config,
                                             double projected_f1,
                                             uint64_t member_index) {
  const uint64_t h =
      config.h != 0 ? config.h
                    : choose_h(config.k, config.c, config.beta, config.delta);
  const uint64_t base = derive_seed(config.seed, kSaltInit) ^
                        (member_index * 0x9E3779B97F4A7C15ULL);
  const uint64_t tau_high =
      static_cast<uint64_t>(std::ceil(projected_f1 / config.k));
  const uint64_t tau_low =
      static_cast<uint64_t>(std::ceil(projected_f1 / (config.c * config.k)));
  return Member{projected_f1,
                CroppedSumEstimator(h, std::max<uint64_t>(tau_high, 1),
                                    config.priv_eps, derive_seed(base, kSaltLeft)),
                CroppedSumEstimator(h, std::max<uint64_t>(tau_low, 1),
                                    config.priv_eps, derive_seed(base, kSaltRight))};
}

HHEstimator::HHEstimator(HHConfig config)
    : config_(std::move(config)),
      hash_(config_.hash_key ? *config_.hash_key
                             : derive_seed(config_.seed, kSaltHashKey),
            config_.h != 0
                ? config_.h
                : choose_h(config_.k, config_.c, config_.beta, config_.delta)) {
  config_.validate();
  config_.h = hash_.buckets();
  if (config_.f1) {
    members_.push_back(make_member(config_, *config_.f1, 0));
  } else {
    // Projected totals 1, 2, 4, ... covering U0: floor(log2(U0)) + 1 members,
    // plus one more when U0 is not a power of two.
    uint64_t count = 1;
    while ((1ULL << (count - 1)) < *config_.u0) ++count;
    members_.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
      members_.push_back(
          make_member(config_, static_cast<double>(1ULL << i), i));
    }
  }
}

void HHEstimator::update(const Update& u) {
  if (u.delta == 0) return;
  if (u.delta < 0) {
    throw std::invalid_argument("heavy hitters are cash-register only");
  }
  const Update hashed{hash_(u.item), u.delta};
  for (Member& member : members_) {
    member.high.update(hashed);
    member.low.update(hashed);
  }
  f1_running_ += static_cast<double>(u.delta);
}

void HHEstimator::ingest(const Stream& stream) {
  Stream hashed;
  hashed.reserve(stream.size());
  double mass = 0.0;
  for (const Update& u : stream) {
    if (u.delta == 0) continue;
    if (u.delta < 0) {
      throw std::invalid_argument("heavy hitters are cash-register only");
    }
    hashed.push_back({hash_(u.item), u.delta});
    mass += static_cast<double>(u.delta);
  }
  const int64_t n = static_cast<int64_t>(members_.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int64_t i = 0; i < n; ++i) {
    members_[i].high.ingest_serial(hashed);
    members_[i].low.ingest_serial(hashed);
  }
  f1_running_ += mass;
}

void HHEstimator::ingest_serial(const Stream& stream) {
  for (const Update& u : stream) update(u);
}

double HHEstimator::combine(const Member& member) const {
  const double f1 = member.projected_f1;
  const double spread = f1 / config_.k - f1 / (config_.c * config_.k);
  if (!(spread > 0.0)) {
    throw std::domain_error("heavy hitter thresholds collapsed (F1 too small)");
  }
  return (member.high.estimate() - member.low.estimate()) / spread;
}

double HHEstimator::estimate() const {
  if (config_.f1) return combine(members_[0]);
  if (!(f1_running_ > 0.0)) {
    throw std::domain_error("heavy hitter count undefined at F1 = 0");
  }
  // Member whose projected total is 2^ceil(log2 F1).
  uint64_t idx = 0;
  while (idx + 1 < members_.size() &&
         members_[idx].projected_f1 < f1_running_) {
    ++idx;
  }
  return combine(members_[idx]);
}

double HHEstimator::deviation_bound(double alpha) const {
  if (!(alpha > 0.0)) throw std::invalid_argument("confidence alpha must be > 0");
  return 4.0 * (config_.c + 1.0) * alpha *
         std::sqrt(static_cast<double>(config_.h)) /
         ((config_.c - 1.0) * config_.priv_eps);
}

double HHEstimator::privacy_spent() const {
  return 2.0 * config_.priv_eps * static_cast<double>(members_.size());
}

std::vector<unsigned char> HHEstimator::snapshot() const {
  PayloadWriter w;
  w.put_f64(config_.k);
  w.put_f64(config_.c);
  w.put_f64(config_.beta);
  w.put_f64(config_.delta);
  w.put_f64(config_.priv_eps);
  w.put_u64(config_.h);
  w.put_u64(hash_.a());
  w.put_u64(hash_.b());
  w.put_f64(f1_running_);
  w.put_u64(members_.size());
  std::vector<unsigned char> body = w.bytes();
  for (const Member& member : members_) {
    PayloadWriter head;
    head.put_f64(member.projected_f1);
    body.insert(body.end(), head.bytes().begin(), head.bytes().end());
    member.high.append_payload(body);
    member.low.append_payload(body);
  }
  return wrap_snapshot(PayloadKind::kHeavyHitters, body);
}

HHEstimator HHEstimator::restore(HHConfig config,
                                 const std::vector<unsigned char>& bytes,
                                 uint64_t continuation_seed) {
  const std::vector<unsigned char> payload =
      unwrap_snapshot(bytes, PayloadKind::kHeavyHitters);
  PayloadReader r(payload.data(), payload.size());
  const double k = r.get_f64();
  const double c = r.get_f64();
  const double beta = r.get_f64();
  const double delta = r.get_f64();
  const double priv_eps = r.get_f64();
  const uint64_t h = r.get_u64();
  const uint64_t hash_a = r.get_u64();
  const uint64_t hash_b = r.get_u64();
  const double f1_running = r.get_f64();
  const uint64_t member_count = r.get_u64();
  if (k != config.k || c != config.c || beta != config.beta ||
      delta != config.delta || priv_eps != config.priv_eps ||
      (config.h != 0 && h != config.h)) {
    throw std::runtime_error("snapshot does not match this heavy-hitter config");
  }
  config.h = h;
  HHEstimator est(std::move(config));
  if (est.hash_.a() != hash_a || est.hash_.b() != hash_b) {
    throw std::runtime_error(
        "heavy-hitter snapshot was taken under a different hash key");
  }
  if (member_count != est.members_.size()) {
    throw std::runtime_error("heavy-hitter snapshot member count mismatch");
  }
  est.f1_running_ = f1_running;
  const size_t header_len = 10 * 8;  // fields consumed above
  size_t offset = header_len;
  for (uint64_t i = 0; i < member_count; ++i) {
    PayloadReader head(payload.data() + offset, payload.size() - offset);
    const double projected = head.get_f64();
    offset += 8;
    if (projected != est.members_[i].projected_f1) {
      throw std::runtime_error("heavy-hitter snapshot member order mismatch");
    }
    const uint64_t member_seed =
        derive_seed(continuation_seed, kSaltRestore) ^ i;
    size_t consumed = 0;
    est.members_[i].high = CroppedSumEstimator::from_payload(
        payload.data() + offset, payload.size() - offset, &consumed,
        derive_seed(member_seed, kSaltLeft));
    offset += consumed;
    est.members_[i].low = CroppedSumEstimator::from_payload(
        payload.data() + offset, payload.size() - offset, &consumed,
        derive_seed(member_seed, kSaltRight));
    offset += consumed;
  }
  if (offset != payload.size()) {
    throw std::runtime_error("heavy-hitter snapshot has trailing bytes");
  }
  return est;
}

}  // namespace pansketch
