#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pansketch/cropped_sum.hpp"
#include "pansketch/rng.hpp"
#include "pansketch/stream.hpp"

using namespace pansketch;

namespace {

// Full observable state comparison: counters, bits and the derived estimate.
bool same_state(const CroppedSumEstimator& a, const CroppedSumEstimator& b) {
  if (a.h() != b.h() || a.tau() != b.tau() || a.eps() != b.eps()) return false;
  for (uint64_t i = 0; i < a.h(); ++i) {
    if (a.counter(i) != b.counter(i)) return false;
    if (a.bit(i) != b.bit(i)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("construction: counter range, tau=1 pinning, determinism") {
  CroppedSumEstimator est(1000, 7, 0.5, 99);
  for (uint64_t i = 0; i < 1000; ++i) CHECK(est.counter(i) < 7);

  CroppedSumEstimator unit(64, 1, 0.5, 3);
  for (uint64_t i = 0; i < 64; ++i) CHECK(unit.counter(i) == 0);
  unit.update(5, 12);
  CHECK(unit.counter(5) == 0);  // modulus 1 never leaves zero

  CroppedSumEstimator a(256, 5, 0.5, 42);
  CroppedSumEstimator b(256, 5, 0.5, 42);
  CHECK(same_state(a, b));
  CroppedSumEstimator c(256, 5, 0.5, 43);
  CHECK_FALSE(same_state(a, c));
}

TEST_CASE("construction validates parameters") {
  CHECK_THROWS_AS(CroppedSumEstimator(0, 3, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(CroppedSumEstimator(8, 0, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(CroppedSumEstimator(8, 3, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(CroppedSumEstimator(8, 3, 2.0, 1), std::invalid_argument);
}

TEST_CASE("initial bits are fair coins") {
  const uint64_t h = 100000;
  CroppedSumEstimator est(h, 4, 0.5, 7);
  const double frac = static_cast<double>(est.ones_count()) / h;
  // Binomial(h, 1/2): 3 sigma = 3 * sqrt(0.25/h) ~ 0.0047.
  CHECK(std::fabs(frac - 0.5) < 3.0 * std::sqrt(0.25 / h));
}

TEST_CASE("initial counters are uniform over [0, tau)") {
  const uint64_t h = 100000;
  const uint64_t tau = 8;
  CroppedSumEstimator est(h, tau, 0.5, 12345);
  std::vector<uint64_t> hist(tau, 0);
  for (uint64_t i = 0; i < h; ++i) ++hist[est.counter(i)];
  const double expect = static_cast<double>(h) / tau;
  double chi2 = 0.0;
  for (uint64_t v = 0; v < tau; ++v) {
    const double d = hist[v] - expect;
    chi2 += d * d / expect;
  }
  // 7 degrees of freedom; 24.32 is the p = 0.001 cut, frozen for this seed.
  CHECK(chi2 < 24.32);
}

TEST_CASE("wrap rule: counter arithmetic across the modulus") {
  CroppedSumEstimator est(64, 3, 0.5, 9);

  // An item whose counter sits at 2: one arrival wraps it to 0.
  uint64_t at2 = 64;
  for (uint64_t i = 0; i < 64; ++i)
    if (est.counter(i) == 2) {
      at2 = i;
      break;
    }
  REQUIRE(at2 < 64);
  est.update(at2, 1);
  CHECK(est.counter(at2) == 0);

  // A fresh counter at 0 taking delta 7 crosses two wraps, ending at 1.
  uint64_t at0 = 64;
  for (uint64_t i = 0; i < 64; ++i)
    if (est.counter(i) == 0 && i != at2) {
      at0 = i;
      break;
    }
  REQUIRE(at0 < 64);
  est.update(at0, 7);
  CHECK(est.counter(at0) == 1);
}

TEST_CASE("bulk deltas behave exactly like unit arrivals") {
  CroppedSumEstimator bulk(128, 5, 0.6, 1001);
  CroppedSumEstimator units(128, 5, 0.6, 1001);
  const uint64_t items[] = {3, 77, 3, 120, 9};
  const int64_t deltas[] = {13, 2, 4, 25, 1};
  for (int u = 0; u < 5; ++u) {
    bulk.update(items[u], deltas[u]);
    for (int64_t k = 0; k < deltas[u]; ++k) units.update(items[u], 1);
  }
  CHECK(same_state(bulk, units));
  CHECK(bulk.estimate() == units.estimate());
}

TEST_CASE("update rejects turnstile input and out-of-range items") {
  CroppedSumEstimator est(16, 3, 0.5, 4);
  CHECK_THROWS_AS(est.update(2, -1), std::invalid_argument);
  CHECK_THROWS_AS(est.update(16, 1), std::out_of_range);
  // Zero delta is a no-op.
  CroppedSumEstimator twin(16, 3, 0.5, 4);
  est.update(2, 0);
  CHECK(same_state(est, twin));
}

TEST_CASE("estimate is the debiased ones count") {
  CroppedSumEstimator est(512, 6, 0.7, 8);
  StreamGen gen;
  gen.kind = StreamGen::Kind::kZipf;
  gen.m = 512;
  gen.length = 2000;
  gen.zipf_s = 1.1;
  gen.seed = 6;
  est.ingest(generate(gen));
  const double o = static_cast<double>(est.ones_count());
  CHECK(est.estimate() ==
        doctest::Approx((o - 256.0) * 4.0 * 6.0 / 0.7).epsilon(1e-12));
  CHECK(est.ones_count() == est.ones_count_serial());

  // All-zero bit vector pins the formula's low extreme at -2*h*tau/eps.
  for (uint64_t seed = 0;; ++seed) {
    CroppedSumEstimator tiny(1, 5, 0.5, seed);
    if (tiny.ones_count() == 0) {
      CHECK(tiny.estimate() == doctest::Approx(-2.0 * 5.0 / 0.5));
      break;
    }
    REQUIRE(seed < 100);  // a fair coin cannot dodge zero for 100 seeds
  }
}

TEST_CASE("parallel ingest matches serial and per-update application") {
  StreamGen gen;
  gen.kind = StreamGen::Kind::kUniform;
  gen.m = 300;
  gen.length = 5000;
  gen.seed = 31;
  const Stream stream = generate(gen);

  CroppedSumEstimator par(300, 4, 0.5, 17);
  CroppedSumEstimator ser(300, 4, 0.5, 17);
  CroppedSumEstimator upd(300, 4, 0.5, 17);
  par.ingest(stream);
  ser.ingest_serial(stream);
  for (const Update& u : stream) upd.update(u);
  CHECK(same_state(par, ser));
  CHECK(same_state(par, upd));
}

TEST_CASE("deviation bound formula") {
  CroppedSumEstimator est(1000, 8, 0.5, 1);
  CHECK(est.deviation_bound(2.0) ==
        doctest::Approx(4.0 * 2.0 * 8.0 * std::sqrt(1000.0) / 0.5));
  CHECK_THROWS_AS(est.deviation_bound(0.0), std::invalid_argument);
}

TEST_CASE("snapshot round-trip preserves the pan-private state") {
  CroppedSumEstimator est(128, 5, 0.6, 2002);
  StreamGen gen;
  gen.kind = StreamGen::Kind::kUniform;
  gen.m = 128;
  gen.length = 400;
  gen.seed = 8;
  est.ingest(generate(gen));

  const std::vector<unsigned char> snap = est.snapshot();
  CroppedSumEstimator back = CroppedSumEstimator::restore(snap, 777);
  CHECK(same_state(est, back));
  CHECK(back.estimate() == est.estimate());

  // The restored copy keeps evolving correctly under further updates.
  back.update(3, 11);
  CHECK(back.counter(3) == (est.counter(3) + 11) % 5);

  std::vector<unsigned char> bad = snap;
  bad[bad.size() / 2] ^= 0x08;
  CHECK_THROWS_AS(CroppedSumEstimator::restore(bad, 777), std::runtime_error);
}

TEST_CASE("payload-level packing round-trips inside a larger buffer") {
  CroppedSumEstimator est(40, 3, 0.4, 55);
  est.update(7, 9);
  std::vector<unsigned char> buf = {0xEE, 0xEE};  // leading junk to skip
  est.append_payload(buf);
  size_t consumed = 0;
  CroppedSumEstimator back = CroppedSumEstimator::from_payload(
      buf.data() + 2, buf.size() - 2, &consumed, 101);
  CHECK(consumed == buf.size() - 2);
  CHECK(same_state(est, back));
}

TEST_CASE("tau=1 estimates the distinct count of binary streams") {
  const uint64_t h = 200;
  const uint64_t d = 80;
  const double eps = 0.5;
  StreamGen gen;
  gen.kind = StreamGen::Kind::kBinarySupport;
  gen.m = h;
  gen.d = d;

  const int runs = 2000;
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < runs; ++t) {
    gen.seed = derive_seed(4040, t);
    CroppedSumEstimator est(h, 1, eps, derive_seed(5050, t));
    est.ingest(generate(gen));
    const double e = est.estimate();
    sum += e;
    sumsq += e * e;
  }
  const double mean = sum / runs;
  const double var = (sumsq - runs * mean * mean) / (runs - 1);
  const double se = std::sqrt(var / runs);
  CHECK(std::fabs(mean - static_cast<double>(d)) < 3.0 * se);
}

TEST_CASE("estimates are unbiased for the exact cropped sum") {
  const uint64_t h = 500;
  const uint64_t tau = 4;
  const double eps = 0.8;
  // Fixed stream: 100 items with 2 arrivals, 30 items with 9 (cropped at 4).
  Stream stream;
  for (uint64_t i = 0; i < 100; ++i) stream.push_back(Update{i, 2});
  for (uint64_t i = 100; i < 130; ++i) stream.push_back(Update{i, 9});
  const StateVector state = materialize(h, StreamMode::kCashRegister, stream);
  const double truth = cropped_moment(state, 1.0, tau);  // 200 + 120 = 320
  CHECK(truth == doctest::Approx(320.0));

  const int runs = 3000;
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < runs; ++t) {
    CroppedSumEstimator est(h, tau, eps, derive_seed(6060, t));
    est.ingest(stream);
    const double e = est.estimate();
    sum += e;
    sumsq += e * e;
  }
  const double mean = sum / runs;
  const double var = (sumsq - runs * mean * mean) / (runs - 1);
  CHECK(std::fabs(mean - truth) < 3.0 * std::sqrt(var / runs));
}
