#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "pansketch/rng.hpp"
#include "pansketch/snapshot.hpp"
#include "pansketch/stable.hpp"

using namespace pansketch;

TEST_CASE("stable_variate closed-form oracle points") {
  // theta = 0: sin(p*theta) = 0 regardless of p.
  CHECK(stable_variate(0.5, 0.123, 1.0) == 0.0);
  CHECK(stable_variate(0.5, 0.9, 0.3) == 0.0);

  // p = 1 is the Cauchy inverse CDF: tan(pi*(r1 - 1/2)).
  CHECK(stable_variate(0.75, 0.2, 1.0) == doctest::Approx(1.0).epsilon(1e-12));

  // Hand evaluation at r1 = 3/4, r2 = 1/e, p = 1/2:
  //   theta = pi/4, w = 1, value = sin(pi/8) cos(pi/8) / cos^2(pi/4)
  //                              = (1/2) sin(pi/4) / (1/2) = sqrt(2)/2.
  const double expect = std::sqrt(2.0) / 2.0;
  CHECK(stable_variate(0.75, std::exp(-1.0), 0.5) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("stable_variate reduces to tan at p = 1") {
  for (int rep = 0; rep < 10000; ++rep) {
    const double r1 = uniform01(11, 2 * rep);
    const double r2 = uniform01(11, 2 * rep + 1);
    const double got = stable_variate(r1, r2, 1.0);
    const double want = std::tan(std::numbers::pi * (r1 - 0.5));
    CHECK(std::fabs(got - want) <= 1e-12 * std::max(1.0, std::fabs(want)));
  }
}

TEST_CASE("stable_variate is finite for any input after clamping") {
  // Fuzz across the open interval plus the out-of-range edges the clamp
  // guards (0 and 1 would otherwise blow up through ln or cos).
  const double edges[] = {0.0, 1.0, 1e-300, 1.0 - 1e-16, 0.5, -3.0, 4.0};
  for (double r1 : edges)
    for (double r2 : edges)
      for (double p : {0.05, 0.5, 0.99, 1.0})
        CHECK(std::isfinite(stable_variate(r1, r2, p)));

  for (int rep = 0; rep < 1000000; ++rep) {
    const double r1 = uniform01(13, 2 * rep);
    const double r2 = uniform01(13, 2 * rep + 1);
    const double p = 0.01 + 0.99 * uniform01(14, rep);
    const double v = stable_variate(r1, r2, p);
    if (!std::isfinite(v)) {
      CAPTURE(r1);
      CAPTURE(r2);
      CAPTURE(p);
      REQUIRE(std::isfinite(v));
    }
  }
}

TEST_CASE("x_entry is pure and varies across items") {
  StableParams params;
  params.p = 0.5;
  params.r = 8;
  params.m = 100;
  params.master_seed = 42;
  CHECK(x_entry(params, 5, 3) == x_entry(params, 5, 3));
  CHECK(x_entry(params, 5, 3) != x_entry(params, 6, 3));
  CHECK(x_entry(params, 5, 3) != x_entry(params, 5, 4));
}

TEST_CASE("x_entry at p = 1 matches Cauchy quartiles") {
  StableParams params;
  params.p = 1.0;
  params.r = 1;
  params.m = 1000000;
  params.master_seed = 2024;
  const uint64_t n = 1000000;
  std::vector<double> draws(n);
  for (uint64_t i = 0; i < n; ++i) draws[i] = x_entry(params, i, 0);
  std::nth_element(draws.begin(), draws.begin() + n / 4, draws.end());
  const double q25 = draws[n / 4];
  std::nth_element(draws.begin(), draws.begin() + 3 * n / 4, draws.end());
  const double q75 = draws[3 * n / 4];
  // Standard Cauchy quartiles are -1 and +1.
  CHECK(q25 == doctest::Approx(-1.0).epsilon(0.01));
  CHECK(q75 == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("calibrate: sfp at p = 1 recovers the analytic Cauchy median") {
  StableParams params;
  params.p = 1.0;
  params.r = 1;
  params.m = 1;
  params.master_seed = 5;
  const Calibration cal = calibrate(params, 10000000);
  // median |Cauchy| = tan(pi/4) = 1.
  CHECK(cal.sfp == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("calibrate: row norms dominate every matrix entry") {
  StableParams params;
  params.p = 0.5;
  params.r = 8;
  params.m = 50;
  params.master_seed = 77;
  const Calibration cal = calibrate(params, 100000);
  REQUIRE(cal.row_norms.size() == 8);
  for (uint32_t j = 0; j < 8; ++j) {
    double max_seen = 0.0;
    for (uint64_t i = 0; i < 50; ++i) {
      const double v = std::fabs(x_entry(params, i, j));
      CHECK(cal.row_norms[j] >= v);
      max_seen = std::max(max_seen, v);
    }
    CHECK(cal.row_norms[j] == max_seen);  // max is attained, not padded
  }
  CHECK(cal.max_row_norm() ==
        *std::max_element(cal.row_norms.begin(), cal.row_norms.end()));
}

TEST_CASE("calibrate is deterministic and matches the serial reference") {
  StableParams params;
  params.p = 0.25;
  params.r = 16;
  params.m = 500;
  params.master_seed = 31337;
  const Calibration a = calibrate(params, 100000);
  const Calibration b = calibrate(params, 100000);
  const Calibration c = calibrate_serial(params, 100000);
  CHECK(a.sfp == b.sfp);
  CHECK(a.sfp == c.sfp);
  REQUIRE(a.row_norms.size() == c.row_norms.size());
  for (size_t j = 0; j < a.row_norms.size(); ++j) {
    CHECK(a.row_norms[j] == b.row_norms[j]);
    CHECK(a.row_norms[j] == c.row_norms[j]);
  }
}

TEST_CASE("calibrate rejects sample sizes too small to certify sfp") {
  StableParams params;
  params.p = 0.5;
  params.r = 2;
  params.m = 10;
  params.master_seed = 1;
  CHECK_THROWS_AS(calibrate(params, 99999), std::invalid_argument);
}

TEST_CASE("StableParams validation") {
  StableParams params;
  params.p = 0.5;
  params.r = 2;
  params.m = 10;
  CHECK_NOTHROW(params.validate());
  params.p = 0.0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params.p = 1.5;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params.p = 0.5;
  params.r = 0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}

TEST_CASE("calibration serialization round-trips bit-exactly") {
  StableParams params;
  params.p = 0.125;
  params.r = 4;
  params.m = 64;
  params.master_seed = 0xABCDEF;
  const Calibration cal = calibrate(params, 100000);

  const std::vector<unsigned char> bytes = serialize(cal);
  const Calibration back = deserialize_calibration(bytes);
  CHECK(back.params.p == cal.params.p);
  CHECK(back.params.r == cal.params.r);
  CHECK(back.params.m == cal.params.m);
  CHECK(back.params.master_seed == cal.params.master_seed);
  CHECK(back.n_samples == cal.n_samples);
  CHECK(back.sfp == cal.sfp);  // raw IEEE bits, so == is the right check
  REQUIRE(back.row_norms.size() == cal.row_norms.size());
  for (size_t j = 0; j < cal.row_norms.size(); ++j)
    CHECK(back.row_norms[j] == cal.row_norms[j]);

  // Corrupting any byte must fail the checksum, not deserialize garbage.
  std::vector<unsigned char> bad = bytes;
  bad[bad.size() / 2] ^= 0x40;
  CHECK_THROWS_AS(deserialize_calibration(bad), std::runtime_error);
}

TEST_CASE("calibration file cache round-trips") {
  StableParams params;
  params.p = 0.4;
  params.r = 3;
  params.m = 32;
  params.master_seed = 909;
  const Calibration cal = calibrate(params, 100000);
  const std::string path = "test_calibration_cache.bin";
  save_calibration(path, cal);
  const Calibration back = load_calibration(path);
  CHECK(back.sfp == cal.sfp);
  CHECK(back.row_norms == cal.row_norms);
  std::remove(path.c_str());
  CHECK_THROWS(load_calibration(path));  // gone now
}

TEST_CASE("lower_median picks the ceil(n/2)-th order statistic") {
  std::vector<double> odd = {3.0, 1.0, 2.0};
  CHECK(lower_median(odd) == 2.0);
  std::vector<double> even = {4.0, 1.0, 3.0, 2.0};
  CHECK(lower_median(even) == 2.0);  // lower of the middle pair
  std::vector<double> one = {7.0};
  CHECK(lower_median(one) == 7.0);
  std::vector<double> empty;
  CHECK_THROWS_AS(lower_median(empty), std::invalid_argument);
}
