#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pansketch/snapshot.hpp"

using namespace pansketch;

TEST_CASE("payload writer/reader round-trip every field width") {
  PayloadWriter w;
  w.put_u8(0xAB);
  w.put_u16(0xBEEF);
  w.put_u32(0xDEADBEEFu);
  w.put_u64(0x0123456789ABCDEFull);
  w.put_f64(-0.0);
  w.put_f64(std::numeric_limits<double>::denorm_min());
  w.put_f64(1e308);
  const unsigned char raw[3] = {1, 2, 3};
  w.put_bytes(raw, 3);

  PayloadReader r(w.bytes().data(), w.bytes().size());
  CHECK(r.get_u8() == 0xAB);
  CHECK(r.get_u16() == 0xBEEF);
  CHECK(r.get_u32() == 0xDEADBEEFu);
  CHECK(r.get_u64() == 0x0123456789ABCDEFull);
  const double neg_zero = r.get_f64();
  CHECK(neg_zero == 0.0);
  CHECK(std::signbit(neg_zero));  // bit-exact round trip keeps the sign
  CHECK(r.get_f64() == std::numeric_limits<double>::denorm_min());
  CHECK(r.get_f64() == 1e308);
  unsigned char back[3];
  r.get_bytes(back, 3);
  CHECK(back[0] == 1);
  CHECK(back[2] == 3);
  CHECK(r.remaining() == 0);
  CHECK_THROWS_AS(r.get_u8(), std::runtime_error);  // past the end
}

TEST_CASE("wrap/unwrap round-trips payload and kind") {
  const std::vector<unsigned char> payload = {9, 8, 7, 6, 5};
  const std::vector<unsigned char> snap =
      wrap_snapshot(PayloadKind::kCroppedSum, payload);
  const std::vector<unsigned char> back =
      unwrap_snapshot(snap, PayloadKind::kCroppedSum);
  CHECK(back == payload);
}

TEST_CASE("unwrap rejects the wrong payload kind") {
  const std::vector<unsigned char> snap =
      wrap_snapshot(PayloadKind::kCalibration, {1, 2, 3});
  CHECK_THROWS_AS(unwrap_snapshot(snap, PayloadKind::kDistinctSketch),
                  std::runtime_error);
}

TEST_CASE("unwrap rejects tampered, truncated and short inputs") {
  const std::vector<unsigned char> snap =
      wrap_snapshot(PayloadKind::kStateVector, {42, 42, 42, 42});

  SUBCASE("flipped payload byte fails the checksum") {
    std::vector<unsigned char> bad = snap;
    bad[18] ^= 0x01;
    CHECK_THROWS_AS(unwrap_snapshot(bad, PayloadKind::kStateVector),
                    std::runtime_error);
  }
  SUBCASE("flipped magic byte is rejected") {
    std::vector<unsigned char> bad = snap;
    bad[0] ^= 0xFF;
    CHECK_THROWS_AS(unwrap_snapshot(bad, PayloadKind::kStateVector),
                    std::runtime_error);
  }
  SUBCASE("truncation is rejected") {
    std::vector<unsigned char> bad = snap;
    bad.pop_back();
    CHECK_THROWS_AS(unwrap_snapshot(bad, PayloadKind::kStateVector),
                    std::runtime_error);
  }
  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(unwrap_snapshot({}, PayloadKind::kStateVector),
                    std::runtime_error);
  }
}

TEST_CASE("fnv1a64 matches the published test vector") {
  // FNV-1a("a") and FNV-1a("") are standard reference values.
  CHECK(fnv1a64(nullptr, 0) == 0xCBF29CE484222325ull);
  const unsigned char a = 'a';
  CHECK(fnv1a64(&a, 1) == 0xAF63DC4C8601EC8Cull);
}

TEST_CASE("snapshot files round-trip through disk") {
  const std::vector<unsigned char> snap =
      wrap_snapshot(PayloadKind::kHeavyHitters, {11, 22, 33});
  const std::string path = "test_snapshot_roundtrip.bin";
  write_file(path, snap);
  CHECK(read_file(path) == snap);
  std::remove(path.c_str());
  CHECK_THROWS(read_file(path));
}
