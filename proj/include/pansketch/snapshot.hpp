#pragma once

// Versioned binary container used by every on-disk artifact (calibration
// caches, estimator snapshots). Layout, little-endian throughout:
//
//   bytes 0..3   magic "PPSK"
//   bytes 4..5   format version (u16)
//   bytes 6..7   payload kind (u16)
//   bytes 8..15  payload length (u64)
//   ...          payload
//   last 8       FNV-1a 64 checksum of everything before it
//
// Readers verify magic, version, kind, length and checksum, so truncated or
// tampered bytes fail loudly instead of deserializing garbage.

#include <cstdint>
#include <string>
#include <vector>

namespace pansketch {

enum class PayloadKind : uint16_t {
  kCalibration = 1,
  kDistinctSketch = 2,
  kCroppedSum = 3,
  kHeavyHitters = 4,
  kStateVector = 5,
};

constexpr uint16_t kSnapshotVersion = 1;

uint64_t fnv1a64(const unsigned char* data, size_t len);

// Append-only little-endian writer.
class PayloadWriter {
 public:
  void put_u8(uint8_t v);
  void put_u16(uint16_t v);
  void put_u32(uint32_t v);
  void put_u64(uint64_t v);
  void put_f64(double v);  // raw IEEE-754 bits: exact round-trip
  void put_bytes(const unsigned char* data, size_t len);
  const std::vector<unsigned char>& bytes() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

// Bounds-checked reader; all getters throw std::runtime_error past the end.
class PayloadReader {
 public:
  PayloadReader(const unsigned char* data, size_t len)
      : data_(data), len_(len) {}
  uint8_t get_u8();
  uint16_t get_u16();
  uint32_t get_u32();
  uint64_t get_u64();
  double get_f64();
  void get_bytes(unsigned char* out, size_t len);
  size_t remaining() const { return len_ - pos_; }

 private:
  const unsigned char* data_;
  size_t len_;
  size_t pos_ = 0;
};

std::vector<unsigned char> wrap_snapshot(PayloadKind kind,
                                         const std::vector<unsigned char>& payload);

// Verifies the container and returns the payload. Throws std::runtime_error
// on any integrity failure; if expected_kind does not match, reports both.
std::vector<unsigned char> unwrap_snapshot(const std::vector<unsigned char>& bytes,
                                           PayloadKind expected_kind);

void write_file(const std::string& path, const std::vector<unsigned char>& bytes);
std::vector<unsigned char> read_file(const std::string& path);

}  // namespace pansketch
