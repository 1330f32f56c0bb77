#include "pansketch/snapshot.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pansketch {

uint64_t fnv1a64(const unsigned char* data, size_t len) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

void PayloadWriter::put_u8(uint8_t v) { buf_.push_back(v); }

void PayloadWriter::put_u16(uint16_t v) {
  buf_.push_back(static_cast<unsigned char>(v & 0xFF));
  buf_.push_back(static_cast<unsigned char>(v >> 8));
}

void PayloadWriter::put_u32(uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    buf_.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  }
}

void PayloadWriter::put_u64(uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    buf_.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  }
}

void PayloadWriter::put_f64(double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(bits);
}

void PayloadWriter::put_bytes(const unsigned char* data, size_t len) {
  buf_.insert(buf_.end(), data, data + len);
}

namespace {
void require(bool cond, const char* what) {
  if (!cond) throw std::runtime_error(what);
}
}  // namespace

uint8_t PayloadReader::get_u8() {
  require(pos_ + 1 <= len_, "snapshot payload truncated");
  return data_[pos_++];
}

uint16_t PayloadReader::get_u16() {
  require(pos_ + 2 <= len_, "snapshot payload truncated");
  uint16_t v = static_cast<uint16_t>(data_[pos_]) |
               static_cast<uint16_t>(data_[pos_ + 1]) << 8;
  pos_ += 2;
  return v;
}

uint32_t PayloadReader::get_u32() {
  require(pos_ + 4 <= len_, "snapshot payload truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

uint64_t PayloadReader::get_u64() {
  require(pos_ + 8 <= len_, "snapshot payload truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

double PayloadReader::get_f64() {
  const uint64_t bits = get_u64();
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

void PayloadReader::get_bytes(unsigned char* out, size_t len) {
  require(pos_ + len <= len_, "snapshot payload truncated");
  std::memcpy(out, data_ + pos_, len);
  pos_ += len;
}

std::vector<unsigned char> wrap_snapshot(PayloadKind kind,
                                         const std::vector<unsigned char>& payload) {
  PayloadWriter w;
  w.put_u8('P');
  w.put_u8('P');
  w.put_u8('S');
  w.put_u8('K');
  w.put_u16(kSnapshotVersion);
  w.put_u16(static_cast<uint16_t>(kind));
  w.put_u64(payload.size());
  if (!payload.empty()) w.put_bytes(payload.data(), payload.size());
  std::vector<unsigned char> out = w.bytes();
  const uint64_t checksum = fnv1a64(out.data(), out.size());
  PayloadWriter tail;
  tail.put_u64(checksum);
  out.insert(out.end(), tail.bytes().begin(), tail.bytes().end());
  return out;
}

std::vector<unsigned char> unwrap_snapshot(const std::vector<unsigned char>& bytes,
                                           PayloadKind expected_kind) {
  constexpr size_t kHeader = 16;
  constexpr size_t kTrailer = 8;
  require(bytes.size() >= kHeader + kTrailer, "snapshot too short");
  require(bytes[0] == 'P' && bytes[1] == 'P' && bytes[2] == 'S' && bytes[3] == 'K',
          "snapshot magic mismatch");
  PayloadReader header(bytes.data() + 4, kHeader - 4);
  const uint16_t version = header.get_u16();
  if (version != kSnapshotVersion) {
    throw std::runtime_error("unsupported snapshot version " +
                             std::to_string(version));
  }
  const uint16_t kind = header.get_u16();
  const uint64_t payload_len = header.get_u64();
  require(bytes.size() == kHeader + payload_len + kTrailer,
          "snapshot length mismatch");
  PayloadReader trailer(bytes.data() + kHeader + payload_len, kTrailer);
  const uint64_t stored = trailer.get_u64();
  const uint64_t computed = fnv1a64(bytes.data(), kHeader + payload_len);
  require(stored == computed, "snapshot checksum mismatch (corrupt bytes)");
  if (kind != static_cast<uint16_t>(expected_kind)) {
    throw std::runtime_error(
        "snapshot kind mismatch: got " + std::to_string(kind) + ", expected " +
        std::to_string(static_cast<uint16_t>(expected_kind)));
  }
  return std::vector<unsigned char>(bytes.begin() + kHeader,
                                    bytes.begin() + kHeader + payload_len);
}

void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace pansketch
