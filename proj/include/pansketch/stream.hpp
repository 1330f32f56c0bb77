#pragma once

// Stream model: update sequences over a fixed universe [0, m), the exact
// aggregated state they induce, exact (non-private) statistics used as test
// oracles, and neighbor construction for privacy experiments.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pansketch {

enum class StreamMode { kCashRegister, kTurnstile };

struct Update {
  uint64_t item = 0;   // id in [0, m)
  int64_t delta = 0;   // nonzero; >= 1 in cash-register mode
};

using Stream = std::vector<Update>;

// Dense aggregated state a[i] = sum of deltas for item i.
struct StateVector {
  uint64_t m = 0;
  StreamMode mode = StreamMode::kTurnstile;
  std::vector<int64_t> a;

  explicit StateVector(uint64_t m_ = 0,
                       StreamMode mode_ = StreamMode::kTurnstile)
      : m(m_), mode(mode_), a(m_, 0) {}
};

// Applies one update. Throws std::out_of_range for an item outside [0, m) and
// std::invalid_argument for a negative delta in cash-register mode or a
// cash-register total that would go negative (cannot happen with valid input).
void apply(StateVector& state, const Update& u);
void apply(StateVector& state, const Stream& stream);

StateVector materialize(uint64_t m, StreamMode mode, const Stream& stream);

// Exact statistics (test oracles). k and tau are real-valued where the
// definitions allow it.
uint64_t distinct_count(const StateVector& state);
double frequency_moment(const StateVector& state, double k);        // F_k
double cropped_moment(const StateVector& state, double k, double tau);  // T_k(tau)
uint64_t hh_count(const StateVector& state, double k);              // |{i: |a_i| >= F1/k}|
double cropped_dot(const StateVector& a, const StateVector& b, double tau);

// Replaces every occurrence of from_id with a single merged update carrying
// the same total mass, placed at the first occurrence position. Returns the
// neighbor stream and whether a replacement happened (false = from_id absent,
// stream returned unchanged).
struct NeighborResult {
  Stream stream;
  bool replaced = false;
};
NeighborResult make_neighbor(const Stream& stream, uint64_t from_id,
                             uint64_t to_id);

// Synthetic stream generation. All generators emit unit increments and are
// deterministic per seed.
struct StreamGen {
  enum class Kind { kUniform, kZipf, kBinarySupport, kExplicit };
  Kind kind = Kind::kUniform;
  uint64_t m = 0;
  uint64_t length = 0;    // number of updates (uniform/zipf)
  double zipf_s = 1.1;    // zipf exponent
  uint64_t d = 0;         // distinct support size (binary-support)
  uint64_t seed = 0;
  Stream explicit_updates;  // kExplicit
};
Stream generate(const StreamGen& gen);

// Update-file format: one "<item> <delta>" pair per line, UTF-8, '#' starts a
// comment, blank lines ignored, zero deltas dropped. Validates against m and
// mode; throws std::runtime_error with a line number on malformed input.
Stream parse_updates(std::istream& in, uint64_t m, StreamMode mode);
Stream load_updates(const std::string& path, uint64_t m, StreamMode mode);
void write_updates(std::ostream& out, const Stream& stream);

}  // namespace pansketch
