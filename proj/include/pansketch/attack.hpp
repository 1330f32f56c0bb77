#pragma once

// Reconstruction lab: what a single state intrusion plus continued queries
// reveals. An IntrusionOracle owns a frozen snapshot of a target's state;
// every query forks a fresh copy (deserialize), replays a chosen suffix, and
// reads the target's answer. Decoders then try to reconstruct the binary
// secret x in {0,1}^n that produced the snapshot:
//
//  - union_decode: queries every support set q with |q| <= l, gets noisy
//    union sizes ~ |x OR q|, and returns the sparsest candidate consistent
//    with all answers under the promise |ans - true| <= alpha1*true + alpha2.
//  - dot_decode: random binary queries; |x| + |q| - |x OR q| = x.q turns
//    union sizes into inner products, solved by least squares + rounding.
//
// Against the exact (non-private) counter both decoders recover x; against
// the pan-private sketch the injected noise leaves them near chance.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pansketch/distinct.hpp"
#include "pansketch/stream.hpp"

namespace pansketch {

class IntrusionOracle {
 public:
  virtual ~IntrusionOracle() = default;

  // Forks the snapshot, replays suffix, returns the target's distinct-count
  // answer. Thread-safe: forks never share mutable state.
  double fork_and_query(const Stream& suffix);

  uint64_t queries_used() const { return queries_.load(); }
  const std::vector<unsigned char>& snapshot_bytes() const { return snapshot_; }

 protected:
  virtual double replay(const Stream& suffix) const = 0;
  std::vector<unsigned char> snapshot_;

 private:
  std::atomic<uint64_t> queries_{0};
};

// Exact distinct counter (no privacy): the baseline target.
class ExactTarget : public IntrusionOracle {
 public:
  explicit ExactTarget(const StateVector& state);

 protected:
  double replay(const Stream& suffix) const override;
};

std::vector<unsigned char> serialize(const StateVector& state);
StateVector deserialize_state(const std::vector<unsigned char>& bytes);

// Pan-private sketch target: snapshot taken after the secret stream.
class SketchTarget : public IntrusionOracle {
 public:
  SketchTarget(DistinctConfig config, const NoisySketch& sketch);

 protected:
  double replay(const Stream& suffix) const override;

 private:
  DistinctConfig config_;
};

struct DecodeResult {
  std::vector<uint8_t> x_tilde;  // length n, entries 0/1
  bool feasible = true;          // union decoder: promise satisfiable?
  uint64_t queries_used = 0;
};

DecodeResult union_decode(IntrusionOracle& oracle, uint32_t n, uint32_t l,
                          double alpha1, double alpha2);
DecodeResult dot_decode(IntrusionOracle& oracle, uint32_t n,
                        uint32_t num_queries, uint64_t seed);

// |{i : x_i != y_i}|; throws std::invalid_argument on length mismatch.
uint64_t hamming(const std::vector<uint8_t>& x, const std::vector<uint8_t>& y);

// Trial harness shared by the CLI and the acceptance suite.
struct AttackSpec {
  enum class Kind { kUnion, kDotProduct };
  enum class Target { kExact, kPPDistinct };

  Kind kind = Kind::kUnion;
  Target target = Target::kExact;
  uint32_t n = 16;            // secret length
  uint32_t l = 3;             // union: max support size (secret and queries)
  uint32_t num_queries = 256; // dot: number of random queries
  double alpha1 = 0.0;        // union promise, multiplicative
  double alpha2 = 0.5;        // union promise, additive
  uint64_t trials = 10;
  uint64_t seed = 0;
  // Total sketch privacy budget alpha' for the pan-private target; infinity
  // runs the sketch with noise disabled. Ignored for the exact target.
  double alpha_total = 1.0;

  // Sketch shape for the pan-private target.
  uint32_t sketch_r = 101;
  double sketch_z = 2.0;
  double sketch_eps = 0.3;
};

struct AttackTrialRow {
  uint64_t trial = 0;
  std::string target;
  double noise_scale = 0.0;  // 0 = exact/noiseless; else 1/alpha'
  uint64_t hamming_error = 0;
  uint64_t queries_used = 0;
};

std::vector<AttackTrialRow> run_attack(const AttackSpec& spec);
void write_attack_csv(std::ostream& out, const std::vector<AttackTrialRow>& rows);

// Differential privacy smoke test on one sketch coordinate: histograms of the
// noisy state over `runs` fresh noise seeds for a fixed neighboring stream
// pair; every bin where both sides have at least min_count samples must have
// a frequency ratio within exp(alpha) up to 3-sigma sampling slack.
struct DpSmokeResult {
  double alpha = 0.0;
  uint64_t runs = 0;
  uint64_t bins_checked = 0;
  double max_log_ratio = 0.0;     // worst observed |log ratio|
  double worst_allowance = 0.0;   // alpha + slack at the worst bin
  bool pass = false;
};
DpSmokeResult dp_smoke_test(double alpha, uint64_t runs, uint32_t bins,
                            uint64_t min_count, uint64_t seed);

}  // namespace pansketch
