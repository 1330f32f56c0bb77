#include "pansketch/attack.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "pansketch/rng.hpp"
#include "pansketch/snapshot.hpp"
#include "pansketch/stable.hpp"

namespace pansketch {

double IntrusionOracle::fork_and_query(const Stream& suffix) {
  queries_.fetch_add(1, std::memory_order_relaxed);
  return replay(suffix);
}

std::vector<unsigned char> serialize(const StateVector& state) {
  PayloadWriter w;
  w.put_u64(state.m);
  w.put_u8(state.mode == StreamMode::kCashRegister ? 1 : 0);
  for (int64_t v : state.a) w.put_u64(static_cast<uint64_t>(v));
  return wrap_snapshot(PayloadKind::kStateVector, w.bytes());
}

StateVector deserialize_state(const std::vector<unsigned char>& bytes) {
  const std::vector<unsigned char> payload =
      unwrap_snapshot(bytes, PayloadKind::kStateVector);
  PayloadReader r(payload.data(), payload.size());
  const uint64_t m = r.get_u64();
  const uint8_t mode = r.get_u8();
  StateVector state(m, mode == 1 ? StreamMode::kCashRegister
                                 : StreamMode::kTurnstile);
  for (uint64_t i = 0; i < m; ++i) {
    state.a[i] = static_cast<int64_t>(r.get_u64());
  }
  if (r.remaining() != 0) {
    throw std::runtime_error("state snapshot has trailing bytes");
  }
  return state;
}

ExactTarget::ExactTarget(const StateVector& state) {
  snapshot_ = serialize(state);
}

double ExactTarget::replay(const Stream& suffix) const {
  StateVector fork = deserialize_state(snapshot_);
  apply(fork, suffix);
  return static_cast<double>(distinct_count(fork));
}

SketchTarget::SketchTarget(DistinctConfig config, const NoisySketch& sketch)
    : config_(std::move(config)) {
  snapshot_ = sketch.snapshot();
}

double SketchTarget::replay(const Stream& suffix) const {
  NoisySketch fork = NoisySketch::restore(config_, snapshot_);
  fork.ingest_serial(suffix);
  return fork.estimate();
}

namespace {

// All support masks of [0, n) with popcount <= l, ordered by (popcount,
// value): the natural sparsest-first candidate/query order.
std::vector<uint32_t> masks_up_to(uint32_t n, uint32_t l) {
  if (n == 0 || n > 30) {
    throw std::invalid_argument("union decoding supports 1 <= n <= 30");
  }
  std::vector<uint32_t> masks;
  masks.push_back(0);
  std::vector<uint32_t> idx;
  for (uint32_t size = 1; size <= std::min(l, n); ++size) {
    idx.assign(size, 0);
    for (uint32_t i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      uint32_t mask = 0;
      for (uint32_t i : idx) mask |= 1u << i;
      masks.push_back(mask);
      // next combination
      int32_t pos = static_cast<int32_t>(size) - 1;
      while (pos >= 0 && idx[pos] == n - size + static_cast<uint32_t>(pos)) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (uint32_t i = static_cast<uint32_t>(pos) + 1; i < size; ++i) {
        idx[i] = idx[i - 1] + 1;
      }
    }
  }
  std::stable_sort(masks.begin(), masks.end(),
                   [](uint32_t a, uint32_t b) {
                     const int pa = std::popcount(a);
                     const int pb = std::popcount(b);
                     return pa != pb ? pa < pb : a < b;
                   });
  return masks;
}

Stream mask_suffix(uint64_t mask, uint32_t n) {
  Stream s;
  for (uint32_t i = 0; i < n; ++i) {
    if (mask & (1ULL << i)) s.push_back({i, 1});
  }
  return s;
}

std::vector<uint8_t> mask_bits(uint64_t mask, uint32_t n) {
  std::vector<uint8_t> bits(n, 0);
  for (uint32_t i = 0; i < n; ++i) bits[i] = (mask >> i) & 1;
  return bits;
}

}  // namespace

DecodeResult union_decode(IntrusionOracle& oracle, uint32_t n, uint32_t l,
                          double alpha1, double alpha2) {
  if (alpha1 < 0.0 || alpha1 >= 1.0) {
    throw std::invalid_argument("union promise needs alpha1 in [0, 1)");
  }
  if (alpha2 < 0.0) throw std::invalid_argument("union promise needs alpha2 >= 0");
  const std::vector<uint32_t> masks = masks_up_to(n, l);
  std::vector<double> answers(masks.size());
  // Forked replays are independent; answer them concurrently.
  const int64_t q = static_cast<int64_t>(masks.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (int64_t i = 0; i < q; ++i) {
    answers[i] = oracle.fork_and_query(mask_suffix(masks[i], n));
  }

  // Sparsest-first scan for a candidate satisfying every constraint
  //   (1 - alpha1) * |cand OR q| - alpha2 <= ans <= (1 + alpha1) * |cand OR q| + alpha2
  // with early exit on the first violated constraint. Tracks the least-violating
  // candidate as a best-effort answer for infeasible (noisy) instances.
  double best_violation = 0.0;
  uint32_t best_mask = 0;
  bool have_best = false;
  for (uint32_t cand : masks) {
    double violation = 0.0;
    bool ok = true;
    for (size_t i = 0; i < masks.size(); ++i) {
      const double sz = static_cast<double>(std::popcount(cand | masks[i]));
      const double lo = (1.0 - alpha1) * sz - alpha2;
      const double hi = (1.0 + alpha1) * sz + alpha2;
      if (answers[i] < lo || answers[i] > hi) {
        ok = false;
        violation += std::max(lo - answers[i], answers[i] - hi);
        if (have_best && violation >= best_violation) break;
      }
    }
    if (ok) {
      return {mask_bits(cand, n), true, oracle.queries_used()};
    }
    if (!have_best || violation < best_violation) {
      best_violation = violation;
      best_mask = cand;
      have_best = true;
    }
  }
  return {mask_bits(best_mask, n), false, oracle.queries_used()};
}

namespace {

// Solves the n x n system G x = g by Gaussian elimination with partial
// pivoting. Returns false on a (numerically) singular matrix.
bool solve_dense(std::vector<double>& G, std::vector<double>& g, uint32_t n) {
  for (uint32_t col = 0; col < n; ++col) {
    uint32_t pivot = col;
    for (uint32_t row = col + 1; row < n; ++row) {
      if (std::abs(G[row * n + col]) > std::abs(G[pivot * n + col])) pivot = row;
    }
    if (std::abs(G[pivot * n + col]) < 1e-9) return false;
    if (pivot != col) {
      for (uint32_t j = 0; j < n; ++j) std::swap(G[col * n + j], G[pivot * n + j]);
      std::swap(g[col], g[pivot]);
    }
    const double inv = 1.0 / G[col * n + col];
    for (uint32_t row = col + 1; row < n; ++row) {
      const double factor = G[row * n + col] * inv;
      if (factor == 0.0) continue;
      for (uint32_t j = col; j < n; ++j) G[row * n + j] -= factor * G[col * n + j];
      g[row] -= factor * g[col];
    }
  }
  for (int32_t row = static_cast<int32_t>(n) - 1; row >= 0; --row) {
    double acc = g[row];
    for (uint32_t j = static_cast<uint32_t>(row) + 1; j < n; ++j) {
      acc -= G[row * n + j] * g[j];
    }
    g[row] = acc / G[row * n + row];
  }
  return true;
}

}  // namespace

DecodeResult dot_decode(IntrusionOracle& oracle, uint32_t n,
                        uint32_t num_queries, uint64_t seed) {
  if (n == 0 || n > 64) {
    throw std::invalid_argument("dot-product decoding supports 1 <= n <= 64");
  }
  if (num_queries < n) {
    throw std::invalid_argument("dot-product decoding needs at least n queries");
  }
  const uint64_t full = n == 64 ? ~0ULL : (1ULL << n) - 1;
  const double base = oracle.fork_and_query({});

  for (int attempt = 0; attempt < 4; ++attempt) {
    const uint64_t qkey = derive_seed(seed, kSaltQuery) + attempt;
    std::vector<uint64_t> queries(num_queries);
    for (uint32_t t = 0; t < num_queries; ++t) {
      queries[t] = mix64(qkey, t) & full;
    }
    std::vector<double> rhs(num_queries);
    const int64_t q = static_cast<int64_t>(num_queries);
#pragma omp parallel for schedule(dynamic, 16)
    for (int64_t t = 0; t < q; ++t) {
      const double ans = oracle.fork_and_query(mask_suffix(queries[t], n));
      // inclusion-exclusion: x.q = D(x) + |q| - D(x OR q)
      rhs[t] = base + std::popcount(queries[t]) - ans;
    }

    // Normal equations for least squares.
    std::vector<double> G(static_cast<size_t>(n) * n, 0.0);
    std::vector<double> g(n, 0.0);
    for (uint32_t t = 0; t < num_queries; ++t) {
      const uint64_t qm = queries[t];
      for (uint32_t i = 0; i < n; ++i) {
        if (!(qm & (1ULL << i))) continue;
        g[i] += rhs[t];
        for (uint32_t j = i; j < n; ++j) {
          if (qm & (1ULL << j)) G[i * n + j] += 1.0;
        }
      }
    }
    for (uint32_t i = 0; i < n; ++i) {
      for (uint32_t j = 0; j < i; ++j) G[i * n + j] = G[j * n + i];
    }
    if (!solve_dense(G, g, n)) continue;  // rank-deficient: resample queries

    std::vector<uint8_t> bits(n);
    for (uint32_t i = 0; i < n; ++i) bits[i] = g[i] >= 0.5 ? 1 : 0;
    return {std::move(bits), true, oracle.queries_used()};
  }
  throw std::runtime_error(
      "dot-product decoding: query matrix stayed rank-deficient after resampling");
}

uint64_t hamming(const std::vector<uint8_t>& x, const std::vector<uint8_t>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("hamming distance needs equal lengths");
  }
  uint64_t d = 0;
  for (size_t i = 0; i < x.size(); ++i) d += (x[i] != 0) != (y[i] != 0);
  return d;
}

namespace {

// Secret supports: union trials draw a support of size exactly l; dot trials
// flip a fair coin per position.
uint64_t draw_secret(AttackSpec::Kind kind, uint32_t n, uint32_t l,
                     uint64_t key) {
  if (kind == AttackSpec::Kind::kDotProduct) {
    const uint64_t full = n == 64 ? ~0ULL : (1ULL << n) - 1;
    return mix64(key, 0) & full;
  }
  uint64_t mask = 0;
  uint64_t counter = 1;
  uint32_t placed = 0;
  while (placed < std::min(l, n)) {
    const uint32_t pos =
        static_cast<uint32_t>(uniform_below(key, counter++, n));
    if (!(mask & (1ULL << pos))) {
      mask |= 1ULL << pos;
      ++placed;
    }
  }
  return mask;
}

std::shared_ptr<const Calibration> attack_calibration(const AttackSpec& spec) {
  StableParams params;
  params.p = 0.95 * spec.sketch_eps / std::log2(spec.sketch_z);
  params.r = spec.sketch_r;
  params.m = spec.n;
  params.master_seed = derive_seed(spec.seed, kSaltMatrix);
  return std::make_shared<Calibration>(calibrate(params, 100000));
}

}  // namespace

std::vector<AttackTrialRow> run_attack(const AttackSpec& spec) {
  if (spec.trials == 0) throw std::invalid_argument("attack needs trials >= 1");
  const bool sketch_target = spec.target == AttackSpec::Target::kPPDistinct;
  std::shared_ptr<const Calibration> cal;
  if (sketch_target) cal = attack_calibration(spec);

  std::vector<AttackTrialRow> rows;
  rows.reserve(spec.trials);
  for (uint64_t trial = 0; trial < spec.trials; ++trial) {
    const uint64_t trial_key = derive_seed(spec.seed, kSaltTrial) ^ trial;
    const uint64_t secret = draw_secret(spec.kind, spec.n, spec.l, trial_key);
    const Stream secret_stream = mask_suffix(secret, spec.n);

    std::unique_ptr<IntrusionOracle> oracle;
    double noise_scale = 0.0;
    if (!sketch_target) {
      StateVector state(spec.n, StreamMode::kCashRegister);
      apply(state, secret_stream);
      oracle = std::make_unique<ExactTarget>(state);
    } else {
      DistinctConfig config;
      config.calibration = cal;
      config.z = spec.sketch_z;
      config.approx_eps = spec.sketch_eps;
      config.noise_seed = derive_seed(trial_key, kSaltNoise);
      if (std::isinf(spec.alpha_total)) {
        config.noise_mode = NoiseMode::kDisabled;
        config.alpha = 0.0;
      } else {
        if (!(spec.alpha_total > 0.0)) {
          throw std::invalid_argument("attack alpha' must be positive or inf");
        }
        config.noise_mode = NoiseMode::kStandard;
        config.alpha = spec.alpha_total / spec.sketch_r;
        noise_scale = 1.0 / spec.alpha_total;
      }
      NoisySketch sketch(config);
      sketch.ingest_serial(secret_stream);
      oracle = std::make_unique<SketchTarget>(config, sketch);
    }

    DecodeResult decoded =
        spec.kind == AttackSpec::Kind::kUnion
            ? union_decode(*oracle, spec.n, spec.l, spec.alpha1, spec.alpha2)
            : dot_decode(*oracle, spec.n, spec.num_queries,
                         derive_seed(trial_key, kSaltQuery));

    AttackTrialRow row;
    row.trial = trial;
    row.target = sketch_target ? "ppdistinct" : "exact";
    row.noise_scale = noise_scale;
    row.hamming_error = hamming(decoded.x_tilde, mask_bits(secret, spec.n));
    row.queries_used = decoded.queries_used;
    rows.push_back(row);
  }
  return rows;
}

void write_attack_csv(std::ostream& out, const std::vector<AttackTrialRow>& rows) {
  out << "trial,target,noise_scale,hamming_error,queries_used\n";
  char buf[64];
  for (const AttackTrialRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", row.noise_scale);
    out << row.trial << ',' << row.target << ',' << buf << ','
        << row.hamming_error << ',' << row.queries_used << '\n';
  }
}

DpSmokeResult dp_smoke_test(double alpha, uint64_t runs, uint32_t bins,
                            uint64_t min_count, uint64_t seed) {
  if (!(alpha > 0.0)) throw std::invalid_argument("smoke test needs alpha > 0");
  if (runs < 1000) throw std::invalid_argument("smoke test needs runs >= 1000");
  if (bins < 4) throw std::invalid_argument("smoke test needs bins >= 4");

  // One-column sketch over a small universe; pinned neighboring pairs each
  // move a fixed mass from one item to another.
  StableParams params;
  params.p = 0.25;
  params.r = 1;
  params.m = 16;
  params.master_seed = derive_seed(seed, kSaltMatrix);
  auto cal = std::make_shared<Calibration>(calibrate(params, 100000));

  DistinctConfig config;
  config.calibration = cal;
  config.z = 2.0;
  config.alpha = alpha;
  config.approx_eps = 0.3;

  struct Pair {
    uint64_t from, to;
    int64_t mass;
  };
  const Pair pinned[] = {{3, 7, 2}, {0, 15, 1}, {5, 9, 2}};

  DpSmokeResult result;
  result.alpha = alpha;
  result.runs = runs;
  result.pass = true;

  const double b = 2.0 * config.z * cal->row_norms[0] / alpha;
  uint64_t pair_index = 0;
  for (const Pair& pair : pinned) {
    ++pair_index;
    const Stream stream_s{{pair.from, pair.mass}};
    const Stream stream_t = make_neighbor(stream_s, pair.from, pair.to).stream;

    // The column value is (deterministic stream contribution) + Laplace
    // noise; histogram it over fresh, per-side-independent noise draws.
    double center_s = 0.0;
    double center_t = 0.0;
    {
      DistinctConfig quiet = config;
      quiet.noise_mode = NoiseMode::kDisabled;
      NoisySketch s(quiet);
      s.ingest_serial(stream_s);
      center_s = s.entries()[0];
      NoisySketch t(quiet);
      t.ingest_serial(stream_t);
      center_t = t.entries()[0];
    }
    const double mid = (center_s + center_t) / 2.0;
    const double half_width = std::abs(center_s - center_t) / 2.0 + 4.0 * b;
    const double lo = mid - half_width;
    const double width = 2.0 * half_width / bins;
    const uint64_t key_s = derive_seed(seed, kSaltNoise) ^ (pair_index * 2);
    const uint64_t key_t = derive_seed(seed, kSaltNoise) ^ (pair_index * 2 + 1);

    std::vector<uint64_t> hist_s(bins, 0);
    std::vector<uint64_t> hist_t(bins, 0);
    const auto bin_of = [&](double v) {
      const double f = (v - lo) / width;
      if (f < 0.0 || f >= bins) return static_cast<int64_t>(-1);
      return static_cast<int64_t>(f);
    };
    for (uint64_t run = 0; run < runs; ++run) {
      const int64_t bs = bin_of(center_s + laplace(key_s, run, b));
      const int64_t bt = bin_of(center_t + laplace(key_t, run, b));
      if (bs >= 0) ++hist_s[bs];
      if (bt >= 0) ++hist_t[bt];
    }

    for (uint32_t bin = 0; bin < bins; ++bin) {
      const double ns = static_cast<double>(hist_s[bin]);
      const double nt = static_cast<double>(hist_t[bin]);
      if (ns < static_cast<double>(min_count) ||
          nt < static_cast<double>(min_count)) {
        continue;
      }
      ++result.bins_checked;
      const double log_ratio = std::abs(std::log(ns / nt));
      // 3-sigma slack on the log of a ratio of two binomial counts.
      const double slack = 3.0 * std::sqrt(1.0 / ns + 1.0 / nt);
      const double allowance = alpha + slack;
      if (log_ratio > result.max_log_ratio) {
        result.max_log_ratio = log_ratio;
        result.worst_allowance = allowance;
      }
      if (log_ratio > allowance) result.pass = false;
    }
  }
  if (result.bins_checked == 0) result.pass = false;
  return result;
}

}  // namespace pansketch
