#include "pansketch/stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pansketch/rng.hpp"

namespace pansketch {

void apply(StateVector& state, const Update& u) {
  if (u.item >= state.m) {
    throw std::out_of_range("update item " + std::to_string(u.item) +
                            " outside universe [0, " + std::to_string(state.m) +
                            ")");
  }
  if (u.delta == 0) return;  // zero-deltas are dropped at ingestion
  if (state.mode == StreamMode::kCashRegister && u.delta < 0) {
    throw std::invalid_argument("negative delta in cash-register mode");
  }
  state.a[u.item] += u.delta;
  if (state.mode == StreamMode::kCashRegister && state.a[u.item] < 0) {
    throw std::invalid_argument("cash-register total went negative");
  }
}

void apply(StateVector& state, const Stream& stream) {
  for (const Update& u : stream) apply(state, u);
}

StateVector materialize(uint64_t m, StreamMode mode, const Stream& stream) {
  StateVector state(m, mode);
  apply(state, stream);
  return state;
}

uint64_t distinct_count(const StateVector& state) {
  uint64_t d = 0;
  for (int64_t v : state.a) d += (v != 0);
  return d;
}

double frequency_moment(const StateVector& state, double k) {
  if (k < 0.0) throw std::invalid_argument("frequency moment needs k >= 0");
  double sum = 0.0;
  for (int64_t v : state.a) {
    if (v == 0) continue;
    sum += std::pow(std::abs(static_cast<double>(v)), k);
  }
  return sum;
}

double cropped_moment(const StateVector& state, double k, double tau) {
  if (k < 0.0 || tau <= 0.0) {
    throw std::invalid_argument("cropped moment needs k >= 0 and tau > 0");
  }
  double sum = 0.0;
  for (int64_t v : state.a) {
    if (v == 0) continue;
    sum += std::min(std::pow(std::abs(static_cast<double>(v)), k), tau);
  }
  return sum;
}

uint64_t hh_count(const StateVector& state, double k) {
  if (k < 1.0) throw std::invalid_argument("heavy hitter count needs k >= 1");
  const double f1 = frequency_moment(state, 1.0);
  if (f1 <= 0.0) {
    throw std::domain_error("heavy hitter count undefined on empty state");
  }
  const double threshold = f1 / k;
  uint64_t count = 0;
  for (int64_t v : state.a) {
    if (std::abs(static_cast<double>(v)) >= threshold) ++count;
  }
  return count;
}

double cropped_dot(const StateVector& a, const StateVector& b, double tau) {
  if (a.m != b.m) throw std::invalid_argument("cropped dot: universe mismatch");
  if (tau <= 0.0) throw std::invalid_argument("cropped dot needs tau > 0");
  double sum = 0.0;
  for (uint64_t i = 0; i < a.m; ++i) {
    sum += std::min(static_cast<double>(a.a[i]) * static_cast<double>(b.a[i]),
                    tau);
  }
  return sum;
}

NeighborResult make_neighbor(const Stream& stream, uint64_t from_id,
                             uint64_t to_id) {
  if (from_id == to_id) {
    throw std::invalid_argument("neighbor replacement needs distinct items");
  }
  int64_t mass = 0;
  size_t first = stream.size();
  for (size_t i = 0; i < stream.size(); ++i) {
    if (stream[i].item == from_id) {
      if (first == stream.size()) first = i;
      mass += stream[i].delta;
    }
  }
  if (first == stream.size()) return {stream, false};

  NeighborResult out;
  out.replaced = true;
  out.stream.reserve(stream.size());
  for (size_t i = 0; i < stream.size(); ++i) {
    if (stream[i].item == from_id) {
      // Merged replacement goes where the item first appeared; a zero total
      // (turnstile cancellation) contributes nothing and is dropped.
      if (i == first && mass != 0) out.stream.push_back({to_id, mass});
      continue;
    }
    out.stream.push_back(stream[i]);
  }
  return out;
}

namespace {

Stream generate_uniform(const StreamGen& gen) {
  Stream out;
  out.reserve(gen.length);
  for (uint64_t t = 0; t < gen.length; ++t) {
    out.push_back({uniform_below(gen.seed, t, gen.m), 1});
  }
  return out;
}

Stream generate_zipf(const StreamGen& gen) {
  if (gen.zipf_s <= 0.0) throw std::invalid_argument("zipf exponent must be > 0");
  // Inverse-CDF sampling over the cumulative weights of 1/rank^s. Rank r maps
  // to item r-1.
  std::vector<double> cdf(gen.m);
  double acc = 0.0;
  for (uint64_t r = 0; r < gen.m; ++r) {
    acc += std::pow(static_cast<double>(r + 1), -gen.zipf_s);
    cdf[r] = acc;
  }
  Stream out;
  out.reserve(gen.length);
  for (uint64_t t = 0; t < gen.length; ++t) {
    const double u = uniform01(gen.seed, t) * acc;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const uint64_t item =
        static_cast<uint64_t>(std::distance(cdf.begin(), it));
    out.push_back({std::min(item, gen.m - 1), 1});
  }
  return out;
}

Stream generate_binary_support(const StreamGen& gen) {
  if (gen.d > gen.m) {
    throw std::invalid_argument("binary support size exceeds universe");
  }
  // Floyd's algorithm: d distinct items out of [0, m), deterministic per seed.
  std::vector<uint64_t> chosen;
  chosen.reserve(gen.d);
  uint64_t counter = 0;
  for (uint64_t j = gen.m - gen.d; j < gen.m; ++j) {
    const uint64_t t = uniform_below(gen.seed, counter++, j + 1);
    bool seen = false;
    for (uint64_t c : chosen) {
      if (c == t) { seen = true; break; }
    }
    chosen.push_back(seen ? j : t);
  }
  Stream out;
  out.reserve(gen.d);
  for (uint64_t c : chosen) out.push_back({c, 1});
  return out;
}

}  // namespace

Stream generate(const StreamGen& gen) {
  if (gen.kind != StreamGen::Kind::kExplicit && gen.m == 0) {
    throw std::invalid_argument("stream generator needs a nonempty universe");
  }
  switch (gen.kind) {
    case StreamGen::Kind::kUniform: return generate_uniform(gen);
    case StreamGen::Kind::kZipf: return generate_zipf(gen);
    case StreamGen::Kind::kBinarySupport: return generate_binary_support(gen);
    case StreamGen::Kind::kExplicit: return gen.explicit_updates;
  }
  throw std::logic_error("unreachable");
}

Stream parse_updates(std::istream& in, uint64_t m, StreamMode mode) {
  Stream out;
  std::string line;
  uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    uint64_t item = 0;
    int64_t delta = 0;
    if (!(fields >> item)) {
      // blank or comment-only line
      std::string rest;
      if (fields.clear(), fields.str(line), (fields >> rest)) {
        throw std::runtime_error("update file line " + std::to_string(lineno) +
                                 ": expected '<item> <delta>'");
      }
      continue;
    }
    if (!(fields >> delta)) {
      throw std::runtime_error("update file line " + std::to_string(lineno) +
                               ": missing delta");
    }
    std::string trailing;
    if (fields >> trailing) {
      throw std::runtime_error("update file line " + std::to_string(lineno) +
                               ": trailing tokens");
    }
    if (item >= m) {
      throw std::runtime_error("update file line " + std::to_string(lineno) +
                               ": item outside universe");
    }
    if (mode == StreamMode::kCashRegister && delta < 0) {
      throw std::runtime_error("update file line " + std::to_string(lineno) +
                               ": negative delta in cash-register mode");
    }
    if (delta == 0) continue;
    out.push_back({item, delta});
  }
  return out;
}

Stream load_updates(const std::string& path, uint64_t m, StreamMode mode) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open update file: " + path);
  return parse_updates(in, m, mode);
}

void write_updates(std::ostream& out, const Stream& stream) {
  for (const Update& u : stream) {
    out << u.item << ' ' << u.delta << '\n';
  }
}

}  // namespace pansketch
