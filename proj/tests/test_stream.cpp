#include <doctest.h>

#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "pansketch/rng.hpp"
#include "pansketch/stream.hpp"

using namespace pansketch;

namespace {

StateVector state_from(std::vector<int64_t> a,
                       StreamMode mode = StreamMode::kTurnstile) {
  StateVector s(a.size(), mode);
  s.a = std::move(a);
  return s;
}

}  // namespace

TEST_CASE("apply: single update, cancellation, mode violations") {
  StateVector s(8, StreamMode::kTurnstile);
  apply(s, Update{3, +2});
  for (uint64_t i = 0; i < 8; ++i) CHECK(s.a[i] == (i == 3 ? 2 : 0));

  apply(s, Update{3, -2});
  CHECK(s.a[3] == 0);

  StateVector cr(8, StreamMode::kCashRegister);
  apply(cr, Update{3, +2});
  CHECK_THROWS_AS(apply(cr, Update{3, -5}), std::invalid_argument);
  CHECK_THROWS_AS(apply(cr, Update{9, +1}), std::out_of_range);
}

TEST_CASE("oracles: cropped moments, distinct and heavy-hitter counts") {
  const StateVector s = state_from({1, 2, 4});
  CHECK(cropped_moment(s, 1.0, 3.0) == doctest::Approx(6.0));   // 1+2+3
  CHECK(cropped_moment(s, 2.0, 3.0) == doctest::Approx(7.0));   // 1+3+3
  CHECK(distinct_count(s) == 3);
  CHECK(frequency_moment(s, 1.0) == doctest::Approx(7.0));

  const StateVector t = state_from({6, 2, 2});
  CHECK(frequency_moment(t, 1.0) == doctest::Approx(10.0));
  CHECK(hh_count(t, 2.0) == 1);  // threshold F1/2 = 5: only the 6 qualifies
}

TEST_CASE("oracles: cropped dot product") {
  const StateVector a = state_from({2, 3, 0});
  const StateVector b = state_from({5, 1, 7});
  // min(10,4) + min(3,4) + min(0,4) = 7
  CHECK(cropped_dot(a, b, 4.0) == doctest::Approx(7.0));
}

TEST_CASE("distinct count matches a brute-force recount on random streams") {
  for (int rep = 0; rep < 10000; ++rep) {
    const uint64_t key = derive_seed(404, rep);
    const uint64_t m = 1 + uniform_below(key, 0, 32);
    const uint64_t len = uniform_below(key, 1, 20);
    Stream stream;
    std::map<uint64_t, int64_t> ref;
    for (uint64_t u = 0; u < len; ++u) {
      const uint64_t item = uniform_below(key, 100 + 2 * u, m);
      const int64_t delta =
          static_cast<int64_t>(uniform_below(key, 101 + 2 * u, 7)) - 3;
      if (delta == 0) continue;
      stream.push_back(Update{item, delta});
      ref[item] += delta;
    }
    uint64_t expect = 0;
    for (const auto& [item, total] : ref)
      if (total != 0) ++expect;
    CHECK(distinct_count(materialize(m, StreamMode::kTurnstile, stream)) ==
          expect);
  }
}

TEST_CASE("make_neighbor: relabel, merged split, absent id") {
  const Stream s1 = {{1, 3}, {2, 1}};
  const NeighborResult r1 = make_neighbor(s1, 1, 5);
  CHECK(r1.replaced);
  REQUIRE(r1.stream.size() == 2);
  CHECK(r1.stream[0].item == 5);
  CHECK(r1.stream[0].delta == 3);
  CHECK(r1.stream[1].item == 2);
  CHECK(r1.stream[1].delta == 1);

  const Stream s2 = {{1, 2}, {1, 1}};
  const NeighborResult r2 = make_neighbor(s2, 1, 4);
  CHECK(r2.replaced);
  REQUIRE(r2.stream.size() == 1);  // split occurrences merge into one update
  CHECK(r2.stream[0].item == 4);
  CHECK(r2.stream[0].delta == 3);

  const Stream s3 = {{2, 1}};
  const NeighborResult r3 = make_neighbor(s3, 1, 5);
  CHECK_FALSE(r3.replaced);
  REQUIRE(r3.stream.size() == 1);
  CHECK(r3.stream[0].item == 2);
}

TEST_CASE("make_neighbor preserves F1 and moves at most two coordinates") {
  for (int rep = 0; rep < 200; ++rep) {
    const uint64_t key = derive_seed(808, rep);
    StreamGen gen;
    gen.kind = StreamGen::Kind::kUniform;
    gen.m = 16;
    gen.length = 30;
    gen.seed = key;
    const Stream stream = generate(gen);
    const uint64_t from = uniform_below(key, 1, 16);
    const uint64_t to = (from + 1 + uniform_below(key, 2, 15)) % 16;
    const NeighborResult nb = make_neighbor(stream, from, to);

    const StateVector sa = materialize(16, StreamMode::kCashRegister, stream);
    const StateVector sb =
        materialize(16, StreamMode::kCashRegister, nb.stream);
    CHECK(frequency_moment(sa, 1.0) == doctest::Approx(frequency_moment(sb, 1.0)));
    int moved = 0;
    for (uint64_t i = 0; i < 16; ++i)
      if (sa.a[i] != sb.a[i]) ++moved;
    CHECK(moved <= 2);
  }
}

TEST_CASE("generate: binary support is exact, unit deltas sum to length") {
  StreamGen bin;
  bin.kind = StreamGen::Kind::kBinarySupport;
  bin.m = 100000;
  bin.d = 100;
  bin.seed = 7;
  const Stream s = generate(bin);
  REQUIRE(s.size() == 100);
  const StateVector state = materialize(bin.m, StreamMode::kCashRegister, s);
  CHECK(distinct_count(state) == 100);
  for (const Update& u : s) CHECK(u.delta == 1);

  StreamGen zipf;
  zipf.kind = StreamGen::Kind::kZipf;
  zipf.m = 1000;
  zipf.length = 10000;
  zipf.zipf_s = 1.1;
  zipf.seed = 3;
  const Stream z = generate(zipf);
  const StateVector zs = materialize(zipf.m, StreamMode::kCashRegister, z);
  CHECK(frequency_moment(zs, 1.0) == doctest::Approx(10000.0));
}

TEST_CASE("generate is deterministic per seed") {
  StreamGen gen;
  gen.kind = StreamGen::Kind::kZipf;
  gen.m = 512;
  gen.length = 1000;
  gen.zipf_s = 1.3;
  gen.seed = 99;
  const Stream a = generate(gen);
  const Stream b = generate(gen);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].item == b[i].item);
    CHECK(a[i].delta == b[i].delta);
  }
  gen.seed = 100;
  const Stream c = generate(gen);
  bool same = a.size() == c.size();
  for (size_t i = 0; same && i < a.size(); ++i)
    same = a[i].item == c[i].item && a[i].delta == c[i].delta;
  CHECK_FALSE(same);
}

TEST_CASE("parse_updates: comments, blanks, zero deltas, bad lines") {
  std::istringstream in(
      "# header comment\n"
      "3 2\n"
      "\n"
      "5 -1   # trailing comment\n"
      "4 0\n");
  const Stream s = parse_updates(in, 10, StreamMode::kTurnstile);
  REQUIRE(s.size() == 2);  // comment, blank and zero-delta lines dropped
  CHECK(s[0].item == 3);
  CHECK(s[0].delta == 2);
  CHECK(s[1].item == 5);
  CHECK(s[1].delta == -1);

  std::istringstream bad("3 2\nnot numbers\n");
  CHECK_THROWS_AS(parse_updates(bad, 10, StreamMode::kTurnstile),
                  std::runtime_error);
  std::istringstream bad2("3\n");
  CHECK_THROWS_AS(parse_updates(bad2, 10, StreamMode::kTurnstile),
                  std::runtime_error);
  std::istringstream range("12 1\n");
  CHECK_THROWS(parse_updates(range, 10, StreamMode::kTurnstile));
  std::istringstream neg("3 -1\n");
  CHECK_THROWS(parse_updates(neg, 10, StreamMode::kCashRegister));
}

TEST_CASE("parse error messages carry the offending line number") {
  std::istringstream bad("1 1\n2 2\nbroken line\n");
  try {
    parse_updates(bad, 10, StreamMode::kTurnstile);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("write_updates round-trips through parse_updates") {
  const Stream s = {{0, 4}, {7, -2}, {3, 1}};
  std::ostringstream out;
  write_updates(out, s);
  std::istringstream in(out.str());
  const Stream back = parse_updates(in, 8, StreamMode::kTurnstile);
  REQUIRE(back.size() == s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    CHECK(back[i].item == s[i].item);
    CHECK(back[i].delta == s[i].delta);
  }
}

TEST_CASE("Lp sandwich: D <= sum |a_i|^p <= (1+eps) D for p = eps/log2(Z)") {
  // Small-scale spot check of the norm inequality the distinct sketch rests
  // on; the acceptance suite runs the full grid.
  const double eps = 0.25;
  const double z = 10.0;
  const double p = eps / std::log2(z);
  for (int rep = 0; rep < 100; ++rep) {
    const uint64_t key = derive_seed(606, rep);
    double sum = 0.0;
    uint64_t d = 0;
    for (int i = 0; i < 1000; ++i) {
      // About half the coordinates zero, the rest integers in [-Z, Z].
      int64_t a = static_cast<int64_t>(uniform_below(key, 2 * i, 21)) - 10;
      if (uniform_below(key, 2 * i + 1, 2) == 0) a = 0;
      if (a == 0) continue;
      ++d;
      sum += std::pow(std::fabs(static_cast<double>(a)), p);
    }
    CHECK(sum >= static_cast<double>(d) * (1.0 - 1e-12));
    CHECK(sum <= (1.0 + eps) * static_cast<double>(d) * (1.0 + 1e-12));
  }
}
