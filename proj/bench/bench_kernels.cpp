// Kernel benchmark: OpenMP fan-out paths against their serial references.
// Every pair is required to produce bit-identical results (the parallel paths
// are fan-outs over independent work, not reductions), so besides the timing
// table this doubles as an end-to-end equivalence check on large inputs.
//
// Usage: bench_kernels [repeats]   (default 3; best-of-N wall times printed)

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pansketch/cropped_sum.hpp"
#include "pansketch/distinct.hpp"
#include "pansketch/experiment.hpp"
#include "pansketch/heavy_hitters.hpp"
#include "pansketch/rng.hpp"
#include "pansketch/stable.hpp"
#include "pansketch/stream.hpp"

namespace {

using namespace pansketch;
using Clock = std::chrono::steady_clock;

int g_mismatches = 0;

// Best-of-N wall time of `fn`, in seconds.
template <typename Fn>
double best_of(int repeats, Fn&& fn) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = Clock::now();
    fn();
    const double el = std::chrono::duration<double>(Clock::now() - t0).count();
    if (el < best) best = el;
  }
  return best;
}

void row(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-28s %10.3f ms %10.3f ms %7.2fx  %s\n", name,
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
              equal ? "identical" : "MISMATCH");
  if (!equal) ++g_mismatches;
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;

#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled at build time; both columns run serial code\n");
#endif
  std::printf("%-28s %13s %13s %8s  %s\n", "kernel", "serial", "parallel",
              "speedup", "check");

  // Calibration: r x m matrix norms plus the scale-factor Monte Carlo.
  StableParams params;
  params.p = 0.25;
  params.r = 64;
  params.m = 200000;
  params.master_seed = 9001;
  Calibration cal_serial, cal_parallel;
  const double cal_s =
      best_of(repeats, [&] { cal_serial = calibrate_serial(params, 200000); });
  const double cal_p =
      best_of(repeats, [&] { cal_parallel = calibrate(params, 200000); });
  row("calibrate 64x200k", cal_s, cal_p,
      serialize(cal_serial) == serialize(cal_parallel));

  // Distinct sketch ingest: every update touches all r columns.
  StreamGen gen;
  gen.kind = StreamGen::Kind::kUniform;
  gen.m = params.m;
  gen.length = 20000;
  gen.seed = 17;
  const Stream stream = generate(gen);
  const auto cal_ptr = std::make_shared<const Calibration>(cal_parallel);
  DistinctConfig cfg;
  cfg.calibration = cal_ptr;
  cfg.z = 2.0;
  cfg.approx_eps = 0.3;
  cfg.noise_mode = NoiseMode::kDisabled;
  NoisySketch sk_serial(cfg), sk_parallel(cfg);
  const double ing_s =
      best_of(repeats, [&] { sk_serial.ingest_serial(stream); });
  const double ing_p = best_of(repeats, [&] { sk_parallel.ingest(stream); });
  row("sketch ingest 20k x r=64", ing_s, ing_p,
      sk_serial.snapshot() == sk_parallel.snapshot());

  // Cropped-sum bulk ingest plus the ones-count reduction.
  StreamGen big;
  big.kind = StreamGen::Kind::kZipf;
  big.m = 2000000;
  big.length = 1000000;
  big.zipf_s = 1.1;
  big.seed = 23;
  const Stream heavy = generate(big);
  CroppedSumEstimator cs_serial(big.m, 16, 0.5, 4242);
  CroppedSumEstimator cs_parallel(big.m, 16, 0.5, 4242);
  const double cs_s =
      best_of(repeats, [&] { cs_serial.ingest_serial(heavy); });
  const double cs_p = best_of(repeats, [&] { cs_parallel.ingest(heavy); });
  row("cropped sum ingest 1M", cs_s, cs_p,
      cs_serial.snapshot() == cs_parallel.snapshot());

  uint64_t ones_serial = 0, ones_parallel = 0;
  const double oc_s =
      best_of(repeats, [&] { ones_serial = cs_serial.ones_count_serial(); });
  const double oc_p =
      best_of(repeats, [&] { ones_parallel = cs_parallel.ones_count(); });
  row("ones count h=2M", oc_s, oc_p, ones_serial == ones_parallel);

  // Heavy hitters in ensemble mode: members ingest member-parallel.
  HHConfig hh;
  hh.k = 20.0;
  hh.u0 = 1ULL << 20;
  hh.seed = 31;
  HHEstimator hh_serial(hh), hh_parallel(hh);
  StreamGen mid = big;
  mid.length = 200000;
  const Stream hh_stream = generate(mid);
  const double hh_s =
      best_of(repeats, [&] { hh_serial.ingest_serial(hh_stream); });
  const double hh_p =
      best_of(repeats, [&] { hh_parallel.ingest(hh_stream); });
  row("heavy hitters 200k x 21", hh_s, hh_p,
      hh_serial.snapshot() == hh_parallel.snapshot());

  // Experiment harness: trials fan out across threads, CSV order fixed.
  ExperimentSpec spec;
  spec.kind = ExperimentKind::kCroppedSum;
  spec.stream.kind = StreamGen::Kind::kZipf;
  spec.stream.m = 50000;
  spec.stream.length = 100000;
  spec.trials = 32;
  spec.seed = 47;
  spec.tau = 16;
  std::string csv_serial, csv_parallel;
  const double ex_s = best_of(repeats, [&] {
    std::ostringstream out;
    spec.parallel = false;
    run_experiment(spec, out);
    csv_serial = out.str();
  });
  const double ex_p = best_of(repeats, [&] {
    std::ostringstream out;
    spec.parallel = true;
    run_experiment(spec, out);
    csv_parallel = out.str();
  });
  row("experiment 32 trials", ex_s, ex_p, csv_serial == csv_parallel);

  if (g_mismatches != 0) {
    std::printf("%d kernel(s) diverged from the serial reference\n",
                g_mismatches);
  }
  return g_mismatches;
}
