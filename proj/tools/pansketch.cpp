// pansketch: pan-private streaming sketches over item/delta update streams.
//
// Subcommands:
//   calibrate      build and cache a p-stable calibration (sfp + row norms)
//   ingest         stream -> estimator snapshot
//   query          snapshot -> estimate (optionally after a suffix stream)
//   experiment     Monte Carlo accuracy runs, CSV output
//   attack         intrusion + reconstruction trials, CSV output
//   neighbor-test  differential privacy smoke test on the sketch state
//   dot, t2        one-shot cropped dot product / second moment
//
// Every command's output is a pure function of (flags, input files, seed);
// --timing opts into wall-clock columns and is documented as breaking that.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "pansketch/attack.hpp"
#include "pansketch/cropped_sum.hpp"
#include "pansketch/distinct.hpp"
#include "pansketch/dot_product.hpp"
#include "pansketch/experiment.hpp"
#include "pansketch/heavy_hitters.hpp"
#include "pansketch/rng.hpp"
#include "pansketch/snapshot.hpp"
#include "pansketch/stable.hpp"
#include "pansketch/stream.hpp"

namespace {

using namespace pansketch;

constexpr const char* kCalibrationEnv = "PANSKETCH_CALIBRATION";

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Output stream selection: "-" means stdout.
class OutFile {
 public:
  explicit OutFile(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::trunc);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
    }
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string calibration_path_or_env(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  const char* env = std::getenv(kCalibrationEnv);
  if (env != nullptr && *env != '\0') return env;
  throw std::runtime_error(
      "no calibration given: pass --calibration or set PANSKETCH_CALIBRATION");
}

struct DistinctFlags {
  std::string calibration;
  double z = 1.0;
  double alpha_total = 0.0;  // 0 = not set
  double eps = 0.25;
  uint64_t seed = 0;
  bool unsafe_no_noise = false;

  void attach(CLI::App* cmd, bool with_seed = true) {
    cmd->add_option("--calibration", calibration,
                    "calibration cache file (default: $PANSKETCH_CALIBRATION)");
    cmd->add_option("--z", z, "promised bound on max |a_i|")->capture_default_str();
    cmd->add_option("--alpha-total", alpha_total,
                    "total privacy budget alpha' (split over r columns)");
    cmd->add_option("--eps", eps, "multiplicative accuracy target")
        ->capture_default_str();
    if (with_seed) {
      cmd->add_option("--seed", seed, "noise seed")->capture_default_str();
    }
    cmd->add_flag("--unsafe-no-noise", unsafe_no_noise,
                  "run without privacy noise (refused otherwise)");
  }

  DistinctConfig make_config(std::shared_ptr<const Calibration> cal) const {
    DistinctConfig config;
    config.calibration = std::move(cal);
    config.z = z;
    config.approx_eps = eps;
    config.noise_seed = derive_seed(seed, kSaltNoise);
    if (unsafe_no_noise) {
      config.noise_mode = NoiseMode::kDisabled;
      config.alpha = 0.0;
    } else {
      if (!(alpha_total > 0.0)) {
        throw std::runtime_error(
            "refusing to run without noise: pass --alpha-total > 0 or "
            "--unsafe-no-noise");
      }
      config.noise_mode = NoiseMode::kStandard;
      config.alpha = alpha_total / config.calibration->params.r;
    }
    return config;
  }
};

StreamMode parse_mode(const std::string& mode) {
  if (mode == "turnstile") return StreamMode::kTurnstile;
  if (mode == "cashregister") return StreamMode::kCashRegister;
  throw std::runtime_error("unknown mode: " + mode +
                           " (want turnstile|cashregister)");
}

int cmd_calibrate(double p, uint32_t r, uint64_t m, uint64_t seed,
                  uint64_t samples, const std::string& out) {
  StableParams params;
  params.p = p;
  params.r = r;
  params.m = m;
  params.master_seed = derive_seed(seed, kSaltMatrix);
  const Calibration cal = calibrate(params, samples);
  save_calibration(out, cal);
  std::cout << "calibration written to " << out << "\n"
            << "  p=" << fmt(cal.params.p) << " r=" << cal.params.r
            << " m=" << cal.params.m << " samples=" << cal.n_samples << "\n"
            << "  sfp=" << fmt(cal.sfp)
            << " max_row_norm=" << fmt(cal.max_row_norm()) << "\n";
  return 0;
}

int cmd_ingest_distinct(const DistinctFlags& flags, const std::string& in,
                        const std::string& out, const std::string& mode) {
  const auto cal = std::make_shared<Calibration>(
      load_calibration(calibration_path_or_env(flags.calibration)));
  const DistinctConfig config = flags.make_config(cal);
  const Stream stream =
      load_updates(in, cal->params.m, parse_mode(mode));
  NoisySketch sketch(config);
  sketch.ingest(stream);
  write_file(out, sketch.snapshot());
  std::cout << "snapshot written to " << out << " (" << stream.size()
            << " updates, privacy spent " << fmt(sketch.privacy_spent())
            << ")\n";
  return 0;
}

int cmd_query_distinct(const DistinctFlags& flags, const std::string& snap,
                       const std::string& suffix) {
  const auto cal = std::make_shared<Calibration>(
      load_calibration(calibration_path_or_env(flags.calibration)));
  const DistinctConfig config = flags.make_config(cal);
  NoisySketch sketch = NoisySketch::restore(config, read_file(snap));
  if (!suffix.empty()) {
    sketch.ingest(load_updates(suffix, cal->params.m, StreamMode::kTurnstile));
  }
  std::cout << "estimate " << fmt(sketch.estimate()) << "\n";
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"pan-private streaming sketches"};
  app.require_subcommand(1);

  // ---- calibrate ----
  auto* calibrate_cmd = app.add_subcommand(
      "calibrate", "build a p-stable calibration cache (sfp + row norms)");
  double cal_p = 0.1;
  uint32_t cal_r = 101;
  uint64_t cal_m = 1024;
  uint64_t cal_seed = 0;
  uint64_t cal_samples = 1000000;
  std::string cal_out = "calibration.ppsk";
  calibrate_cmd->add_option("--p", cal_p, "stability index in (0, 1]")->required();
  calibrate_cmd->add_option("--r", cal_r, "sketch columns")->required();
  calibrate_cmd->add_option("--m", cal_m, "universe size")->required();
  calibrate_cmd->add_option("--seed", cal_seed, "master seed")
      ->capture_default_str();
  calibrate_cmd->add_option("--samples", cal_samples, "Monte Carlo samples for sfp")
      ->capture_default_str();
  calibrate_cmd->add_option("--out", cal_out, "output file")->capture_default_str();

  // ---- ingest ----
  auto* ingest_cmd = app.add_subcommand("ingest", "stream -> estimator snapshot");
  std::string ingest_estimator = "distinct";
  std::string ingest_in;
  std::string ingest_out = "snapshot.ppsk";
  std::string ingest_mode = "turnstile";
  DistinctFlags ingest_distinct;
  uint64_t ingest_tau = 8;
  double ingest_priv_eps = 0.5;
  uint64_t ingest_seed = 0;
  double ingest_k = 10.0, ingest_c = 2.0, ingest_beta = 0.5, ingest_delta = 0.1;
  double ingest_f1 = 0.0;
  uint64_t ingest_u0 = 0;
  uint64_t ingest_m = 0;
  std::optional<uint64_t> ingest_hash_key;
  ingest_cmd->add_option("--estimator", ingest_estimator,
                         "distinct|croppedsum|hh")
      ->capture_default_str();
  ingest_cmd->add_option("--in", ingest_in, "update file")->required();
  ingest_cmd->add_option("--out", ingest_out, "snapshot file")
      ->capture_default_str();
  ingest_cmd->add_option("--mode", ingest_mode, "turnstile|cashregister")
      ->capture_default_str();
  ingest_distinct.attach(ingest_cmd);
  ingest_cmd->add_option("--tau", ingest_tau, "croppedsum: modulus");
  ingest_cmd->add_option("--priv-eps", ingest_priv_eps,
                         "croppedsum/hh: privacy parameter");
  ingest_cmd->add_option("--state-seed", ingest_seed,
                         "croppedsum/hh: state initialization seed");
  ingest_cmd->add_option("--k", ingest_k, "hh: heavy-hitter level");
  ingest_cmd->add_option("--c", ingest_c, "hh: threshold separation");
  ingest_cmd->add_option("--beta", ingest_beta, "hh: undercount slack");
  ingest_cmd->add_option("--delta", ingest_delta, "hh: failure probability");
  ingest_cmd->add_option("--f1", ingest_f1, "hh: promised final total");
  ingest_cmd->add_option("--u0", ingest_u0, "hh: ensemble upper bound on F1");
  ingest_cmd->add_option("--m", ingest_m, "hh/croppedsum: item universe size");
  ingest_cmd->add_option("--hash-key", ingest_hash_key, "hh: explicit hash key");

  // ---- query ----
  auto* query_cmd = app.add_subcommand("query", "snapshot -> estimate");
  std::string query_estimator = "distinct";
  std::string query_snapshot;
  std::string query_suffix;
  DistinctFlags query_distinct;
  uint64_t query_seed = 0;
  double query_k = 10.0, query_c = 2.0, query_beta = 0.5, query_delta = 0.1;
  double query_priv_eps = 0.5;
  double query_f1 = 0.0;
  uint64_t query_u0 = 0;
  std::optional<uint64_t> query_hash_key;
  query_cmd->add_option("--estimator", query_estimator, "distinct|croppedsum|hh")
      ->capture_default_str();
  query_cmd->add_option("--snapshot", query_snapshot, "snapshot file")->required();
  query_cmd->add_option("--suffix", query_suffix,
                        "optional update file applied before the estimate");
  query_distinct.attach(query_cmd);
  query_cmd->add_option("--state-seed", query_seed,
                        "croppedsum/hh: continuation randomness seed");
  query_cmd->add_option("--k", query_k, "hh: heavy-hitter level");
  query_cmd->add_option("--c", query_c, "hh: threshold separation");
  query_cmd->add_option("--beta", query_beta, "hh: undercount slack");
  query_cmd->add_option("--delta", query_delta, "hh: failure probability");
  query_cmd->add_option("--priv-eps", query_priv_eps, "hh: privacy parameter");
  query_cmd->add_option("--f1", query_f1, "hh: promised final total");
  query_cmd->add_option("--u0", query_u0, "hh: ensemble upper bound on F1");
  query_cmd->add_option("--hash-key", query_hash_key, "hh: explicit hash key");

  // ---- experiment ----
  auto* exp_cmd = app.add_subcommand("experiment", "Monte Carlo accuracy runs");
  exp_cmd->require_subcommand(1);
  struct ExpFlags {
    uint64_t trials = 100;
    uint64_t seed = 0;
    std::string out = "-";
    uint64_t m = 100000;
    std::string gen = "binary";
    uint64_t d = 500;
    uint64_t t = 10000;
    double zipf_s = 1.2;
    bool timing = false;
    bool serial = false;
  };
  auto attach_common = [](CLI::App* cmd, ExpFlags& flags) {
    cmd->add_option("--trials", flags.trials)->capture_default_str();
    cmd->add_option("--seed", flags.seed)->capture_default_str();
    cmd->add_option("--out", flags.out, "CSV output path, - for stdout")
        ->capture_default_str();
    cmd->add_option("--m", flags.m, "universe size")->capture_default_str();
    cmd->add_option("--gen", flags.gen, "binary|uniform|zipf")
        ->capture_default_str();
    cmd->add_option("--d", flags.d, "binary: distinct support size")
        ->capture_default_str();
    cmd->add_option("--t", flags.t, "uniform/zipf: stream length")
        ->capture_default_str();
    cmd->add_option("--zipf-s", flags.zipf_s, "zipf exponent")
        ->capture_default_str();
    cmd->add_flag("--timing", flags.timing,
                  "record wall-clock per trial (breaks byte-determinism)");
    cmd->add_flag("--serial", flags.serial, "disable the parallel trial loop");
  };

  auto* exp_distinct = exp_cmd->add_subcommand("distinct");
  ExpFlags exp_distinct_flags;
  attach_common(exp_distinct, exp_distinct_flags);
  DistinctFlags exp_distinct_cfg;
  uint32_t exp_distinct_r = 101;
  exp_distinct->add_option("--r", exp_distinct_r, "columns when auto-calibrating")
      ->capture_default_str();
  exp_distinct_cfg.attach(exp_distinct, /*with_seed=*/false);

  auto* exp_croppedsum = exp_cmd->add_subcommand("croppedsum");
  ExpFlags exp_cs_flags;
  attach_common(exp_croppedsum, exp_cs_flags);
  uint64_t exp_cs_tau = 8;
  double exp_cs_eps = 0.5;
  exp_croppedsum->add_option("--tau", exp_cs_tau)->capture_default_str();
  exp_croppedsum->add_option("--priv-eps", exp_cs_eps)->capture_default_str();

  auto* exp_hh = exp_cmd->add_subcommand("hh");
  ExpFlags exp_hh_flags;
  attach_common(exp_hh, exp_hh_flags);
  double exp_hh_k = 10.0, exp_hh_c = 2.0, exp_hh_beta = 0.5, exp_hh_delta = 0.1;
  double exp_hh_eps = 0.5;
  double exp_hh_f1 = 0.0;
  uint64_t exp_hh_u0 = 0;
  exp_hh->add_option("--k", exp_hh_k)->capture_default_str();
  exp_hh->add_option("--c", exp_hh_c)->capture_default_str();
  exp_hh->add_option("--beta", exp_hh_beta)->capture_default_str();
  exp_hh->add_option("--delta", exp_hh_delta)->capture_default_str();
  exp_hh->add_option("--priv-eps", exp_hh_eps)->capture_default_str();
  exp_hh->add_option("--f1", exp_hh_f1, "promised final total");
  exp_hh->add_option("--u0", exp_hh_u0, "ensemble upper bound");

  auto* exp_dot = exp_cmd->add_subcommand("dot");
  ExpFlags exp_dot_flags;
  attach_common(exp_dot, exp_dot_flags);
  uint64_t exp_dot_tau = 16;
  double exp_dot_eps = 0.5;
  exp_dot->add_option("--tau", exp_dot_tau, "perfect square crop")
      ->capture_default_str();
  exp_dot->add_option("--priv-eps", exp_dot_eps)->capture_default_str();

  auto* exp_t2 = exp_cmd->add_subcommand("t2");
  ExpFlags exp_t2_flags;
  attach_common(exp_t2, exp_t2_flags);
  uint64_t exp_t2_tau = 16;
  double exp_t2_eps = 0.5;
  exp_t2->add_option("--tau", exp_t2_tau, "perfect square crop")
      ->capture_default_str();
  exp_t2->add_option("--priv-eps", exp_t2_eps)->capture_default_str();

  // ---- attack ----
  auto* attack_cmd = app.add_subcommand("attack", "intrusion reconstruction trials");
  attack_cmd->require_subcommand(1);
  AttackSpec attack_spec;
  std::string attack_target = "exact";
  std::string attack_out = "-";
  std::string attack_alpha_total = "1";
  auto attach_attack = [&](CLI::App* cmd) {
    cmd->add_option("--target", attack_target, "exact|ppdistinct")
        ->capture_default_str();
    cmd->add_option("--n", attack_spec.n, "secret length")->capture_default_str();
    cmd->add_option("--trials", attack_spec.trials)->capture_default_str();
    cmd->add_option("--seed", attack_spec.seed)->capture_default_str();
    cmd->add_option("--alpha-total", attack_alpha_total,
                    "sketch privacy budget alpha' (inf = noiseless)")
        ->capture_default_str();
    cmd->add_option("--out", attack_out, "CSV output path, - for stdout")
        ->capture_default_str();
  };
  auto* attack_union = attack_cmd->add_subcommand("union", "sparse union decoder");
  attach_attack(attack_union);
  attack_union->add_option("--l", attack_spec.l, "max support size")
      ->capture_default_str();
  attack_union->add_option("--alpha1", attack_spec.alpha1,
                           "promise: multiplicative error")
      ->capture_default_str();
  attack_union->add_option("--alpha2", attack_spec.alpha2,
                           "promise: additive error")
      ->capture_default_str();
  auto* attack_dot = attack_cmd->add_subcommand("dotproduct",
                                                "random-query least squares");
  attach_attack(attack_dot);
  attack_dot->add_option("--queries", attack_spec.num_queries)
      ->capture_default_str();

  // ---- neighbor-test ----
  auto* smoke_cmd =
      app.add_subcommand("neighbor-test", "differential privacy smoke test");
  double smoke_alpha = 0.5;
  uint64_t smoke_runs = 100000;
  uint32_t smoke_bins = 24;
  uint64_t smoke_min_count = 500;
  uint64_t smoke_seed = 0;
  smoke_cmd->add_option("--alpha", smoke_alpha, "per-column budget")
      ->capture_default_str();
  smoke_cmd->add_option("--runs", smoke_runs)->capture_default_str();
  smoke_cmd->add_option("--bins", smoke_bins)->capture_default_str();
  smoke_cmd->add_option("--min-count", smoke_min_count,
                        "only check bins with at least this many samples")
      ->capture_default_str();
  smoke_cmd->add_option("--seed", smoke_seed)->capture_default_str();

  // ---- dot / t2 one-shots ----
  auto* dot_cmd = app.add_subcommand("dot", "cropped dot product of two streams");
  uint64_t dot_tau = 16;
  double dot_eps = 0.5;
  uint64_t dot_m = 1024;
  uint64_t dot_seed = 0;
  std::string dot_left, dot_right;
  dot_cmd->add_option("--tau", dot_tau, "perfect square crop")->capture_default_str();
  dot_cmd->add_option("--priv-eps", dot_eps)->capture_default_str();
  dot_cmd->add_option("--m", dot_m, "universe size")->capture_default_str();
  dot_cmd->add_option("--seed", dot_seed)->capture_default_str();
  dot_cmd->add_option("left", dot_left, "left update file")->required();
  dot_cmd->add_option("right", dot_right, "right update file")->required();

  auto* t2_cmd = app.add_subcommand("t2", "cropped second moment of a stream");
  uint64_t t2_tau = 16;
  double t2_eps = 0.5;
  uint64_t t2_m = 1024;
  uint64_t t2_seed = 0;
  std::string t2_in;
  t2_cmd->add_option("--tau", t2_tau, "perfect square crop")->capture_default_str();
  t2_cmd->add_option("--priv-eps", t2_eps)->capture_default_str();
  t2_cmd->add_option("--m", t2_m, "universe size")->capture_default_str();
  t2_cmd->add_option("--seed", t2_seed)->capture_default_str();
  t2_cmd->add_option("input", t2_in, "update file")->required();

  CLI11_PARSE(app, argc, argv);

  if (calibrate_cmd->parsed()) {
    return cmd_calibrate(cal_p, cal_r, cal_m, cal_seed, cal_samples, cal_out);
  }

  if (ingest_cmd->parsed()) {
    if (ingest_estimator == "distinct") {
      return cmd_ingest_distinct(ingest_distinct, ingest_in, ingest_out,
                                 ingest_mode);
    }
    if (ingest_estimator == "croppedsum") {
      if (ingest_m == 0) throw std::runtime_error("croppedsum ingest needs --m");
      CroppedSumEstimator est(ingest_m, ingest_tau, ingest_priv_eps,
                              derive_seed(ingest_seed, kSaltInit));
      est.ingest(load_updates(ingest_in, ingest_m, StreamMode::kCashRegister));
      write_file(ingest_out, est.snapshot());
      std::cout << "snapshot written to " << ingest_out << "\n";
      return 0;
    }
    if (ingest_estimator == "hh") {
      if (ingest_m == 0) throw std::runtime_error("hh ingest needs --m");
      HHConfig config;
      config.k = ingest_k;
      config.c = ingest_c;
      config.beta = ingest_beta;
      config.delta = ingest_delta;
      config.priv_eps = ingest_priv_eps;
      config.seed = derive_seed(ingest_seed, kSaltInit);
      config.hash_key = ingest_hash_key;
      if (ingest_f1 > 0.0) config.f1 = ingest_f1;
      if (ingest_u0 > 0) config.u0 = ingest_u0;
      HHEstimator est(config);
      est.ingest(load_updates(ingest_in, ingest_m, StreamMode::kCashRegister));
      write_file(ingest_out, est.snapshot());
      std::cout << "snapshot written to " << ingest_out << " (tracked F1 "
                << fmt(est.tracked_f1()) << ", privacy spent "
                << fmt(est.privacy_spent()) << ")\n";
      return 0;
    }
    throw std::runtime_error("unknown estimator: " + ingest_estimator);
  }

  if (query_cmd->parsed()) {
    if (query_estimator == "distinct") {
      return cmd_query_distinct(query_distinct, query_snapshot, query_suffix);
    }
    if (query_estimator == "croppedsum") {
      CroppedSumEstimator est = CroppedSumEstimator::restore(
          read_file(query_snapshot), derive_seed(query_seed, kSaltRestore));
      if (!query_suffix.empty()) {
        est.ingest(load_updates(query_suffix, est.h(), StreamMode::kCashRegister));
      }
      std::cout << "estimate " << fmt(est.estimate()) << "\n";
      return 0;
    }
    if (query_estimator == "hh") {
      HHConfig config;
      config.k = query_k;
      config.c = query_c;
      config.beta = query_beta;
      config.delta = query_delta;
      config.priv_eps = query_priv_eps;
      config.seed = derive_seed(query_seed, kSaltInit);
      config.hash_key = query_hash_key;
      if (query_f1 > 0.0) config.f1 = query_f1;
      if (query_u0 > 0) config.u0 = query_u0;
      HHEstimator est = HHEstimator::restore(
          config, read_file(query_snapshot), derive_seed(query_seed, kSaltRestore));
      std::cout << "estimate " << fmt(est.estimate()) << "\n";
      return 0;
    }
    throw std::runtime_error("unknown estimator: " + query_estimator);
  }

  auto make_stream_gen = [](const ExpFlags& flags) {
    StreamGen gen;
    gen.m = flags.m;
    if (flags.gen == "binary") {
      gen.kind = StreamGen::Kind::kBinarySupport;
      gen.d = flags.d;
    } else if (flags.gen == "uniform") {
      gen.kind = StreamGen::Kind::kUniform;
      gen.length = flags.t;
    } else if (flags.gen == "zipf") {
      gen.kind = StreamGen::Kind::kZipf;
      gen.length = flags.t;
      gen.zipf_s = flags.zipf_s;
    } else {
      throw std::runtime_error("unknown generator: " + flags.gen);
    }
    return gen;
  };

  auto finish_experiment = [](const ExperimentSpec& spec, const std::string& out) {
    OutFile sink(out);
    const ExperimentSummary summary = run_experiment(spec, sink.get());
    std::cerr << "trials=" << summary.trials
              << " mean_abs_error=" << fmt(summary.mean_abs_error)
              << " p90_abs_error=" << fmt(summary.p90_abs_error)
              << " frac_within_bound=" << fmt(summary.frac_within_bound) << "\n";
    return 0;
  };

  if (exp_distinct->parsed()) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::kDistinct;
    spec.stream = make_stream_gen(exp_distinct_flags);
    spec.trials = exp_distinct_flags.trials;
    spec.seed = exp_distinct_flags.seed;
    spec.record_timing = exp_distinct_flags.timing;
    spec.parallel = !exp_distinct_flags.serial;
    spec.z = exp_distinct_cfg.z;
    spec.approx_eps = exp_distinct_cfg.eps;
    spec.noise_disabled = exp_distinct_cfg.unsafe_no_noise;
    if (!spec.noise_disabled) {
      if (!(exp_distinct_cfg.alpha_total > 0.0)) {
        throw std::runtime_error(
            "refusing to run without noise: pass --alpha-total > 0 or "
            "--unsafe-no-noise");
      }
      spec.alpha_total = exp_distinct_cfg.alpha_total;
    }
    if (!exp_distinct_cfg.calibration.empty() ||
        std::getenv(kCalibrationEnv) != nullptr) {
      spec.calibration = std::make_shared<Calibration>(
          load_calibration(calibration_path_or_env(exp_distinct_cfg.calibration)));
    } else {
      // Auto-calibrate: p sits safely inside p * log2(Z) < eps.
      StableParams params;
      params.p = spec.z > 1.0
                     ? 0.95 * spec.approx_eps / std::log2(spec.z)
                     : 0.95 * spec.approx_eps;
      params.p = std::min(params.p, 1.0);
      params.r = exp_distinct_r;
      params.m = exp_distinct_flags.m;
      params.master_seed = derive_seed(exp_distinct_flags.seed, kSaltMatrix);
      spec.calibration =
          std::make_shared<Calibration>(calibrate(params, 200000));
    }
    return finish_experiment(spec, exp_distinct_flags.out);
  }
  if (exp_croppedsum->parsed()) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::kCroppedSum;
    spec.stream = make_stream_gen(exp_cs_flags);
    spec.trials = exp_cs_flags.trials;
    spec.seed = exp_cs_flags.seed;
    spec.record_timing = exp_cs_flags.timing;
    spec.parallel = !exp_cs_flags.serial;
    spec.tau = exp_cs_tau;
    spec.priv_eps = exp_cs_eps;
    return finish_experiment(spec, exp_cs_flags.out);
  }
  if (exp_hh->parsed()) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::kHeavyHitters;
    spec.stream = make_stream_gen(exp_hh_flags);
    spec.trials = exp_hh_flags.trials;
    spec.seed = exp_hh_flags.seed;
    spec.record_timing = exp_hh_flags.timing;
    spec.parallel = !exp_hh_flags.serial;
    spec.hh_k = exp_hh_k;
    spec.hh_c = exp_hh_c;
    spec.hh_beta = exp_hh_beta;
    spec.hh_delta = exp_hh_delta;
    spec.priv_eps = exp_hh_eps;
    if (exp_hh_f1 > 0.0) spec.hh_f1 = exp_hh_f1;
    if (exp_hh_u0 > 0) spec.hh_u0 = exp_hh_u0;
    return finish_experiment(spec, exp_hh_flags.out);
  }
  if (exp_dot->parsed()) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::kDot;
    spec.stream = make_stream_gen(exp_dot_flags);
    spec.stream_right = spec.stream;
    spec.trials = exp_dot_flags.trials;
    spec.seed = exp_dot_flags.seed;
    spec.record_timing = exp_dot_flags.timing;
    spec.parallel = !exp_dot_flags.serial;
    spec.tau = exp_dot_tau;
    spec.priv_eps = exp_dot_eps;
    return finish_experiment(spec, exp_dot_flags.out);
  }
  if (exp_t2->parsed()) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::kT2;
    spec.stream = make_stream_gen(exp_t2_flags);
    spec.trials = exp_t2_flags.trials;
    spec.seed = exp_t2_flags.seed;
    spec.record_timing = exp_t2_flags.timing;
    spec.parallel = !exp_t2_flags.serial;
    spec.tau = exp_t2_tau;
    spec.priv_eps = exp_t2_eps;
    return finish_experiment(spec, exp_t2_flags.out);
  }

  if (attack_union->parsed() || attack_dot->parsed()) {
    attack_spec.kind = attack_union->parsed() ? AttackSpec::Kind::kUnion
                                              : AttackSpec::Kind::kDotProduct;
    if (attack_target == "exact") {
      attack_spec.target = AttackSpec::Target::kExact;
    } else if (attack_target == "ppdistinct") {
      attack_spec.target = AttackSpec::Target::kPPDistinct;
    } else {
      throw std::runtime_error("unknown target: " + attack_target);
    }
    if (attack_alpha_total == "inf") {
      attack_spec.alpha_total = std::numeric_limits<double>::infinity();
    } else {
      attack_spec.alpha_total = std::stod(attack_alpha_total);
    }
    const std::vector<AttackTrialRow> rows = run_attack(attack_spec);
    OutFile sink(attack_out);
    write_attack_csv(sink.get(), rows);
    return 0;
  }

  if (smoke_cmd->parsed()) {
    const DpSmokeResult result = dp_smoke_test(smoke_alpha, smoke_runs,
                                               smoke_bins, smoke_min_count,
                                               smoke_seed);
    std::cout << "alpha=" << fmt(result.alpha) << " runs=" << result.runs
              << " bins_checked=" << result.bins_checked
              << " max_log_ratio=" << fmt(result.max_log_ratio)
              << " allowance_at_worst=" << fmt(result.worst_allowance) << "\n"
              << (result.pass ? "PASS" : "FAIL")
              << ": state histograms respect the e^alpha bound\n";
    return result.pass ? 0 : 1;
  }

  if (dot_cmd->parsed()) {
    DotProductEstimator est(dot_m, dot_tau, dot_eps,
                            derive_seed(dot_seed, kSaltInit));
    est.ingest_left(load_updates(dot_left, dot_m, StreamMode::kCashRegister));
    est.ingest_right(load_updates(dot_right, dot_m, StreamMode::kCashRegister));
    std::cout << "estimate " << fmt(est.estimate()) << "\n";
    return 0;
  }
  if (t2_cmd->parsed()) {
    T2Estimator est(t2_m, t2_tau, t2_eps, derive_seed(t2_seed, kSaltInit));
    est.ingest(load_updates(t2_in, t2_m, StreamMode::kCashRegister));
    std::cout << "estimate " << fmt(est.estimate()) << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
