// Command-line driver: dataset generation, training, evaluation, the
// invariant suite, the N-scaling benchmark, and EOH visualization.
//
// Exit codes: 0 success, 1 invariant failure, 2 I/O error, 3 config error.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "histoport/checks.hpp"
#include "histoport/io.hpp"
#include "histoport/viz.hpp"

namespace fs = std::filesystem;
using namespace histoport;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitIo = 2;
constexpr int kExitConfig = 3;

TrainConfig config_from(const std::string& path) {
  return path.empty() ? TrainConfig{} : load_train_config(path);
}

int cmd_gen_data(const std::string& config_path, uint64_t seed,
                 const std::string& out, int episodes) {
  TrainConfig cfg = config_from(config_path);
  write_dataset(out, episodes, seed, cfg.env, cfg.policy.n);
  std::printf("wrote %d episodes to %s (seed base %llu)\n", episodes,
              out.c_str(), (unsigned long long)seed);
  return kExitOk;
}

int cmd_train(const std::string& config_path, uint64_t seed, bool seed_set,
              const std::string& data_dir, const std::string& out) {
  TrainConfig cfg = config_from(config_path);
  if (seed_set) cfg.seed = seed;
  std::vector<DemoStep> dataset = load_dataset(data_dir, cfg.env);
  std::printf("loaded %zu demo steps from %s\n", dataset.size(), data_dir.c_str());

  PolicyBundle policy(cfg.policy);
  TrainResult result = train(cfg, dataset, policy);

  fs::create_directories(out);
  save_checkpoint(out, policy, cfg);
  write_metrics_csv(fs::path(out) / "metrics.csv", result.metrics);
  std::printf("trained %d iterations; best success %.1f at iteration %d\n",
              cfg.iterations, result.best_success, result.best_iteration);
  std::printf("checkpoint written to %s\n", out.c_str());
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, uint64_t seed, int episodes,
             bool oracle, const std::string& config_path) {
  EvalResult r;
  int n = 36;
  if (oracle) {
    TrainConfig cfg = config_from(config_path);
    n = cfg.policy.n;
    int ok = 0;
    double terr = 0, rerr = 0;
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < episodes; ++i) {
      Scene scene = generate_episode(seed + uint64_t(i), cfg.env);
      OracleActions acts = oracle_actions(scene, n);
      Scene after = apply_action(scene, acts.pick, acts.place, n);
      SuccessReport rep = check_success(after);
      ok += rep.success ? 1 : 0;
      terr += rep.translation_error;
      rerr += std::abs(rep.rotation_error);
    }
    r.episodes = episodes;
    r.success_rate = 100.0 * ok / std::max(1, episodes);
    r.mean_translation_error = terr / std::max(1, episodes);
    r.mean_rotation_error = rerr / std::max(1, episodes);
    r.mean_inference_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count() /
                          std::max(1, episodes);
  } else {
    TrainConfig cfg;
    PolicyBundle policy = load_policy(checkpoint, &cfg);
    n = cfg.policy.n;
    r = evaluate(policy, episodes, seed, cfg.env);
  }
  std::printf("episodes:               %d\n", r.episodes);
  std::printf("success rate:           %.1f / 100\n", r.success_rate);
  std::printf("mean translation error: %.3f px\n", r.mean_translation_error);
  std::printf("mean rotation error:    %.4f rad\n", r.mean_rotation_error);
  std::printf("mean inference time:    %.2f ms\n", r.mean_inference_ms);
  std::printf("episodes,success_rate,mean_translation_error,"
              "mean_rotation_error,mean_inference_ms,N\n");
  std::printf("%d,%.1f,%.3f,%.4f,%.2f,%d\n", r.episodes, r.success_rate,
              r.mean_translation_error, r.mean_rotation_error,
              r.mean_inference_ms, n);
  return kExitOk;
}

int cmd_check(uint64_t seed, const std::string& inject_fault) {
  std::vector<CheckResult> results = run_invariant_suite(seed, inject_fault);
  bool all = true;
  for (const CheckResult& r : results) {
    std::printf("%-44s %s  residual=%.3g%s%s\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.residual, r.detail.empty() ? "" : "  ",
                r.detail.c_str());
    all = all && r.pass;
  }
  std::printf("%s\n", all ? "all invariants hold" : "invariant failure");
  return all ? kExitOk : kExitInvariant;
}

int cmd_bench(const std::string& config_path, const std::vector<int>& n_list,
              int repeats, const std::string& out) {
  TrainConfig base = config_from(config_path);
  struct Row {
    int n;
    size_t params;
    double median_ms;
    size_t bytes;
  };
  std::vector<Row> rows;
  for (int n : n_list) {
    TrainConfig cfg = base;
    cfg.policy.n = n;
    if (n % cfg.policy.m != 0)
      throw ConfigError("bench N=" + std::to_string(n) + " not divisible by M");
    if (n / 2 < 1 + 2 * cfg.policy.jc_angle)
      throw ConfigError("bench N=" + std::to_string(n) + " below the Nyquist bound");
    PolicyBundle policy(cfg.policy);
    Rng rng(hash64(cfg.seed ^ 0xbe7cULL));
    policy.init(rng);
    Scene scene = generate_episode(1234, cfg.env);
    Tensor obs = render_observation(scene);

    tensor_bytes_reset_peak();
    std::vector<double> times;
    for (int rep = 0; rep < std::max(1, repeats); ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      (void)policy.select_actions(obs);
      auto t1 = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    Row row;
    row.n = n;
    row.params = policy.parameter_count();
    row.median_ms = times[times.size() / 2];
    row.bytes = tensor_bytes_peak();
    rows.push_back(row);
  }

  std::string csv = "N,params,median_ms,tensor_bytes\n";
  char buf[160];
  for (const Row& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%zu,%.2f,%zu\n", r.n, r.params,
                  r.median_ms, r.bytes);
    csv += buf;
  }
  std::printf("%s", csv.c_str());
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw IoError("cannot write " + out);
    f << csv;
  }
  for (const Row& r : rows)
    if (r.params != rows[0].params) {
      std::printf("parameter count varies with N (%zu vs %zu)\n", r.params,
                  rows[0].params);
      return kExitInvariant;
    }
  std::printf("parameter count is N-independent: %zu\n", rows[0].params);
  return kExitOk;
}

int cmd_viz_eoh(const std::string& checkpoint, uint64_t seed, int stride,
                const std::string& out) {
  TrainConfig cfg;
  PolicyBundle policy = load_policy(checkpoint, &cfg);
  Scene scene = generate_episode(seed, cfg.env);
  Tensor obs = render_observation(scene);
  Tensor eoh = policy.scene_descriptor_map(obs);
  fs::create_directories(out);
  write_ppm_heatmap(fs::path(out) / "eoh_max.ppm", max_bin_map(eoh),
                    eoh.shape()[1], eoh.shape()[2]);
  write_eoh_svg(fs::path(out) / "eoh_arrows.svg", eoh, stride);
  std::printf("wrote %s/{eoh_max.ppm, eoh_arrows.svg} (%dx%d map, %d bins)\n",
              out.c_str(), eoh.shape()[1], eoh.shape()[2], eoh.shape()[0]);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"histoport: orientation-histogram pick-and-place at desk scale"};
  app.require_subcommand(1);

  std::string config_path, out, data_dir, checkpoint, inject_fault;
  uint64_t seed = 0;
  int episodes = 10, repeats = 3, stride = 8;
  bool oracle = false;
  std::vector<int> n_list = {36, 72, 120, 180};

  CLI::App* gen = app.add_subcommand("gen-data", "write an expert demo dataset");
  gen->add_option("--config", config_path, "JSON config path");
  gen->add_option("--seed", seed, "scene seed base");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--episodes", episodes, "episode count");

  CLI::App* tr = app.add_subcommand("train", "behavior-clone a policy");
  tr->add_option("--config", config_path, "JSON config path");
  CLI::Option* tr_seed = tr->add_option("--seed", seed, "training seed override");
  tr->add_option("--data", data_dir, "dataset directory")->required();
  tr->add_option("--out", out, "checkpoint output directory")->required();

  CLI::App* ev = app.add_subcommand("eval", "roll out a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "checkpoint directory");
  ev->add_option("--config", config_path, "JSON config (oracle mode)");
  ev->add_option("--seed", seed, "evaluation seed base");
  ev->add_option("--episodes", episodes, "episode count");
  ev->add_flag("--oracle", oracle, "evaluate the scripted oracle instead");

  CLI::App* ck = app.add_subcommand("check", "run the invariant suite");
  ck->add_option("--seed", seed, "suite seed");
  ck->add_option("--inject-fault", inject_fault,
                 "deliberately corrupt one construction (testing)");

  CLI::App* be = app.add_subcommand("bench", "parameter/time scaling over N");
  be->add_option("--config", config_path, "JSON config path");
  be->add_option("--n-list", n_list, "N values to sweep");
  be->add_option("--repeats", repeats, "timing repeats per N");
  be->add_option("--out", out, "CSV output path");

  CLI::App* vz = app.add_subcommand("viz-eoh", "render the scene EOH map");
  vz->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  vz->add_option("--seed", seed, "episode seed");
  vz->add_option("--stride", stride, "arrow stride in pixels");
  vz->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, seed, out, episodes);
    if (tr->parsed())
      return cmd_train(config_path, seed, tr_seed->count() > 0, data_dir, out);
    if (ev->parsed()) {
      if (!oracle && checkpoint.empty())
        throw ConfigError("eval needs --checkpoint (or --oracle)");
      return cmd_eval(checkpoint, seed, episodes, oracle, config_path);
    }
    if (ck->parsed()) return cmd_check(seed, inject_fault);
    if (be->parsed()) return cmd_bench(config_path, n_list, repeats, out);
    if (vz->parsed()) return cmd_viz_eoh(checkpoint, seed, stride, out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return kExitConfig;
}
