#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "histoport/checks.hpp"
#include "histoport/io.hpp"
#include "histoport/viz.hpp"
#include "testing_util.hpp"

using namespace histoport;
namespace fs = std::filesystem;
using testutil::max_abs_diff;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("histoport_test_" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.policy.n = 8;
  cfg.policy.m = 4;
  cfg.policy.crop = 17;
  cfg.policy.place_crop = 9;
  cfg.policy.height = cfg.policy.width = 32;
  cfg.policy.jc_angle = 1;
  cfg.policy.jc_place = 1;
  cfg.env.height = cfg.env.width = 32;
  cfg.env.min_diameter = 6;
  cfg.env.max_diameter = 8;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("tensor files round-trip bit-exactly") {
  TempDir tmp;
  Rng rng(3);
  Tensor t = Tensor::randn({3, 5, 7}, rng, 2.0, false);
  fs::path p = tmp.path / "t.tns";
  save_tensor(p, t);
  Tensor back = load_tensor(p);
  CHECK(back.shape() == t.shape());
  CHECK(max_abs_diff(back, t) == 0.0);
}

TEST_CASE("tensor loading fails closed") {
  TempDir tmp;
  fs::path p = tmp.path / "bad.tns";
  CHECK_THROWS_AS(load_tensor(p), IoError);  // missing file

  std::ofstream(p, std::ios::binary) << "NOPE";
  CHECK_THROWS_AS(load_tensor(p), IoError);  // wrong magic

  Tensor t = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  save_tensor(p, t);
  auto bytes = slurp(p);
  std::ofstream(p, std::ios::binary) << bytes.substr(0, bytes.size() - 9);
  CHECK_THROWS_AS(load_tensor(p), IoError);  // truncated payload
}

TEST_CASE("action records round-trip through json") {
  TempDir tmp;
  ActionRecord rec;
  rec.pick = {3, 4, 5};
  rec.place = {6, 7, 8};
  rec.n = 36;
  rec.scene_seed = 123456789ULL;
  fs::path p = tmp.path / "act.json";
  save_actions(p, rec);
  ActionRecord back = load_actions(p);
  CHECK(back.pick == rec.pick);
  CHECK(back.place == rec.place);
  CHECK(back.n == rec.n);
  CHECK(back.scene_seed == rec.scene_seed);

  std::ofstream(p) << "{ not json";
  CHECK_THROWS_AS(load_actions(p), IoError);
}

TEST_CASE("datasets are written per episode and reload consistently") {
  TempDir tmp;
  TrainConfig cfg = tiny_config();
  write_dataset(tmp.path / "demos", 4, 900, cfg.env, cfg.policy.n);
  CHECK(fs::exists(tmp.path / "demos" / "episode_00000" / "obs_0.tns"));
  CHECK(fs::exists(tmp.path / "demos" / "episode_00003" / "act_0.json"));

  auto steps = load_dataset(tmp.path / "demos", cfg.env);
  REQUIRE(steps.size() == 4);
  for (size_t i = 0; i < steps.size(); ++i) {
    CHECK(steps[i].obs.shape() == Shape{1, 32, 32});
    // Labels must equal the oracle recomputed from the stored scene seed.
    OracleActions acts = oracle_actions(steps[i].scene, cfg.policy.n);
    CHECK(steps[i].pick == acts.pick);
    CHECK(steps[i].place == acts.place);
    CHECK(steps[i].scene.seed == 900 + i);
  }
  CHECK_THROWS_AS(load_dataset(tmp.path / "missing", cfg.env), IoError);
}

TEST_CASE("train configs parse strictly") {
  TrainConfig cfg = parse_train_config(
      R"({"iterations": 12, "learning_rate": 0.5, "n": 12, "m": 4,
          "mode": "invariant", "height": 32, "width": 32})");
  CHECK(cfg.iterations == 12);
  CHECK(cfg.learning_rate == 0.5);
  CHECK(cfg.policy.n == 12);
  CHECK(cfg.policy.mode == PlaceMode::kInvariant);
  CHECK(cfg.env.height == 32);  // env mirrors the policy board size

  CHECK_THROWS_AS(parse_train_config(R"({"iterations": 5, "typo_key": 1})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"mode": "other"})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"iterations": "many"})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("not json"), ConfigError);

  // Default round-trip through the serializer.
  TrainConfig d;
  TrainConfig back = parse_train_config(train_config_json(d));
  CHECK(back.iterations == d.iterations);
  CHECK(back.policy.n == d.policy.n);
  CHECK(back.env.max_iou == d.env.max_iou);
}

TEST_CASE("checkpoints restore the exact policy") {
  TempDir tmp;
  TrainConfig cfg = tiny_config();
  PolicyBundle policy(cfg.policy);
  Rng rng(17);
  policy.init(rng);
  save_checkpoint(tmp.path / "ckpt", policy, cfg);
  CHECK(fs::exists(tmp.path / "ckpt" / "manifest.json"));
  CHECK(fs::exists(tmp.path / "ckpt" / "weights.bin"));

  TrainConfig loaded_cfg;
  PolicyBundle back = load_policy(tmp.path / "ckpt", &loaded_cfg);
  CHECK(loaded_cfg.policy.n == cfg.policy.n);
  auto pa = policy.parameters(), pb = back.parameters();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(max_abs_diff(pa[i], pb[i]) == 0.0);

  Rng orng(23);
  Tensor obs = Tensor::randn({1, 32, 32}, orng, 0.3, false);
  auto [p1, q1] = policy.select_actions(obs);
  auto [p2, q2] = back.select_actions(obs);
  CHECK(p1 == p2);
  CHECK(q1 == q2);
}

TEST_CASE("checkpoint corruption is detected by the checksum") {
  TempDir tmp;
  TrainConfig cfg = tiny_config();
  PolicyBundle policy(cfg.policy);
  Rng rng(19);
  policy.init(rng);
  save_checkpoint(tmp.path / "ckpt", policy, cfg);

  fs::path wpath = tmp.path / "ckpt" / "weights.bin";
  auto bytes = slurp(wpath);
  bytes[bytes.size() / 2] ^= 0x40;
  std::ofstream(wpath, std::ios::binary).write(bytes.data(), long(bytes.size()));
  CHECK_THROWS_AS(load_checkpoint(tmp.path / "ckpt"), IoError);
}

TEST_CASE("manifest tensors describe every parameter") {
  TempDir tmp;
  TrainConfig cfg = tiny_config();
  PolicyBundle policy(cfg.policy);
  Rng rng(29);
  policy.init(rng);
  save_checkpoint(tmp.path / "ckpt", policy, cfg);
  std::string manifest = slurp(tmp.path / "ckpt" / "manifest.json");
  for (const auto& d : policy.parameter_descriptions())
    CHECK(manifest.find('"' + d.name + '"') != std::string::npos);
  CHECK(manifest.find("basis_elements") != std::string::npos);
}

TEST_CASE("metrics csv lists one row per iteration") {
  TempDir tmp;
  std::vector<MetricRow> rows(3);
  rows[0] = {1, 0.5, 0.25, 1.5, -1.0, 0.01};
  rows[1] = {2, 0.4, 0.20, 1.2, -1.0, 0.01};
  rows[2] = {3, 0.3, 0.15, 1.0, 62.5, 0.01};
  fs::path p = tmp.path / "metrics.csv";
  write_metrics_csv(p, rows);
  std::string text = slurp(p);
  CHECK(text.find("iteration") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);  // header + 3 rows
  CHECK(text.find("62.5") != std::string::npos);
  // Unevaluated iterations leave the column empty rather than writing -1.
  CHECK(text.find("-1") == std::string::npos);
}

TEST_CASE("heatmaps are valid binary ppm files") {
  TempDir tmp;
  std::vector<double> v(6 * 4);
  for (size_t i = 0; i < v.size(); ++i) v[i] = double(i);
  fs::path p = tmp.path / "map.ppm";
  write_ppm_heatmap(p, v, 6, 4);
  std::string bytes = slurp(p);
  CHECK(bytes.rfind("P6\n4 6\n255\n", 0) == 0);
  CHECK(bytes.size() == 11 + 3u * 6 * 4);
}

TEST_CASE("orientation svg emits one line per sampled pixel and bin") {
  TempDir tmp;
  Rng rng(31);
  Tensor eoh = Tensor::randn({4, 10, 7}, rng, 1.0, false);
  for (double& v : eoh.values()) v = std::abs(v);
  fs::path p = tmp.path / "arrows.svg";
  write_eoh_svg(p, eoh, 3);
  std::string text = slurp(p);
  size_t lines = 0;
  for (size_t at = text.find("<line"); at != std::string::npos;
       at = text.find("<line", at + 1))
    ++lines;
  // ceil(10/3) * ceil(7/3) * 4 bins
  CHECK(lines == 4u * 3u * 4u);
  CHECK(text.find("</svg>") != std::string::npos);
}

TEST_CASE("max_bin_map reduces over bins") {
  Tensor m = Tensor::from_data({2, 1, 2}, {1.0, 5.0, 3.0, 2.0});
  auto v = max_bin_map(m);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == 3.0);
  CHECK(v[1] == 5.0);
}

TEST_CASE("invariant suite passes and the seeded fault trips it") {
  auto results = run_invariant_suite(1);
  CHECK(results.size() >= 14);
  for (const auto& r : results) {
    INFO(r.name, " residual=", r.residual, " ", r.detail);
    CHECK(r.pass);
  }
  auto faulty = run_invariant_suite(1, "regular-shift");
  bool tripped = false;
  for (const auto& r : faulty)
    if (!r.pass) tripped = true;
  CHECK(tripped);
}

}  // TEST_SUITE
