#include "histoport/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace histoport {

namespace fs = std::filesystem;
using nlohmann::json;

uint64_t fnv1a64(const void* data, size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = 14695981039346656037ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

constexpr uint32_t kTensorVersion = 1;
constexpr uint8_t kDtypeF64 = 0;

template <typename T>
void put(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) b[i] = (uint64_t(v) >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  unsigned char b[sizeof(T)];
  is.read(reinterpret_cast<char*>(b), sizeof(T));
  if (!is) throw IoError("truncated tensor file");
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= uint64_t(b[i]) << (8 * i);
  return T(v);
}

void put_f64(std::ostream& os, double d) {
  uint64_t bits;
  static_assert(sizeof(bits) == sizeof(d));
  std::memcpy(&bits, &d, sizeof(d));
  put(os, bits);
}

double get_f64(std::istream& is) {
  uint64_t bits = get<uint64_t>(is);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("malformed JSON in " + path.string());
  return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

void save_tensor(const fs::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("EOHT", 4);
  put(out, kTensorVersion);
  put(out, kDtypeF64);
  put(out, uint32_t(t.shape().size()));
  for (int d : t.shape()) put(out, uint32_t(d));
  for (double v : t.values()) put_f64(out, v);
  if (!out) throw IoError("short write to " + path.string());
}

Tensor load_tensor(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "EOHT")
    throw IoError("bad tensor magic in " + path.string());
  if (get<uint32_t>(in) != kTensorVersion)
    throw IoError("unsupported tensor format version in " + path.string());
  if (get<uint8_t>(in) != kDtypeF64)
    throw IoError("unsupported tensor dtype in " + path.string());
  uint32_t rank = get<uint32_t>(in);
  if (rank > 8) throw IoError("implausible tensor rank in " + path.string());
  Shape shape(rank);
  size_t numel = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    shape[i] = int(get<uint32_t>(in));
    numel *= size_t(shape[i]);
  }
  std::vector<double> data(numel);
  for (size_t i = 0; i < numel; ++i) data[i] = get_f64(in);
  return Tensor::from_data(shape, std::move(data));
}

void save_actions(const fs::path& path, const ActionRecord& rec) {
  json j = {
      {"pick",
       {{"u", rec.pick.u}, {"v", rec.pick.v}, {"theta_index", rec.pick.theta_index}}},
      {"place",
       {{"u", rec.place.u}, {"v", rec.place.v}, {"theta_index", rec.place.theta_index}}},
      {"N", rec.n},
      {"scene_seed", rec.scene_seed},
  };
  write_text_file(path, j.dump(2) + "\n");
}

ActionRecord load_actions(const fs::path& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const ConfigError& e) {
    // A corrupt data file is an I/O failure, not a configuration mistake.
    throw IoError(e.what());
  }
  try {
    ActionRecord rec;
    rec.pick = {j.at("pick").at("u").get<int>(), j.at("pick").at("v").get<int>(),
                j.at("pick").at("theta_index").get<int>()};
    rec.place = {j.at("place").at("u").get<int>(),
                 j.at("place").at("v").get<int>(),
                 j.at("place").at("theta_index").get<int>()};
    rec.n = j.at("N").get<int>();
    rec.scene_seed = j.at("scene_seed").get<uint64_t>();
    return rec;
  } catch (const json::exception& e) {
    throw IoError("bad action record " + path.string() + ": " + e.what());
  }
}

namespace {

std::string episode_dirname(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "episode_%05d", i);
  return buf;
}

}  // namespace

void write_dataset(const fs::path& dir, int episodes, uint64_t seed_base,
                   const EnvConfig& env, int n) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  for (int i = 0; i < episodes; ++i) {
    fs::path epi = dir / episode_dirname(i);
    fs::create_directories(epi, ec);
    if (ec) throw IoError("cannot create " + epi.string());
    uint64_t seed = seed_base + uint64_t(i);
    Scene scene = generate_episode(seed, env);
    OracleActions acts = oracle_actions(scene, n);
    save_tensor(epi / "obs_0.tns", render_observation(scene));
    save_actions(epi / "act_0.json", {acts.pick, acts.place, n, seed});
  }
}

std::vector<DemoStep> load_dataset(const fs::path& dir, const EnvConfig& env) {
  if (!fs::is_directory(dir)) throw IoError("no dataset directory " + dir.string());
  std::vector<fs::path> episodes;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory() &&
        entry.path().filename().string().rfind("episode_", 0) == 0)
      episodes.push_back(entry.path());
  std::sort(episodes.begin(), episodes.end());
  std::vector<DemoStep> out;
  for (const fs::path& epi : episodes) {
    for (int k = 0;; ++k) {
      fs::path obs = epi / ("obs_" + std::to_string(k) + ".tns");
      fs::path act = epi / ("act_" + std::to_string(k) + ".json");
      if (!fs::exists(obs)) break;
      ActionRecord rec = load_actions(act);
      DemoStep step{load_tensor(obs), rec.pick, rec.place,
                    generate_episode(rec.scene_seed, env)};
      out.push_back(std::move(step));
    }
  }
  if (out.empty()) throw IoError("dataset is empty: " + dir.string());
  return out;
}

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& field) {
  auto it = j.find(key);
  if (it != j.end()) field = it->get<T>();
}

}  // namespace

TrainConfig parse_train_config(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("malformed config JSON");
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::vector<std::string> known = {
      "iterations", "learning_rate", "eval_every", "eval_episodes",
      "eval_seed_base", "augment_rotate", "augment_translate", "max_translate",
      "seed", "n", "m", "crop", "place_crop", "in_channels", "height", "width",
      "mode", "jc_angle", "jc_place", "clearance", "min_diameter",
      "max_diameter", "max_iou"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config key: " + key);

  TrainConfig cfg;
  try {
    read_key(j, "iterations", cfg.iterations);
    read_key(j, "learning_rate", cfg.learning_rate);
    read_key(j, "eval_every", cfg.eval_every);
    read_key(j, "eval_episodes", cfg.eval_episodes);
    read_key(j, "eval_seed_base", cfg.eval_seed_base);
    read_key(j, "augment_rotate", cfg.augment_rotate);
    read_key(j, "augment_translate", cfg.augment_translate);
    read_key(j, "max_translate", cfg.max_translate);
    read_key(j, "seed", cfg.seed);
    read_key(j, "n", cfg.policy.n);
    read_key(j, "m", cfg.policy.m);
    read_key(j, "crop", cfg.policy.crop);
    read_key(j, "place_crop", cfg.policy.place_crop);
    read_key(j, "in_channels", cfg.policy.in_channels);
    read_key(j, "height", cfg.policy.height);
    read_key(j, "width", cfg.policy.width);
    read_key(j, "jc_angle", cfg.policy.jc_angle);
    read_key(j, "jc_place", cfg.policy.jc_place);
    std::string mode = "eoh";
    read_key(j, "mode", mode);
    if (mode == "eoh")
      cfg.policy.mode = PlaceMode::kEoh;
    else if (mode == "invariant")
      cfg.policy.mode = PlaceMode::kInvariant;
    else
      throw ConfigError("mode must be \"eoh\" or \"invariant\"");
    read_key(j, "clearance", cfg.env.clearance);
    read_key(j, "min_diameter", cfg.env.min_diameter);
    read_key(j, "max_diameter", cfg.env.max_diameter);
    read_key(j, "max_iou", cfg.env.max_iou);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.env.height = cfg.policy.height;
  cfg.env.width = cfg.policy.width;
  return cfg;
}

TrainConfig load_train_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

std::string train_config_json(const TrainConfig& cfg) {
  json j = {
      {"iterations", cfg.iterations},
      {"learning_rate", cfg.learning_rate},
      {"eval_every", cfg.eval_every},
      {"eval_episodes", cfg.eval_episodes},
      {"eval_seed_base", cfg.eval_seed_base},
      {"augment_rotate", cfg.augment_rotate},
      {"augment_translate", cfg.augment_translate},
      {"max_translate", cfg.max_translate},
      {"seed", cfg.seed},
      {"n", cfg.policy.n},
      {"m", cfg.policy.m},
      {"crop", cfg.policy.crop},
      {"place_crop", cfg.policy.place_crop},
      {"in_channels", cfg.policy.in_channels},
      {"height", cfg.policy.height},
      {"width", cfg.policy.width},
      {"mode", cfg.policy.mode == PlaceMode::kEoh ? "eoh" : "invariant"},
      {"jc_angle", cfg.policy.jc_angle},
      {"jc_place", cfg.policy.jc_place},
      {"clearance", cfg.env.clearance},
      {"min_diameter", cfg.env.min_diameter},
      {"max_diameter", cfg.env.max_diameter},
      {"max_iou", cfg.env.max_iou},
  };
  return j.dump(2) + "\n";
}

namespace {

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const fs::path& dir, const PolicyBundle& policy,
                     const TrainConfig& cfg) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());

  json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["config"] = json::parse(train_config_json(cfg));
  manifest["seed"] = cfg.seed;

  json tensors = json::array();
  std::vector<PolicyBundle::ParamDesc> descs = policy.parameter_descriptions();
  std::vector<Tensor> params = policy.parameters();
  for (size_t i = 0; i < descs.size(); ++i) {
    json t;
    t["name"] = descs[i].name;
    t["shape"] = descs[i].shape;
    if (descs[i].conv) {
      const SteerableConv* c = descs[i].conv;
      t["kernel_size"] = c->kernel_size();
      json elems = json::array();
      for (const auto& info : c->coeff_info())
        elems.push_back({{"out_block", info.out_block},
                         {"in_block", info.in_block},
                         {"freq_out", info.freq_out},
                         {"freq_in", info.freq_in},
                         {"ring", info.ring},
                         {"mu", info.mu},
                         {"type", std::string(1, info.type)}});
      t["basis_elements"] = std::move(elems);
    }
    tensors.push_back(std::move(t));
  }
  manifest["tensors"] = std::move(tensors);
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

  std::ostringstream payload;
  for (const Tensor& p : params)
    for (double v : p.values()) put_f64(payload, v);
  std::string bytes = payload.str();
  uint64_t checksum = fnv1a64(bytes.data(), bytes.size());
  std::ofstream out(dir / "weights.bin", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "weights.bin").string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  put(out, checksum);
  if (!out) throw IoError("short write to " + (dir / "weights.bin").string());
}

LoadedCheckpoint load_checkpoint(const fs::path& dir) {
  json manifest = read_json_file(dir / "manifest.json");
  LoadedCheckpoint ckpt;
  try {
    if (manifest.at("format_version").get<int>() != kCheckpointVersion)
      throw ConfigError("unsupported checkpoint format version");
    ckpt.cfg = parse_train_config(manifest.at("config").dump());

    std::ifstream in(dir / "weights.bin", std::ios::binary);
    if (!in) throw IoError("cannot open " + (dir / "weights.bin").string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    if (bytes.size() < 8) throw IoError("weight blob too small");
    size_t payload = bytes.size() - 8;
    uint64_t stored = 0;
    for (int i = 0; i < 8; ++i)
      stored |= uint64_t(uint8_t(bytes[payload + i])) << (8 * i);
    if (fnv1a64(bytes.data(), payload) != stored)
      throw IoError("weight blob checksum mismatch");

    size_t at = 0;
    for (const json& t : manifest.at("tensors")) {
      size_t numel = 1;
      for (int d : t.at("shape").get<std::vector<int>>()) numel *= size_t(d);
      if (at + numel * 8 > payload)
        throw ConfigError("manifest shapes exceed weight blob length");
      std::vector<double> w(numel);
      for (size_t i = 0; i < numel; ++i) {
        uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
          bits |= uint64_t(uint8_t(bytes[at + i * 8 + b])) << (8 * b);
        std::memcpy(&w[i], &bits, 8);
      }
      at += numel * 8;
      ckpt.weights.push_back(std::move(w));
    }
    if (at != payload)
      throw ConfigError("weight blob length does not match manifest shapes");
  } catch (const json::exception& e) {
    throw IoError("bad checkpoint manifest: " + std::string(e.what()));
  }
  return ckpt;
}

PolicyBundle load_policy(const fs::path& dir, TrainConfig* cfg_out) {
  LoadedCheckpoint ckpt = load_checkpoint(dir);
  PolicyBundle policy(ckpt.cfg.policy);
  try {
    restore_weights(policy, ckpt.weights);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg_out) *cfg_out = ckpt.cfg;
  return policy;
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iteration,loss_pick_pos,loss_pick_angle,loss_place,"
         "eval_success_rate,wall_seconds\n";
  char buf[256];
  for (const MetricRow& r : rows) {
    std::string ev;
    if (r.eval_success_rate >= 0) {
      std::snprintf(buf, sizeof(buf), "%.2f", r.eval_success_rate);
      ev = buf;
    }
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%s,%.3f\n", r.iteration,
                  r.loss_pick_pos, r.loss_pick_angle, r.loss_place, ev.c_str(),
                  r.wall_seconds);
    out << buf;
  }
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace histoport
