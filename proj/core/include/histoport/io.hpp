#pragma once
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "histoport/training.hpp"

namespace histoport {

/// Filesystem / format problems (missing files, bad magic, checksum).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Config parse errors and config/checkpoint mismatches.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

uint64_t fnv1a64(const void* data, size_t len);

/// Binary tensor: magic "EOHT", u32 format version, u8 dtype code (0 = f64),
/// u32 rank, u32 per dim, then the little-endian payload.
void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

struct ActionRecord {
  Action pick, place;
  int n = 0;
  uint64_t scene_seed = 0;
};
void save_actions(const std::filesystem::path& path, const ActionRecord& rec);
ActionRecord load_actions(const std::filesystem::path& path);

/// Dataset layout: one subdirectory per episode ("episode_00000", ...), one
/// obs_k.tns / act_k.json pair per step (desk episodes have one step).
void write_dataset(const std::filesystem::path& dir, int episodes,
                   uint64_t seed_base, const EnvConfig& env, int n);
std::vector<DemoStep> load_dataset(const std::filesystem::path& dir,
                                   const EnvConfig& env);

/// Flat JSON mirroring the TrainConfig / PolicyConfig / EnvConfig field
/// names.  Unknown keys are errors.
TrainConfig parse_train_config(const std::string& json_text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string train_config_json(const TrainConfig& cfg);

/// Checkpoint = manifest.json (hyperparameters, per-layer basis element
/// enumerations, tensor shapes, seed) + weights.bin (f64 little-endian in
/// manifest order, trailing FNV-1a 64 checksum of the payload).
void save_checkpoint(const std::filesystem::path& dir, const PolicyBundle& policy,
                     const TrainConfig& cfg);
struct LoadedCheckpoint {
  TrainConfig cfg;
  std::vector<std::vector<double>> weights;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);
/// Convenience: rebuild the bundle and restore its weights.
PolicyBundle load_policy(const std::filesystem::path& dir, TrainConfig* cfg_out = nullptr);

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricRow>& rows);

}  // namespace histoport
