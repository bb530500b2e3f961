#pragma once

// On-disk formats. Metadata is JSON; bulk numbers are flat little-endian
// float32 files next to the manifest.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nte/game_search.hpp"
#include "nte/neural.hpp"

namespace nte::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string read_text(const fs::path& p);
void write_text(const fs::path& p, std::string_view text);

void write_f32(const fs::path& p, std::span<const double> values);
std::vector<double> read_f32(const fs::path& p);

// Rounds every value to the nearest float32, so in-memory networks match
// what a checkpoint round trip gives back.
void quantize_f32(std::span<double> values);

struct CheckpointInfo {
  std::string role;  // "policy" or "value"
  std::string team;  // "A", "B" or "" for value networks
  std::uint64_t seed = 0;
  int iteration = 0;
  std::string config_hash;
  std::string parent;   // manifest of the checkpoint this one was warm-started from
  std::string dataset;  // manifest of the dataset that trained it
};

// Writes <stem>.json and <stem>.bin.
void save_checkpoint(const fs::path& stem, const nn::Network& net, const CheckpointInfo& info);

struct LoadedCheckpoint {
  nn::Network network;
  CheckpointInfo info;
};

// Accepts the manifest path or the stem.
LoadedCheckpoint load_checkpoint(const fs::path& path);

struct DatasetInfo {
  std::string kind;  // "policy" or "value"
  std::string team;
  int iteration = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  int self_dim = 0;
  int elem_dim = 0;
  int target_dim = 0;
};

// Writes <stem>.json, <stem>.bin (records) and <stem>.seeds.bin (uint64
// source game seed per record). Record layout:
//   self[self_dim] | n_a | set_a[n_a * elem_dim] | n_b | set_b[n_b * elem_dim] | target[target_dim]
void save_dataset(const fs::path& stem, std::span<const nn::TrainingSample> samples, const DatasetInfo& info);

struct LoadedDataset {
  std::vector<nn::TrainingSample> samples;
  DatasetInfo info;
};

LoadedDataset load_dataset(const fs::path& path);

json root_stats_json(const GameRootStats& stats, int action_dim);

// "epoch,train_loss" rows.
std::string loss_trace_csv(std::span<const double> trace);

json state_json(const JointState& s, int state_dim);
json action_json(const JointAction& a, int action_dim);

// Manifest path for `path` which may already name the manifest or be a stem.
fs::path manifest_path(const fs::path& path);

}  // namespace nte::io
