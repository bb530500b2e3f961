#include "nte/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nte/error.hpp"

namespace nte::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DomainError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write to a sibling temp file and rename, so readers never see a partial file.
void write_text(const fs::path& p, std::string_view text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DomainError("write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

void write_f32(const fs::path& p, std::span<const double> values) {
  std::string bytes(values.size() * sizeof(float), '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = static_cast<float>(values[i]);
    std::memcpy(bytes.data() + i * sizeof(float), &f, sizeof f);
  }
  write_text(p, bytes);
}

std::vector<double> read_f32(const fs::path& p) {
  const std::string bytes = read_text(p);
  if (bytes.size() % sizeof(float) != 0) throw DomainError(p.string() + ": size is not a multiple of 4");
  std::vector<double> out(bytes.size() / sizeof(float));
  for (std::size_t i = 0; i < out.size(); ++i) {
    float f;
    std::memcpy(&f, bytes.data() + i * sizeof(float), sizeof f);
    out[i] = f;
  }
  return out;
}

void quantize_f32(std::span<double> values) {
  for (double& v : values) v = static_cast<float>(v);
}

fs::path manifest_path(const fs::path& path) {
  if (path.extension() == ".json") return path;
  return fs::path(path.string() + ".json");
}

namespace {

json arch_json(const nn::Architecture& a) {
  return {{"elem_dim", a.elem_dim}, {"self_dim", a.self_dim}, {"out_dim", a.out_dim},
          {"hidden", a.hidden},     {"embed", a.embed}};
}

nn::Architecture arch_from(const json& j) {
  nn::Architecture a;
  a.elem_dim = j.at("elem_dim").get<int>();
  a.self_dim = j.at("self_dim").get<int>();
  a.out_dim = j.at("out_dim").get<int>();
  a.hidden = j.at("hidden").get<int>();
  a.embed = j.at("embed").get<int>();
  a.validate();
  return a;
}

json parse_manifest(const fs::path& p, const char* format) {
  json j;
  try {
    j = json::parse(read_text(p));
  } catch (const json::parse_error& e) {
    throw DomainError(p.string() + ": " + e.what());
  }
  if (j.value("format", std::string{}) != format) throw DomainError(p.string() + ": not a " + format + " manifest");
  return j;
}

}  // namespace

void save_checkpoint(const fs::path& stem, const nn::Network& net, const CheckpointInfo& info) {
  const fs::path bin = fs::path(stem.string() + ".bin");
  write_f32(bin, net.params());
  json j = {
      {"format", "nte-checkpoint-1"},
      {"role", info.role},
      {"team", info.team},
      {"architecture", arch_json(net.arch())},
      {"parameter_count", net.params().size()},
      {"parameter_order", "inner_a, inner_b, outer; per layer W (row-major) then b"},
      {"seed", info.seed},
      {"iteration", info.iteration},
      {"config_hash", info.config_hash},
      {"parent", info.parent.empty() ? json(nullptr) : json(info.parent)},
      {"dataset", info.dataset.empty() ? json(nullptr) : json(info.dataset)},
      {"binary", bin.filename().string()},
  };
  write_text(manifest_path(stem), j.dump(2) + "\n");
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  const fs::path m = manifest_path(path);
  const json j = parse_manifest(m, "nte-checkpoint-1");
  LoadedCheckpoint out;
  out.network = nn::Network(arch_from(j.at("architecture")));
  const std::vector<double> params = read_f32(m.parent_path() / j.at("binary").get<std::string>());
  if (params.size() != out.network.params().size()) {
    throw DomainError(m.string() + ": parameter count " + std::to_string(params.size()) + " does not match architecture (" +
                      std::to_string(out.network.params().size()) + ")");
  }
  std::copy(params.begin(), params.end(), out.network.params().begin());
  out.info.role = j.at("role").get<std::string>();
  out.info.team = j.at("team").get<std::string>();
  out.info.seed = j.at("seed").get<std::uint64_t>();
  out.info.iteration = j.at("iteration").get<int>();
  out.info.config_hash = j.at("config_hash").get<std::string>();
  if (j.at("parent").is_string()) out.info.parent = j["parent"].get<std::string>();
  if (j.at("dataset").is_string()) out.info.dataset = j["dataset"].get<std::string>();
  return out;
}

void save_dataset(const fs::path& stem, std::span<const nn::TrainingSample> samples, const DatasetInfo& info) {
  std::vector<double> flat;
  std::string seeds(samples.size() * sizeof(std::uint64_t), '\0');
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const nn::TrainingSample& s = samples[i];
    NTE_REQUIRE(static_cast<int>(s.input.self.size()) == info.self_dim, "sample self size mismatch");
    NTE_REQUIRE(static_cast<int>(s.target.size()) == info.target_dim, "sample target size mismatch");
    NTE_REQUIRE(s.input.set_a.size() % static_cast<std::size_t>(info.elem_dim) == 0, "ragged set_a");
    NTE_REQUIRE(s.input.set_b.size() % static_cast<std::size_t>(info.elem_dim) == 0, "ragged set_b");
    flat.insert(flat.end(), s.input.self.begin(), s.input.self.end());
    flat.push_back(static_cast<double>(s.input.set_a.size() / static_cast<std::size_t>(info.elem_dim)));
    flat.insert(flat.end(), s.input.set_a.begin(), s.input.set_a.end());
    flat.push_back(static_cast<double>(s.input.set_b.size() / static_cast<std::size_t>(info.elem_dim)));
    flat.insert(flat.end(), s.input.set_b.begin(), s.input.set_b.end());
    flat.insert(flat.end(), s.target.begin(), s.target.end());
    std::memcpy(seeds.data() + i * sizeof(std::uint64_t), &s.source_seed, sizeof(std::uint64_t));
  }
  const fs::path bin = fs::path(stem.string() + ".bin");
  const fs::path seed_bin = fs::path(stem.string() + ".seeds.bin");
  write_f32(bin, flat);
  write_text(seed_bin, seeds);
  json j = {
      {"format", "nte-dataset-1"},
      {"kind", info.kind},
      {"team", info.team},
      {"iteration", info.iteration},
      {"seed", info.seed},
      {"config_hash", info.config_hash},
      {"sample_count", samples.size()},
      {"schema",
       {{"self_dim", info.self_dim},
        {"elem_dim", info.elem_dim},
        {"target_dim", info.target_dim},
        {"record", "self[self_dim] n_a set_a[n_a*elem_dim] n_b set_b[n_b*elem_dim] target[target_dim]"},
        {"dtype", "float32 little-endian"}}},
      {"binary", bin.filename().string()},
      {"seeds", seed_bin.filename().string()},
  };
  write_text(manifest_path(stem), j.dump(2) + "\n");
}

LoadedDataset load_dataset(const fs::path& path) {
  const fs::path m = manifest_path(path);
  const json j = parse_manifest(m, "nte-dataset-1");
  LoadedDataset out;
  out.info.kind = j.at("kind").get<std::string>();
  out.info.team = j.at("team").get<std::string>();
  out.info.iteration = j.at("iteration").get<int>();
  out.info.seed = j.at("seed").get<std::uint64_t>();
  out.info.config_hash = j.at("config_hash").get<std::string>();
  const json& schema = j.at("schema");
  out.info.self_dim = schema.at("self_dim").get<int>();
  out.info.elem_dim = schema.at("elem_dim").get<int>();
  out.info.target_dim = schema.at("target_dim").get<int>();
  const auto n = j.at("sample_count").get<std::size_t>();

  const std::vector<double> flat = read_f32(m.parent_path() / j.at("binary").get<std::string>());
  const std::string seeds = read_text(m.parent_path() / j.at("seeds").get<std::string>());
  if (seeds.size() != n * sizeof(std::uint64_t)) throw DomainError(m.string() + ": seed file length mismatch");

  std::size_t pos = 0;
  auto take = [&](std::size_t count) {
    if (pos + count > flat.size()) throw DomainError(m.string() + ": truncated record data");
    std::vector<double> v(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                          flat.begin() + static_cast<std::ptrdiff_t>(pos + count));
    pos += count;
    return v;
  };
  auto take_count = [&] {
    const double c = take(1)[0];
    if (c < 0 || c != static_cast<double>(static_cast<std::size_t>(c))) throw DomainError(m.string() + ": bad set count");
    return static_cast<std::size_t>(c);
  };
  const auto ed = static_cast<std::size_t>(out.info.elem_dim);
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    nn::TrainingSample s;
    s.input.self = take(static_cast<std::size_t>(out.info.self_dim));
    s.input.set_a = take(take_count() * ed);
    s.input.set_b = take(take_count() * ed);
    s.target = take(static_cast<std::size_t>(out.info.target_dim));
    std::memcpy(&s.source_seed, seeds.data() + i * sizeof(std::uint64_t), sizeof(std::uint64_t));
    out.samples.push_back(std::move(s));
  }
  if (pos != flat.size()) throw DomainError(m.string() + ": trailing record data");
  return out;
}

json action_json(const JointAction& a, int action_dim) {
  json out = json::array();
  for (const ActionVec& u : a) out.push_back(std::vector<double>(u.begin(), u.begin() + action_dim));
  return out;
}

json root_stats_json(const GameRootStats& stats, int action_dim) {
  json children = json::array();
  for (const auto& c : stats.children) {
    children.push_back({{"action", action_json(c.action, action_dim)}, {"visits", c.visits}, {"mean_value", c.mean_value}});
  }
  return {{"root_visits", stats.root_visits},
          {"best", stats.best},
          {"children", children},
          {"neural_expansions", stats.neural_expansions},
          {"uniform_expansions", stats.uniform_expansions},
          {"value_evaluations", stats.value_evaluations},
          {"rollouts", stats.rollouts},
          {"tree_size", stats.tree_size}};
}

std::string loss_trace_csv(std::span<const double> trace) {
  std::string out = "epoch,train_loss\n";
  char buf[64];
  for (std::size_t e = 0; e < trace.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", e, trace[e]);
    out += buf;
  }
  return out;
}

json state_json(const JointState& s, int state_dim) {
  json robots = json::array();
  for (const RobotState& r : s.robots) {
    robots.push_back({{"team", to_string(r.team)},
                      {"active", r.active},
                      {"x", std::vector<double>(r.x.begin(), r.x.begin() + state_dim)}});
  }
  return {{"step", s.step_index}, {"reached", s.reached_count}, {"robots", robots}};
}

}  // namespace nte::io
