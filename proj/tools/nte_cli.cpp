// nte: command-line front end over the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "nte/nte.h"

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

int report(nte_status st) {
  if (st == NTE_OK) return 0;
  std::fprintf(stderr, "nte: %s\n", nte_last_error());
  return (st == NTE_ERR_CONFIG || st == NTE_ERR_NULL) ? kExitUsage : kExitDomain;
}

struct ConfigHandle {
  nte_config* ptr = nullptr;
  ~ConfigHandle() { nte_config_free(ptr); }
};

nte_status open_config(const std::string& path, const std::string& profile, ConfigHandle& out) {
  if (!path.empty()) return nte_config_load(path.c_str(), &out.ptr);
  return nte_config_default(profile.c_str(), &out.ptr);
}

void print_and_free(char* s) {
  std::puts(s);
  nte_string_free(s);
}

void progress(const char* message, void*) { std::fprintf(stderr, "[train] %s\n", message); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural tree expansion: game simulator, search, self-improvement and tournaments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nte_version()));

  std::string config_path;
  std::string profile = "paper_defaults";
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--profile", profile, "Preset used when no --config is given")
        ->check(CLI::IsMember({"paper_defaults", "desk_scale"}));
    sub->add_option("--seed", seed, "Root seed for every random stream");
  };

  std::string train_out;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Run the self-improvement loop");
  add_common(train);
  train->add_option("--out", train_out, "Output directory (default: paths.out_dir)");
  train->add_flag("--quiet", quiet, "No progress messages");

  std::string variants_path, results_out = "results.csv", plot_out, log_out, checkpoints;
  int games = 0;
  auto* eval = app.add_subcommand("eval", "Play a tournament between policy variants");
  add_common(eval);
  eval->add_option("--variants", variants_path, "JSON file {\"attackers\": [...], \"defenders\": [...]}")
      ->check(CLI::ExistingFile);
  eval->add_option("--games", games, "Paired initial conditions (default: eval.games)")->check(CLI::PositiveNumber);
  eval->add_option("--out", results_out, "Per-match results CSV");
  eval->add_option("--plot", plot_out, "Per-variant statistics CSV");
  eval->add_option("--log", log_out, "Match log, JSON lines");
  eval->add_option("--checkpoints", checkpoints, "Training output holding checkpoints/k<k>/");

  std::string attacker, defender, rollout_out = "trajectory.jsonl";
  auto* rollout = app.add_subcommand("rollout", "Play one game and write its trajectory");
  add_common(rollout);
  rollout->add_option("--attacker", attacker, "Attacker variant (default: first of eval.attackers)");
  rollout->add_option("--defender", defender, "Defender variant (default: first of eval.defenders)");
  rollout->add_option("--checkpoints", checkpoints, "Training output holding checkpoints/k<k>/");
  rollout->add_option("--out", rollout_out, "Trajectory file, JSON lines");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Print a checkpoint, dataset or lineage manifest");
  inspect->add_option("path", inspect_path, "Manifest, stem or training directory")->required();

  int scale = 1;
  auto* selftest = app.add_subcommand("selftest", "Run the invariant fuzz suite");
  selftest->add_option("--seed", seed, "Fuzz seed");
  selftest->add_option("--scale", scale, "Case count multiplier")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (*train) {
    ConfigHandle cfg;
    if (nte_status st = open_config(config_path, profile, cfg); st != NTE_OK) return report(st);
    return report(nte_train(cfg.ptr, train_out.c_str(), seed, quiet ? nullptr : progress, nullptr));
  }
  if (*eval) {
    ConfigHandle cfg;
    if (nte_status st = open_config(config_path, profile, cfg); st != NTE_OK) return report(st);
    std::string variants;
    if (!variants_path.empty()) {
      std::ifstream in(variants_path);
      std::stringstream ss;
      ss << in.rdbuf();
      variants = ss.str();
    }
    return report(nte_eval(cfg.ptr, variants_path.empty() ? nullptr : variants.c_str(),
                           checkpoints.empty() ? nullptr : checkpoints.c_str(), games, seed, results_out.c_str(),
                           plot_out.c_str(), log_out.c_str()));
  }
  if (*rollout) {
    ConfigHandle cfg;
    if (nte_status st = open_config(config_path, profile, cfg); st != NTE_OK) return report(st);
    return report(nte_rollout(cfg.ptr, attacker.empty() ? nullptr : attacker.c_str(),
                              defender.empty() ? nullptr : defender.c_str(),
                              checkpoints.empty() ? nullptr : checkpoints.c_str(), seed, rollout_out.c_str()));
  }
  if (*inspect) {
    char* out = nullptr;
    if (nte_status st = nte_inspect(inspect_path.c_str(), &out); st != NTE_OK) return report(st);
    print_and_free(out);
    return 0;
  }
  if (*selftest) {
    char* out = nullptr;
    int passed = 0;
    if (nte_status st = nte_selftest(seed, scale, &out, &passed); st != NTE_OK) return report(st);
    print_and_free(out);
    return passed ? 0 : kExitDomain;
  }
  return kExitUsage;
}
