#pragma once

// Meta self-improving loop: learner self-play collects states, the expert
// labels them, policy and value networks are trained, repeat.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nte/game.hpp"
#include "nte/game_search.hpp"
#include "nte/neural.hpp"
#include "nte/search.hpp"

namespace nte::improve {

struct SearchSettings {
  int expert_budget = 10000;
  int learner_budget = 500;
  double c_p = 2.0;
  double c_pw = 1.0;
  double alpha_pw = 0.25;
  double beta_policy = 0.5;
  double beta_value = 0.5;
  int rollout_cap = 0;

  // Gates are forced to zero when `biased` is false.
  search::SearchConfig expert(bool biased, std::uint64_t seed) const;
  search::SearchConfig learner(bool biased, std::uint64_t seed) const;
  search::SearchConfig with_budget(int budget, bool biased, std::uint64_t seed) const;
  void validate() const;  // ConfigError paths under "search."

  friend bool operator==(const SearchSettings&, const SearchSettings&) = default;
};

struct CurriculumSpec {
  std::array<int, 2> team_size_range{1, 5};  // drawn independently per team
  std::vector<double> arena_sizes{1.0, 2.0, 3.0};
  int games_per_iteration = 400;
  int iterations = 2;  // K; iterations 0..K run
  int dataset_size = 80000;
  int value_samples_per_game = 20;
  std::vector<std::string> opponent_pool;  // recorded only; self-play uses the current learner

  void validate() const;  // ConfigError paths under "curriculum."

  friend bool operator==(const CurriculumSpec&, const CurriculumSpec&) = default;
};

struct TrainSettings {
  int epochs = 300;
  int batch_size = 1028;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  bool warm_start = true;

  nn::TrainOptions options(std::uint64_t seed) const;
  void validate() const;  // ConfigError paths under "train."

  friend bool operator==(const TrainSettings&, const TrainSettings&) = default;
};

struct Game {
  GameSpec spec;
  JointState initial;
  std::uint64_t seed = 0;
};

// Team sizes, arena size and initial conditions per game; deterministic in seed.
std::vector<Game> make_posg(const CurriculumSpec& curriculum, const GameSpec& base, int k, std::uint64_t seed);

struct StateSample {
  JointState state;
  int game = 0;  // index into the games list
};

// Plays each game to the end with every robot running the learner and keeps
// `per_game` non-terminal states from its trajectory.
std::vector<StateSample> self_play_states(const std::vector<Game>& games, const NetworkSet& nets,
                                          const search::SearchConfig& learner_cfg, int per_game, std::uint64_t seed);

// One sample per active robot of `team` per state, labeled with the
// visit-weighted expert root action.
std::vector<nn::TrainingSample> build_policy_dataset(const std::vector<StateSample>& states,
                                                     const std::vector<Game>& games, Team team,
                                                     const NetworkSet& nets, const search::SearchConfig& expert_cfg,
                                                     std::uint64_t seed,
                                                     const std::function<void(const std::string&)>& warn = {});

// Policy-network rollouts, `per_game` states drawn (with replacement) from
// each trajectory, target = normalized final outcome of that game.
std::vector<nn::TrainingSample> build_value_dataset(const std::vector<Game>& games, const NetworkSet& nets,
                                                    int per_game, std::uint64_t seed);

struct MetaLearnConfig {
  GameSpec base;
  SearchSettings search;
  CurriculumSpec curriculum;
  TrainSettings train;
  std::string config_hash;
};

struct IterationSummary {
  int iteration = 0;
  std::size_t policy_samples_a = 0;
  std::size_t policy_samples_b = 0;
  std::size_t value_samples = 0;
  double final_loss_a = 0.0;
  double final_loss_b = 0.0;
  double final_loss_value = 0.0;
  std::filesystem::path checkpoint_dir;
};

using Progress = std::function<void(const std::string&)>;

// Writes, under out_dir:
//   iter<k>/            datasets and loss traces of iteration k
//   checkpoints/k<k+1>/ networks produced by iteration k
//   lineage.json        rewritten after each completed iteration
std::vector<IterationSummary> meta_learn(const MetaLearnConfig& cfg, const std::filesystem::path& out_dir,
                                         std::uint64_t seed, const Progress& progress = {});

// Networks of checkpoints/k<k>/ under a training output directory (or a
// directory holding policy_a/policy_b/value manifests directly).
struct NetworkBundle {
  nn::Network policy_a;
  nn::Network policy_b;
  nn::Network value;

  NetworkSet view() const { return {&policy_a, &policy_b, &value}; }
};

NetworkBundle load_bundle(const std::filesystem::path& dir);
std::filesystem::path checkpoint_dir(const std::filesystem::path& train_out, int k);

}  // namespace nte::improve
