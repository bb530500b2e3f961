#pragma once

// Tournaments between policy variants on paired initial conditions.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nte/game.hpp"
#include "nte/self_improve.hpp"

namespace nte::arena {

enum class VariantKind { UnbiasedLearner, BiasedLearner, UnbiasedExpert, BiasedExpert, RandomUniform };

struct Variant {
  VariantKind kind = VariantKind::UnbiasedLearner;
  int k = 0;           // checkpoint index for biased variants
  int budget = 0;      // 0 = learner/expert default
  std::string label;   // display name; defaults to name()

  bool biased() const { return kind == VariantKind::BiasedLearner || kind == VariantKind::BiasedExpert; }
  bool expert() const { return kind == VariantKind::UnbiasedExpert || kind == VariantKind::BiasedExpert; }
  std::string name() const;  // "biased_learner:k2", "unbiased_expert@10000", ...
  std::string display() const { return label.empty() ? name() : label; }
};

// Accepts "unbiased_learner", "biased_learner:2", "biased_expert:k1@2000",
// "random"; an optional "@budget" suffix overrides the node budget.
Variant parse_variant(const std::string& text);

struct MatchResult {
  std::string attacker;
  std::string defender;
  int attacker_k = 0;
  int defender_k = 0;
  std::uint64_t seed = 0;
  int team_a_count = 0;
  int team_b_count = 0;
  int reached = 0;
  int steps = 0;
  std::vector<double> attacker_ms;  // per decision
  std::vector<double> defender_ms;
  std::string error;  // non-empty when the game failed
};

enum class Side { Attacker, Defender };

double performance_score(const MatchResult& r, Side side);

// Networks for biased variants, keyed by checkpoint index.
class CheckpointCache {
 public:
  explicit CheckpointCache(std::filesystem::path train_out) : root_(std::move(train_out)) {}
  const improve::NetworkBundle& get(int k);

 private:
  std::filesystem::path root_;
  std::map<int, std::unique_ptr<improve::NetworkBundle>> loaded_;
};

struct ArenaSettings {
  improve::SearchSettings search;
  int n_seeds = 50;
  std::uint64_t seed = 0;
};

struct StepRecord {
  JointState state;  // before the step
  JointAction action;
  StepEvents events;
};

// Plays one game. `record` receives every step when non-null.
MatchResult play_match(const Variant& attacker, const Variant& defender, const GameSpec& spec,
                       const JointState& initial, std::uint64_t seed, const ArenaSettings& settings,
                       CheckpointCache& cache, std::vector<StepRecord>* record = nullptr);

// Seed index n uses the initial condition sample_initial_condition(spec,
// derive_seed(settings.seed, n)) for every variant pair.
std::vector<MatchResult> run_tournament(const std::vector<Variant>& attackers, const std::vector<Variant>& defenders,
                                        const GameSpec& spec, const ArenaSettings& settings, CheckpointCache& cache,
                                        const std::function<void(const std::string&)>& progress = {});

// Deterministic per-match table (no timings).
std::string results_csv(const std::vector<MatchResult>& results, const std::string& config_hash);

struct PlotRow {
  std::string variant;
  std::string role;
  int k = 0;
  double mean_score = 0.0;
  double var_score = 0.0;  // population variance
  int n_games = 0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
};

std::vector<PlotRow> plot_rows(const std::vector<MatchResult>& results);
std::string plot_csv(const std::vector<PlotRow>& rows, const std::string& config_hash);

nlohmann::json match_json(const MatchResult& r);

// Nearest-rank percentile, q in [0, 100]. 0 for an empty sample.
double percentile(std::vector<double> values, double q);

}  // namespace nte::arena
