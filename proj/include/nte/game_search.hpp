#pragma once

// Tree search over the Reach-Target-Avoid game: the expert searches the full
// joint state, the learner searches the sub-game it can see.

#include <optional>

#include "nte/game.hpp"
#include "nte/neural.hpp"
#include "nte/search.hpp"

namespace nte {

// Borrowed, read-only networks. Any entry may be null; a missing policy makes
// that team expand uniformly, a missing value network forces rollouts.
struct NetworkSet {
  const nn::Network* policy_a = nullptr;
  const nn::Network* policy_b = nullptr;
  const nn::Network* value = nullptr;

  const nn::Network* policy(Team t) const { return t == Team::A ? policy_a : policy_b; }
};

class GameDomain {
 public:
  using State = JointState;
  using Action = JointAction;

  GameDomain(const GameSpec& spec, NetworkSet nets) : spec_(spec), nets_(nets) {}

  bool terminal(const State& s) const { return is_terminal(s, spec_); }
  State step(const State& s, const Action& a) const;
  void advance(State& s, const Action& a) const { nte::advance(s, a, spec_); }
  Action uniform_action(const State& s, Rng& rng) const;
  bool has_policy() const { return nets_.policy_a != nullptr || nets_.policy_b != nullptr; }
  Action policy_action(const State& s, Rng& rng) const;
  bool has_value() const { return nets_.value != nullptr; }
  double value_sample(const State& s, Rng& rng) const;
  double value(const State& s) const { return normalized_value(s); }
  bool same_action(const Action& a, const Action& b) const { return a == b; }

  const GameSpec& spec() const { return spec_; }
  const NetworkSet& nets() const { return nets_; }

 private:
  const GameSpec& spec_;
  NetworkSet nets_;
};

// Policy-network sample for robot i, projected into the admissible set.
ActionVec sample_policy_action(const nn::Network& net, int i, const JointState& s, const GameSpec& spec,
                               Rng& rng);

using GameSearchResult = search::SearchResult<JointAction>;
using GameRootStats = search::RootStats<JointAction>;

// Full search from a perfect-information joint state.
GameSearchResult search_game(const JointState& s, const NetworkSet& nets, const search::SearchConfig& cfg,
                             const GameSpec& spec);

// Expert: centralized search, perspective of `team`. The whole joint action is
// returned; entries of the other team are the predicted response.
GameSearchResult expert_policy(const JointState& s, Team team, const NetworkSet& nets,
                               search::SearchConfig cfg, const GameSpec& spec);

// Bookkeeping a robot keeps besides its observation.
struct LearnerContext {
  int reached_count = 0;
  int step_index = 0;
};

// Learner: rebuilds the visible sub-game from the observation, searches it
// and returns the observer's own sub-action. A zero action is returned when
// the robot senses nothing (non-positive sense radius) or the visible
// sub-game is already decided, e.g. a defender that sees no attacker.
ActionVec learner_policy(Team team, const Observation& z, const NetworkSet& nets, search::SearchConfig cfg,
                         const GameSpec& spec, LearnerContext ctx);

// Writes learner actions for every active robot of `team` into `out`. Robot i
// searches with seed derive_seed(cfg.seed, i).
void learner_team_action(const JointState& s, Team team, const NetworkSet& nets, const search::SearchConfig& cfg,
                         const GameSpec& spec, JointAction& out);

// One centralized search for `team`; copies that team's entries into `out`.
void expert_team_action(const JointState& s, Team team, const NetworkSet& nets, const search::SearchConfig& cfg,
                        const GameSpec& spec, JointAction& out);

// Direct policy-network samples (uniform where the team has no network).
void policy_team_action(const JointState& s, Team team, const NetworkSet& nets, const GameSpec& spec, Rng& rng,
                        JointAction& out);

// Visit-weighted mean of robot i's root edge actions.
ActionVec visit_weighted_action(const GameRootStats& stats, int i);

}  // namespace nte
