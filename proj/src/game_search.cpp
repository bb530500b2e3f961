#include "nte/game_search.hpp"

#include "nte/error.hpp"

namespace nte {

JointState GameDomain::step(const State& s, const Action& a) const {
  JointState next = s;
  nte::advance(next, a, spec_);
  return next;
}

JointAction GameDomain::uniform_action(const State& s, Rng& rng) const {
  JointAction a(s.robots.size(), ActionVec{});
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    if (s.robots[i].active) a[i] = sample_uniform_action(spec_, rng);
  }
  return a;
}

JointAction GameDomain::policy_action(const State& s, Rng& rng) const {
  JointAction a(s.robots.size(), ActionVec{});
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    const RobotState& r = s.robots[i];
    if (!r.active) continue;
    const nn::Network* net = nets_.policy(r.team);
    a[i] = net ? sample_policy_action(*net, static_cast<int>(i), s, spec_, rng) : sample_uniform_action(spec_, rng);
  }
  return a;
}

double GameDomain::value_sample(const State& s, Rng& rng) const {
  const nn::GaussianOutput out = nets_.value->forward(nn::value_input(value_observation(s, spec_), spec_.state_dim()));
  return out.mean[0] + out.std[0] * rng.normal();
}

ActionVec sample_policy_action(const nn::Network& net, int i, const JointState& s, const GameSpec& spec,
                               Rng& rng) {
  const nn::GaussianOutput out = net.forward(nn::policy_input(observe(i, s, spec), spec.state_dim()));
  ActionVec a{};
  for (std::size_t k = 0; k < out.mean.size() && k < a.size(); ++k) a[k] = out.mean[k] + out.std[k] * rng.normal();
  return project_action(a, spec);
}

GameSearchResult search_game(const JointState& s, const NetworkSet& nets, const search::SearchConfig& cfg,
                             const GameSpec& spec) {
  const GameDomain domain(spec, nets);
  return search::run_search(domain, s, cfg);
}

GameSearchResult expert_policy(const JointState& s, Team team, const NetworkSet& nets, search::SearchConfig cfg,
                               const GameSpec& spec) {
  cfg.root_team = team;
  return search_game(s, nets, cfg, spec);
}

ActionVec learner_policy(Team team, const Observation& z, const NetworkSet& nets, search::SearchConfig cfg,
                         const GameSpec& spec, LearnerContext ctx) {
  // A robot that cannot sense anything has nothing to plan over.
  if (!(spec.sense_radius > 0.0)) return ActionVec{};
  const Reconstruction rec = reconstruct_state(z, team, spec, ctx.reached_count, ctx.step_index);
  if (is_terminal(rec.state, rec.spec)) return ActionVec{};
  cfg.root_team = team;
  const GameSearchResult res = search_game(rec.state, nets, cfg, rec.spec);
  return res.action.at(static_cast<std::size_t>(rec.observer));
}

void learner_team_action(const JointState& s, Team team, const NetworkSet& nets, const search::SearchConfig& cfg,
                         const GameSpec& spec, JointAction& out) {
  out.resize(s.robots.size());
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    const RobotState& r = s.robots[i];
    if (r.team != team || !r.active) continue;
    search::SearchConfig rc = cfg;
    rc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    const LearnerContext ctx{s.reached_count, s.step_index};
    out[i] = learner_policy(team, observe(static_cast<int>(i), s, spec), nets, rc, spec, ctx);
  }
}

void expert_team_action(const JointState& s, Team team, const NetworkSet& nets, const search::SearchConfig& cfg,
                        const GameSpec& spec, JointAction& out) {
  out.resize(s.robots.size());
  const GameSearchResult res = expert_policy(s, team, nets, cfg, spec);
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    if (s.robots[i].team == team && s.robots[i].active) out[i] = res.action[i];
  }
}

void policy_team_action(const JointState& s, Team team, const NetworkSet& nets, const GameSpec& spec, Rng& rng,
                        JointAction& out) {
  out.resize(s.robots.size());
  const nn::Network* net = nets.policy(team);
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    const RobotState& r = s.robots[i];
    if (r.team != team || !r.active) continue;
    out[i] = net ? sample_policy_action(*net, static_cast<int>(i), s, spec, rng) : sample_uniform_action(spec, rng);
  }
}

ActionVec visit_weighted_action(const GameRootStats& stats, int i) {
  NTE_REQUIRE(stats.root_visits > 0, "root has no visits");
  ActionVec label{};
  for (const auto& c : stats.children) {
    const double w = static_cast<double>(c.visits) / stats.root_visits;
    const ActionVec& a = c.action.at(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < label.size(); ++k) label[k] += w * a[k];
  }
  return label;
}

}  // namespace nte
