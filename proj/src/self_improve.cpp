#include "nte/self_improve.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "nte/error.hpp"
#include "nte/io.hpp"
#include "nte/parallel.hpp"

namespace nte::improve {

namespace fs = std::filesystem;
using json = nlohmann::json;

search::SearchConfig SearchSettings::with_budget(int budget, bool biased, std::uint64_t seed) const {
  search::SearchConfig c;
  c.budget = budget;
  c.c_p = c_p;
  c.c_pw = c_pw;
  c.alpha_pw = alpha_pw;
  c.beta_policy = biased ? beta_policy : 0.0;
  c.beta_value = biased ? beta_value : 0.0;
  c.rollout_cap = rollout_cap;
  c.seed = seed;
  return c;
}

search::SearchConfig SearchSettings::expert(bool biased, std::uint64_t seed) const {
  return with_budget(expert_budget, biased, seed);
}

search::SearchConfig SearchSettings::learner(bool biased, std::uint64_t seed) const {
  return with_budget(learner_budget, biased, seed);
}

void SearchSettings::validate() const {
  if (expert_budget < 1) throw ConfigError("search.expert_budget", "must be >= 1");
  if (learner_budget < 1) throw ConfigError("search.learner_budget", "must be >= 1");
  if (!(c_p >= 0.0)) throw ConfigError("search.c_p", "must be >= 0");
  if (!(c_pw > 0.0)) throw ConfigError("search.c_pw", "must be > 0");
  if (!(alpha_pw > 0.0 && alpha_pw <= 1.0)) throw ConfigError("search.alpha_pw", "must be in (0, 1]");
  if (!(beta_policy >= 0.0 && beta_policy <= 1.0)) throw ConfigError("search.beta_policy", "must be in [0, 1]");
  if (!(beta_value >= 0.0 && beta_value <= 1.0)) throw ConfigError("search.beta_value", "must be in [0, 1]");
  if (rollout_cap < 0) throw ConfigError("search.rollout_cap", "must be >= 0");
}

void CurriculumSpec::validate() const {
  if (team_size_range[0] < 1 || team_size_range[1] < team_size_range[0])
    throw ConfigError("curriculum.team_size_range", "must be [lo, hi] with 1 <= lo <= hi");
  if (arena_sizes.empty()) throw ConfigError("curriculum.arena_sizes", "must not be empty");
  for (std::size_t k = 0; k < arena_sizes.size(); ++k) {
    if (!(arena_sizes[k] > 0.0)) throw ConfigError("curriculum.arena_sizes[" + std::to_string(k) + "]", "must be > 0");
  }
  if (games_per_iteration < 1) throw ConfigError("curriculum.games_per_iteration", "must be >= 1");
  if (iterations < 0) throw ConfigError("curriculum.iterations", "must be >= 0");
  if (dataset_size < 1) throw ConfigError("curriculum.dataset_size", "must be > 0");
  if (value_samples_per_game < 1) throw ConfigError("curriculum.value_samples_per_game", "must be >= 1");
}

nn::TrainOptions TrainSettings::options(std::uint64_t seed) const {
  nn::TrainOptions o;
  o.epochs = epochs;
  o.batch_size = batch_size;
  o.learning_rate = learning_rate;
  o.momentum = momentum;
  o.seed = seed;
  return o;
}

void TrainSettings::validate() const {
  if (epochs < 0) throw ConfigError("train.epochs", "must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum", "must be in [0, 1)");
}

std::vector<Game> make_posg(const CurriculumSpec& curriculum, const GameSpec& base, int k, std::uint64_t seed) {
  curriculum.validate();
  const std::uint64_t iter_seed = derive_seed(seed, static_cast<std::uint64_t>(k));
  std::vector<Game> games;
  games.reserve(static_cast<std::size_t>(curriculum.games_per_iteration));
  const auto lo = static_cast<std::uint64_t>(curriculum.team_size_range[0]);
  const auto span = static_cast<std::uint64_t>(curriculum.team_size_range[1] - curriculum.team_size_range[0] + 1);
  for (int g = 0; g < curriculum.games_per_iteration; ++g) {
    const std::uint64_t gs = derive_seed(iter_seed, static_cast<std::uint64_t>(g));
    Rng rng(derive_seed(gs, "posg"));
    GameSpec spec = base;
    spec.team_a_count = static_cast<int>(lo + rng.below(span));
    spec.team_b_count = static_cast<int>(lo + rng.below(span));
    spec.pos_bound = curriculum.arena_sizes[rng.below(curriculum.arena_sizes.size())];
    InitialCondition ic = sample_initial_condition(spec, gs);
    games.push_back({std::move(ic.spec), std::move(ic.state), gs});
  }
  return games;
}

namespace {

// `count` indices into [0, n): distinct when n >= count, otherwise all of
// them plus uniform draws with replacement. Sorted.
std::vector<std::size_t> pick_indices(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n >= count) {
    for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(count);
  } else {
    while (idx.size() < count) idx.push_back(rng.below(n));
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<StateSample> self_play_states(const std::vector<Game>& games, const NetworkSet& nets,
                                          const search::SearchConfig& learner_cfg, int per_game, std::uint64_t seed) {
  NTE_REQUIRE(!games.empty(), "self-play needs at least one game");
  NTE_REQUIRE(per_game >= 1, "per_game must be >= 1");
  std::vector<std::vector<StateSample>> per(games.size());
  parallel_for(games.size(), [&](std::size_t g) {
    const Game& game = games[g];
    const std::uint64_t gs = derive_seed(seed, game.seed);
    std::vector<JointState> trajectory;
    JointState s = game.initial;
    JointAction a;
    while (!is_terminal(s, game.spec)) {
      trajectory.push_back(s);
      a.assign(s.robots.size(), ActionVec{});
      search::SearchConfig cfg = learner_cfg;
      for (Team team : {Team::A, Team::B}) {
        cfg.seed = derive_seed(derive_seed(gs, static_cast<std::uint64_t>(s.step_index)), static_cast<std::uint64_t>(team));
        learner_team_action(s, team, nets, cfg, game.spec, a);
      }
      advance(s, a, game.spec);
    }
    Rng rng(derive_seed(gs, "subsample"));
    for (std::size_t t : pick_indices(trajectory.size(), static_cast<std::size_t>(per_game), rng)) {
      per[g].push_back({trajectory[t], static_cast<int>(g)});
    }
  });
  std::vector<StateSample> out;
  for (auto& v : per) out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  return out;
}

std::vector<nn::TrainingSample> build_policy_dataset(const std::vector<StateSample>& states,
                                                     const std::vector<Game>& games, Team team,
                                                     const NetworkSet& nets, const search::SearchConfig& expert_cfg,
                                                     std::uint64_t seed,
                                                     const std::function<void(const std::string&)>& warn) {
  std::vector<std::vector<nn::TrainingSample>> per(states.size());
  std::vector<std::string> failures(states.size());
  parallel_for(states.size(), [&](std::size_t j) {
    const StateSample& st = states[j];
    const Game& game = games.at(static_cast<std::size_t>(st.game));
    NTE_REQUIRE(!is_terminal(st.state, game.spec), "policy labels need non-terminal states");
    bool any = false;
    for (const RobotState& r : st.state.robots) any = any || (r.team == team && r.active);
    if (!any) return;
    search::SearchConfig cfg = expert_cfg;
    cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(j));
    GameSearchResult res;
    try {
      res = expert_policy(st.state, team, nets, cfg, game.spec);
    } catch (const DomainError& e) {
      failures[j] = e.what();
      return;
    }
    const int sd = game.spec.state_dim();
    const int ad = game.spec.action_dim();
    for (std::size_t i = 0; i < st.state.robots.size(); ++i) {
      const RobotState& r = st.state.robots[i];
      if (r.team != team || !r.active) continue;
      const ActionVec label = visit_weighted_action(res.stats, static_cast<int>(i));
      nn::TrainingSample s;
      s.input = nn::policy_input(observe(static_cast<int>(i), st.state, game.spec), sd);
      s.target.assign(label.begin(), label.begin() + ad);
      s.source_seed = game.seed;
      per[j].push_back(std::move(s));
    }
  });
  std::vector<nn::TrainingSample> out;
  for (std::size_t j = 0; j < per.size(); ++j) {
    if (!failures[j].empty() && warn) warn("skipping state " + std::to_string(j) + ": " + failures[j]);
    out.insert(out.end(), std::make_move_iterator(per[j].begin()), std::make_move_iterator(per[j].end()));
  }
  return out;
}

std::vector<nn::TrainingSample> build_value_dataset(const std::vector<Game>& games, const NetworkSet& nets,
                                                    int per_game, std::uint64_t seed) {
  NTE_REQUIRE(per_game >= 1, "per_game must be >= 1");
  std::vector<std::vector<nn::TrainingSample>> per(games.size());
  parallel_for(games.size(), [&](std::size_t g) {
    const Game& game = games[g];
    const std::uint64_t gs = derive_seed(seed, game.seed);
    Rng rng(derive_seed(gs, "policy_rollout"));
    std::vector<JointState> trajectory;
    JointState s = game.initial;
    JointAction a;
    while (!is_terminal(s, game.spec)) {
      trajectory.push_back(s);
      a.assign(s.robots.size(), ActionVec{});
      policy_team_action(s, Team::A, nets, game.spec, rng, a);
      policy_team_action(s, Team::B, nets, game.spec, rng, a);
      advance(s, a, game.spec);
    }
    const double outcome = normalized_value(s);
    Rng pick(derive_seed(gs, "subsample"));
    const int sd = game.spec.state_dim();
    for (int n = 0; n < per_game; ++n) {
      const JointState& st = trajectory[pick.below(trajectory.size())];
      nn::TrainingSample sample;
      sample.input = nn::value_input(value_observation(st, game.spec), sd);
      sample.target = {outcome};
      sample.source_seed = game.seed;
      per[g].push_back(std::move(sample));
    }
  });
  std::vector<nn::TrainingSample> out;
  for (auto& v : per) out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  return out;
}

fs::path checkpoint_dir(const fs::path& train_out, int k) {
  return train_out / "checkpoints" / ("k" + std::to_string(k));
}

NetworkBundle load_bundle(const fs::path& dir) {
  NetworkBundle b;
  b.policy_a = io::load_checkpoint(dir / "policy_a.json").network;
  b.policy_b = io::load_checkpoint(dir / "policy_b.json").network;
  b.value = io::load_checkpoint(dir / "value.json").network;
  return b;
}

namespace {

std::string rel(const fs::path& p, const fs::path& base) { return fs::relative(p, base).generic_string(); }

struct Trained {
  nn::Network net;
  std::vector<double> trace;
};

Trained fit(const nn::Network* parent, const nn::Architecture& arch, const std::vector<nn::TrainingSample>& data,
            const TrainSettings& ts, std::uint64_t seed) {
  nn::Network init = (ts.warm_start && parent) ? *parent : nn::Network::initialized(arch, derive_seed(seed, "init"));
  nn::TrainResult r = nn::train(std::move(init), data, ts.options(derive_seed(seed, "train")));
  io::quantize_f32(r.network.params());
  return {std::move(r.network), std::move(r.loss_trace)};
}

}  // namespace

std::vector<IterationSummary> meta_learn(const MetaLearnConfig& cfg, const fs::path& out_dir, std::uint64_t seed,
                                         const Progress& progress) {
  cfg.base.validate();
  cfg.search.validate();
  cfg.curriculum.validate();
  cfg.train.validate();
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };

  fs::create_directories(out_dir);
  const nn::Architecture pol_arch = nn::policy_architecture(cfg.base);
  const nn::Architecture val_arch = nn::value_architecture(cfg.base);
  const int sd = cfg.base.state_dim();
  const int ad = cfg.base.action_dim();

  std::optional<NetworkBundle> current;
  json lineage = {{"format", "nte-lineage-1"},
                  {"config_hash", cfg.config_hash},
                  {"seed", seed},
                  {"iterations", json::array()}};
  std::vector<IterationSummary> summaries;

  for (int k = 0; k <= cfg.curriculum.iterations; ++k) {
    const std::uint64_t ks = derive_seed(derive_seed(seed, "iteration"), static_cast<std::uint64_t>(k));
    const bool biased = current.has_value();
    const NetworkSet nets = biased ? current->view() : NetworkSet{};
    // Artifacts go to staging directories that are renamed once the whole
    // iteration succeeded; manifests already use the final names.
    const fs::path final_iter_dir = out_dir / ("iter" + std::to_string(k));
    const fs::path final_ck_dir = checkpoint_dir(out_dir, k + 1);
    const fs::path iter_dir = final_iter_dir.string() + ".partial";
    const fs::path ck_dir = final_ck_dir.string() + ".partial";
    const fs::path parent_dir = checkpoint_dir(out_dir, k);
    fs::remove_all(iter_dir);
    fs::remove_all(ck_dir);
    auto final_name = [&](const fs::path& staged) {
      const fs::path dir = staged.parent_path() == iter_dir ? final_iter_dir : final_ck_dir;
      return rel(dir / staged.filename(), out_dir);
    };

    say("iteration " + std::to_string(k) + ": self-play");
    const std::vector<Game> games = make_posg(cfg.curriculum, cfg.base, k, derive_seed(ks, "posg"));
    const int per_game =
        (cfg.curriculum.dataset_size + cfg.curriculum.games_per_iteration - 1) / cfg.curriculum.games_per_iteration;
    const std::vector<StateSample> states =
        self_play_states(games, nets, cfg.search.learner(biased, 0), per_game, derive_seed(ks, "selfplay"));

    IterationSummary summary;
    summary.iteration = k;
    summary.checkpoint_dir = final_ck_dir;
    json iter = {{"iteration", k}, {"seed", ks}, {"biased", biased}, {"states", states.size()}};
    iter["parent"] = biased ? json(rel(parent_dir, out_dir)) : json(nullptr);
    iter["checkpoint_dir"] = rel(final_ck_dir, out_dir);

    NetworkBundle next;
    for (Team team : {Team::A, Team::B}) {
      const std::string t = to_string(team);
      const std::string name = team == Team::A ? "policy_a" : "policy_b";
      say("iteration " + std::to_string(k) + ": expert labels for team " + t);
      const std::uint64_t ts = derive_seed(ks, name);
      std::vector<nn::TrainingSample> data = build_policy_dataset(
          states, games, team, nets, cfg.search.expert(biased, 0), derive_seed(ts, "expert"), progress);
      if (data.size() > static_cast<std::size_t>(cfg.curriculum.dataset_size))
        data.resize(static_cast<std::size_t>(cfg.curriculum.dataset_size));
      if (data.empty()) throw DomainError("iteration " + std::to_string(k) + ": empty policy dataset for team " + t);
      io::save_dataset(iter_dir / name, data, {"policy", t, k, ts, cfg.config_hash, sd, sd, ad});

      say("iteration " + std::to_string(k) + ": training " + name + " on " + std::to_string(data.size()) + " samples");
      const nn::Network* parent = biased ? (team == Team::A ? &current->policy_a : &current->policy_b) : nullptr;
      Trained tr = fit(parent, pol_arch, data, cfg.train, ts);
      io::write_text(iter_dir / (name + "_loss.csv"),
                     "# config_hash: " + cfg.config_hash + "\n" + io::loss_trace_csv(tr.trace));
      io::save_checkpoint(ck_dir / name, tr.net,
                          {"policy", t, ts, k, cfg.config_hash, biased ? rel(parent_dir / (name + ".json"), out_dir) : "",
                           final_name(iter_dir / (name + ".json"))});
      const double last = tr.trace.empty() ? nn::mean_loss(tr.net, data) : tr.trace.back();
      if (team == Team::A) {
        summary.policy_samples_a = data.size();
        summary.final_loss_a = last;
        next.policy_a = std::move(tr.net);
      } else {
        summary.policy_samples_b = data.size();
        summary.final_loss_b = last;
        next.policy_b = std::move(tr.net);
      }
    }

    say("iteration " + std::to_string(k) + ": value rollouts");
    const std::uint64_t vs = derive_seed(ks, "value");
    CurriculumSpec vc = cfg.curriculum;
    vc.games_per_iteration =
        (cfg.curriculum.dataset_size + cfg.curriculum.value_samples_per_game - 1) / cfg.curriculum.value_samples_per_game;
    const std::vector<Game> vgames = make_posg(vc, cfg.base, k, derive_seed(vs, "posg"));
    const NetworkSet fresh{&next.policy_a, &next.policy_b, nullptr};
    const std::vector<nn::TrainingSample> vdata =
        build_value_dataset(vgames, fresh, cfg.curriculum.value_samples_per_game, derive_seed(vs, "rollout"));
    io::save_dataset(iter_dir / "value", vdata, {"value", "", k, vs, cfg.config_hash, 1, sd, 1});
    say("iteration " + std::to_string(k) + ": training value on " + std::to_string(vdata.size()) + " samples");
    Trained tv = fit(biased ? &current->value : nullptr, val_arch, vdata, cfg.train, vs);
    io::write_text(iter_dir / "value_loss.csv", "# config_hash: " + cfg.config_hash + "\n" + io::loss_trace_csv(tv.trace));
    io::save_checkpoint(ck_dir / "value", tv.net,
                        {"value", "", vs, k, cfg.config_hash, biased ? rel(parent_dir / "value.json", out_dir) : "",
                         final_name(iter_dir / "value.json")});
    summary.value_samples = vdata.size();
    summary.final_loss_value = tv.trace.empty() ? nn::mean_loss(tv.net, vdata) : tv.trace.back();
    next.value = std::move(tv.net);

    iter["datasets"] = {{"policy_a", final_name(iter_dir / "policy_a.json")},
                        {"policy_b", final_name(iter_dir / "policy_b.json")},
                        {"value", final_name(iter_dir / "value.json")}};
    iter["checkpoints"] = {{"policy_a", final_name(ck_dir / "policy_a.json")},
                           {"policy_b", final_name(ck_dir / "policy_b.json")},
                           {"value", final_name(ck_dir / "value.json")}};
    iter["final_loss"] = {{"policy_a", summary.final_loss_a},
                          {"policy_b", summary.final_loss_b},
                          {"value", summary.final_loss_value}};
    fs::remove_all(final_iter_dir);
    fs::remove_all(final_ck_dir);
    fs::rename(iter_dir, final_iter_dir);
    fs::rename(ck_dir, final_ck_dir);
    lineage["iterations"].push_back(iter);
    io::write_text(out_dir / "lineage.json", lineage.dump(2) + "\n");

    current = std::move(next);
    summaries.push_back(summary);
  }
  return summaries;
}

}  // namespace nte::improve
