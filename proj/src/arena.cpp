#include "nte/arena.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "nte/error.hpp"
#include "nte/parallel.hpp"

namespace nte::arena {

namespace {

const char* kind_name(VariantKind k) {
  switch (k) {
    case VariantKind::UnbiasedLearner: return "unbiased_learner";
    case VariantKind::BiasedLearner: return "biased_learner";
    case VariantKind::UnbiasedExpert: return "unbiased_expert";
    case VariantKind::BiasedExpert: return "biased_expert";
    case VariantKind::RandomUniform: return "random";
  }
  return "?";
}

int parse_int(const std::string& text, const std::string& whole) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError("variant", "bad number in '" + whole + "'");
  return v;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string Variant::name() const {
  std::string s = kind_name(kind);
  if (biased()) s += ":k" + std::to_string(k);
  if (budget > 0) s += "@" + std::to_string(budget);
  return s;
}

Variant parse_variant(const std::string& text) {
  Variant v;
  std::string body = text;
  if (const auto at = body.find('@'); at != std::string::npos) {
    v.budget = parse_int(body.substr(at + 1), text);
    if (v.budget < 1) throw ConfigError("variant", "budget must be >= 1 in '" + text + "'");
    body.resize(at);
  }
  std::string kind = body;
  if (const auto colon = body.find(':'); colon != std::string::npos) {
    kind = body.substr(0, colon);
    std::string idx = body.substr(colon + 1);
    if (!idx.empty() && idx[0] == 'k') idx.erase(0, 1);
    v.k = parse_int(idx, text);
    if (v.k < 0) throw ConfigError("variant", "checkpoint index must be >= 0 in '" + text + "'");
  }
  if (kind == "unbiased_learner") v.kind = VariantKind::UnbiasedLearner;
  else if (kind == "biased_learner") v.kind = VariantKind::BiasedLearner;
  else if (kind == "unbiased_expert") v.kind = VariantKind::UnbiasedExpert;
  else if (kind == "biased_expert") v.kind = VariantKind::BiasedExpert;
  else if (kind == "random") v.kind = VariantKind::RandomUniform;
  else throw ConfigError("variant", "unknown variant '" + text + "'");
  if (!v.biased() && body.find(':') != std::string::npos)
    throw ConfigError("variant", "only biased variants take a checkpoint index: '" + text + "'");
  return v;
}

double performance_score(const MatchResult& r, Side side) {
  const double attacker = r.team_a_count > 0 ? static_cast<double>(r.reached) / r.team_a_count : 0.0;
  return side == Side::Attacker ? attacker : 1.0 - attacker;
}

const improve::NetworkBundle& CheckpointCache::get(int k) {
  auto it = loaded_.find(k);
  if (it == loaded_.end()) {
    auto b = std::make_unique<improve::NetworkBundle>(improve::load_bundle(improve::checkpoint_dir(root_, k)));
    it = loaded_.emplace(k, std::move(b)).first;
  }
  return *it->second;
}

namespace {

// Fills `team`'s entries of `out`; appends one latency per decision.
void act(const Variant& v, Team team, const JointState& s, const GameSpec& spec, std::uint64_t seed,
         const ArenaSettings& settings, CheckpointCache& cache, JointAction& out, std::vector<double>& ms) {
  const NetworkSet nets = v.biased() ? cache.get(v.k).view() : NetworkSet{};
  if (v.kind == VariantKind::RandomUniform) {
    Rng rng(derive_seed(seed, "random"));
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < s.robots.size(); ++i) {
      if (s.robots[i].team == team && s.robots[i].active) out[i] = sample_uniform_action(spec, rng);
    }
    ms.push_back(ms_since(t0));
    return;
  }
  if (v.expert()) {
    const int budget = v.budget > 0 ? v.budget : settings.search.expert_budget;
    const auto t0 = std::chrono::steady_clock::now();
    expert_team_action(s, team, nets, settings.search.with_budget(budget, v.biased(), seed), spec, out);
    ms.push_back(ms_since(t0));
    return;
  }
  const int budget = v.budget > 0 ? v.budget : settings.search.learner_budget;
  const search::SearchConfig cfg = settings.search.with_budget(budget, v.biased(), seed);
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    if (s.robots[i].team != team || !s.robots[i].active) continue;
    search::SearchConfig rc = cfg;
    rc.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    const auto t0 = std::chrono::steady_clock::now();
    out[i] = learner_policy(team, observe(static_cast<int>(i), s, spec), nets, rc, spec,
                            LearnerContext{s.reached_count, s.step_index});
    ms.push_back(ms_since(t0));
  }
}

}  // namespace

MatchResult play_match(const Variant& attacker, const Variant& defender, const GameSpec& spec,
                       const JointState& initial, std::uint64_t seed, const ArenaSettings& settings,
                       CheckpointCache& cache, std::vector<StepRecord>* record) {
  MatchResult r;
  r.attacker = attacker.display();
  r.defender = defender.display();
  r.attacker_k = attacker.biased() ? attacker.k : 0;
  r.defender_k = defender.biased() ? defender.k : 0;
  r.seed = seed;
  r.team_a_count = initial.team_count(Team::A);
  r.team_b_count = initial.team_count(Team::B);

  JointState s = initial;
  JointAction a;
  while (!is_terminal(s, spec)) {
    a.assign(s.robots.size(), ActionVec{});
    const std::uint64_t ts = derive_seed(seed, static_cast<std::uint64_t>(s.step_index));
    act(attacker, Team::A, s, spec, derive_seed(ts, "attacker"), settings, cache, a, r.attacker_ms);
    act(defender, Team::B, s, spec, derive_seed(ts, "defender"), settings, cache, a, r.defender_ms);
    StepEvents ev;
    if (record) record->push_back({s, a, {}});
    advance(s, a, spec, &ev);
    if (record) record->back().events = std::move(ev);
  }
  r.reached = s.reached_count;
  r.steps = s.step_index;
  return r;
}

std::vector<MatchResult> run_tournament(const std::vector<Variant>& attackers, const std::vector<Variant>& defenders,
                                        const GameSpec& spec, const ArenaSettings& settings, CheckpointCache& cache,
                                        const std::function<void(const std::string&)>& progress) {
  NTE_REQUIRE(!attackers.empty() && !defenders.empty(), "tournament needs variants on both sides");
  NTE_REQUIRE(settings.n_seeds >= 1, "tournament needs at least one seed");
  settings.search.validate();
  for (const auto* side : {&attackers, &defenders}) {
    for (const Variant& v : *side) {
      if (v.biased()) cache.get(v.k);  // load up front, workers only read
    }
  }

  std::vector<InitialCondition> ics;
  std::vector<std::uint64_t> seeds;
  for (int n = 0; n < settings.n_seeds; ++n) {
    seeds.push_back(derive_seed(settings.seed, static_cast<std::uint64_t>(n)));
    ics.push_back(sample_initial_condition(spec, seeds.back()));
  }

  const std::size_t pairs = attackers.size() * defenders.size();
  const std::size_t total = pairs * ics.size();
  std::vector<MatchResult> results(total);
  parallel_for(total, [&](std::size_t idx) {
    const std::size_t pair = idx / ics.size();
    const std::size_t n = idx % ics.size();
    const Variant& va = attackers[pair / defenders.size()];
    const Variant& vb = defenders[pair % defenders.size()];
    try {
      results[idx] = play_match(va, vb, ics[n].spec, ics[n].state, seeds[n], settings, cache);
    } catch (const std::exception& e) {
      MatchResult& r = results[idx];
      r.attacker = va.display();
      r.defender = vb.display();
      r.attacker_k = va.biased() ? va.k : 0;
      r.defender_k = vb.biased() ? vb.k : 0;
      r.seed = seeds[n];
      r.team_a_count = ics[n].state.team_count(Team::A);
      r.team_b_count = ics[n].state.team_count(Team::B);
      r.error = e.what();
    }
    if (progress && n + 1 == ics.size()) progress(va.display() + " vs " + vb.display() + " done");
  });
  return results;
}

std::string results_csv(const std::vector<MatchResult>& results, const std::string& config_hash) {
  std::string out = "# config_hash: " + config_hash + "\n";
  out += "attacker,attacker_k,defender,defender_k,seed,team_a_count,team_b_count,reached,steps,attacker_score,"
         "defender_score,error\n";
  for (const MatchResult& r : results) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += r.attacker + "," + std::to_string(r.attacker_k) + "," + r.defender + "," + std::to_string(r.defender_k) +
           "," + std::to_string(r.seed) + "," + std::to_string(r.team_a_count) + "," +
           std::to_string(r.team_b_count) + "," + std::to_string(r.reached) + "," + std::to_string(r.steps) + "," +
           fmt(performance_score(r, Side::Attacker)) + "," + fmt(performance_score(r, Side::Defender)) + "," + err +
           "\n";
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q / 100.0 * n)));
  return values[std::min(rank, values.size()) - 1];
}

std::vector<PlotRow> plot_rows(const std::vector<MatchResult>& results) {
  struct Acc {
    PlotRow row;
    std::vector<double> scores;
    std::vector<double> ms;
  };
  std::vector<Acc> acc;
  auto slot = [&](const std::string& variant, const char* role, int k) -> Acc& {
    for (Acc& a : acc) {
      if (a.row.variant == variant && a.row.role == role && a.row.k == k) return a;
    }
    acc.push_back({});
    acc.back().row.variant = variant;
    acc.back().row.role = role;
    acc.back().row.k = k;
    return acc.back();
  };
  for (const char* role : {"attacker", "defender"}) {
    const bool att = role[0] == 'a';
    for (const MatchResult& r : results) {
      if (!r.error.empty()) continue;
      Acc& a = att ? slot(r.attacker, role, r.attacker_k) : slot(r.defender, role, r.defender_k);
      a.scores.push_back(performance_score(r, att ? Side::Attacker : Side::Defender));
      const auto& ms = att ? r.attacker_ms : r.defender_ms;
      a.ms.insert(a.ms.end(), ms.begin(), ms.end());
    }
  }
  std::vector<PlotRow> rows;
  for (Acc& a : acc) {
    const auto n = static_cast<double>(a.scores.size());
    double mean = 0.0;
    for (double s : a.scores) mean += s;
    mean /= n;
    double var = 0.0;
    for (double s : a.scores) var += (s - mean) * (s - mean);
    a.row.mean_score = mean;
    a.row.var_score = var / n;
    a.row.n_games = static_cast<int>(a.scores.size());
    a.row.p50_ms = percentile(a.ms, 50.0);
    a.row.p95_ms = percentile(a.ms, 95.0);
    rows.push_back(a.row);
  }
  return rows;
}

std::string plot_csv(const std::vector<PlotRow>& rows, const std::string& config_hash) {
  std::string out = "# config_hash: " + config_hash + "\n";
  out += "variant,role,k,mean_score,var_score,n_games,p50_ms,p95_ms\n";
  for (const PlotRow& r : rows) {
    out += r.variant + "," + r.role + "," + std::to_string(r.k) + "," + fmt(r.mean_score) + "," + fmt(r.var_score) +
           "," + std::to_string(r.n_games) + "," + fmt(r.p50_ms) + "," + fmt(r.p95_ms) + "\n";
  }
  return out;
}

nlohmann::json match_json(const MatchResult& r) {
  return {{"attacker", r.attacker},
          {"attacker_k", r.attacker_k},
          {"defender", r.defender},
          {"defender_k", r.defender_k},
          {"seed", r.seed},
          {"team_a_count", r.team_a_count},
          {"team_b_count", r.team_b_count},
          {"reached", r.reached},
          {"steps", r.steps},
          {"attacker_score", performance_score(r, Side::Attacker)},
          {"defender_score", performance_score(r, Side::Defender)},
          {"attacker_ms", r.attacker_ms},
          {"defender_ms", r.defender_ms},
          {"error", r.error}};
}

}  // namespace nte::arena
