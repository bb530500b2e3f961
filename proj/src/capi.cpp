#include "nte/nte.h"

#include <cstring>
#include <filesystem>
#include <string>

#include "nte/arena.hpp"
#include "nte/config.hpp"
#include "nte/error.hpp"
#include "nte/game_search.hpp"
#include "nte/io.hpp"
#include "nte/selftest.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

struct nte_config {
  nte::config::RunConfig cfg;
};

struct nte_game {
  nte::GameSpec spec;
  nte::JointState state;
};

namespace {

thread_local std::string g_last_error;

nte_status fail(nte_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

// Runs f, mapping exceptions to status codes.
template <class F>
nte_status guarded(F&& f) {
  try {
    f();
    return NTE_OK;
  } catch (const nte::ConfigError& e) {
    return fail(NTE_ERR_CONFIG, e.what());
  } catch (const nte::ContractViolation& e) {
    return fail(NTE_ERR_CONTRACT, e.what());
  } catch (const nte::DomainError& e) {
    return fail(NTE_ERR_DOMAIN, e.what());
  } catch (const json::exception& e) {
    return fail(NTE_ERR_DOMAIN, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(NTE_ERR_DOMAIN, e.what());
  } catch (const std::exception& e) {
    return fail(NTE_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(NTE_ERR_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define NTE_NONNULL(p)                                            \
  do {                                                            \
    if ((p) == nullptr) return fail(NTE_ERR_NULL, #p " is NULL"); \
  } while (0)

std::vector<nte::arena::Variant> variants_from(const json& list, const std::string& path) {
  if (!list.is_array() || list.empty()) throw nte::ConfigError(path, "expected a non-empty array of variant names");
  std::vector<nte::arena::Variant> out;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string p = path + "[" + std::to_string(k) + "]";
    if (!list[k].is_string()) throw nte::ConfigError(p, "expected a string");
    try {
      out.push_back(nte::arena::parse_variant(list[k].get<std::string>()));
    } catch (const nte::ConfigError& e) {
      throw nte::ConfigError(p, e.what());
    }
  }
  return out;
}

fs::path checkpoint_root(const nte::config::RunConfig& cfg, const char* override_dir) {
  if (override_dir && *override_dir) return override_dir;
  return cfg.paths.checkpoint_dir.empty() ? cfg.paths.out_dir : cfg.paths.checkpoint_dir;
}

json events_json(const nte::StepEvents& e) {
  return {{"tagged", e.tagged}, {"reached", e.reached}, {"violated", e.violated}, {"terminal", e.terminal}};
}

}  // namespace

extern "C" {

const char* nte_version(void) { return "1.0.0"; }

const char* nte_last_error(void) { return g_last_error.c_str(); }

void nte_string_free(char* s) { delete[] s; }

nte_status nte_config_default(const char* profile, nte_config** out) {
  NTE_NONNULL(out);
  return guarded([&] {
    *out = new nte_config{nte::config::preset(nte::config::profile_from_string(profile ? profile : "paper_defaults"))};
  });
}

nte_status nte_config_parse(const char* json_text, nte_config** out) {
  NTE_NONNULL(json_text);
  NTE_NONNULL(out);
  return guarded([&] { *out = new nte_config{nte::config::parse_config_text(json_text)}; });
}

nte_status nte_config_load(const char* path, nte_config** out) {
  NTE_NONNULL(path);
  NTE_NONNULL(out);
  return guarded([&] { *out = new nte_config{nte::config::load_config(path)}; });
}

void nte_config_free(nte_config* cfg) { delete cfg; }

nte_status nte_config_to_json(const nte_config* cfg, char** out_json) {
  NTE_NONNULL(cfg);
  NTE_NONNULL(out_json);
  return guarded([&] { *out_json = dup(nte::config::to_json(cfg->cfg).dump(2)); });
}

nte_status nte_config_hash(const nte_config* cfg, char** out_hex) {
  NTE_NONNULL(cfg);
  NTE_NONNULL(out_hex);
  return guarded([&] { *out_hex = dup(nte::config::config_hash(cfg->cfg)); });
}

nte_status nte_train(const nte_config* cfg, const char* out_dir, uint64_t seed, nte_progress_fn progress,
                     void* user) {
  NTE_NONNULL(cfg);
  return guarded([&] {
    const fs::path dir = (out_dir && *out_dir) ? fs::path(out_dir) : fs::path(cfg->cfg.paths.out_dir);
    fs::create_directories(dir);
    json resolved = nte::config::to_json(cfg->cfg);
    resolved["config_hash"] = nte::config::config_hash(cfg->cfg);
    resolved["seed"] = seed;
    nte::io::write_text(dir / "config.json", resolved.dump(2) + "\n");
    nte::improve::Progress cb;
    if (progress) cb = [&](const std::string& m) { progress(m.c_str(), user); };
    nte::improve::meta_learn(nte::config::meta_learn_config(cfg->cfg), dir, seed, cb);
  });
}

nte_status nte_eval(const nte_config* cfg, const char* variants_json, const char* checkpoint_dir, int games,
                    uint64_t seed, const char* results_csv, const char* plot_csv, const char* log_jsonl) {
  NTE_NONNULL(cfg);
  NTE_NONNULL(results_csv);
  return guarded([&] {
    const nte::config::RunConfig& rc = cfg->cfg;
    json spec = {{"attackers", rc.eval.attackers}, {"defenders", rc.eval.defenders}};
    if (variants_json) {
      try {
        spec = json::parse(variants_json);
      } catch (const json::parse_error& e) {
        throw nte::ConfigError("variants", std::string("invalid JSON: ") + e.what());
      }
      if (!spec.is_object()) throw nte::ConfigError("variants", "expected an object");
      for (auto it = spec.begin(); it != spec.end(); ++it) {
        if (it.key() != "attackers" && it.key() != "defenders")
          throw nte::ConfigError("variants." + it.key(), "unknown key");
      }
    }
    const auto attackers = variants_from(spec.value("attackers", json()), "variants.attackers");
    const auto defenders = variants_from(spec.value("defenders", json()), "variants.defenders");

    nte::arena::ArenaSettings settings;
    settings.search = rc.search;
    settings.n_seeds = games > 0 ? games : rc.eval.games;
    settings.seed = nte::derive_seed(seed, "arena");
    nte::arena::CheckpointCache cache(checkpoint_root(rc, checkpoint_dir));
    const auto results = nte::arena::run_tournament(attackers, defenders, rc.game, settings, cache);

    const std::string hash = nte::config::config_hash(rc);
    nte::io::write_text(results_csv, nte::arena::results_csv(results, hash));
    if (plot_csv && *plot_csv)
      nte::io::write_text(plot_csv, nte::arena::plot_csv(nte::arena::plot_rows(results), hash));
    if (log_jsonl && *log_jsonl) {
      std::string lines;
      for (const auto& r : results) {
        json j = nte::arena::match_json(r);
        j["config_hash"] = hash;
        lines += j.dump() + "\n";
      }
      nte::io::write_text(log_jsonl, lines);
    }
  });
}

nte_status nte_rollout(const nte_config* cfg, const char* attacker, const char* defender,
                       const char* checkpoint_dir, uint64_t seed, const char* out_jsonl) {
  NTE_NONNULL(cfg);
  NTE_NONNULL(out_jsonl);
  return guarded([&] {
    const nte::config::RunConfig& rc = cfg->cfg;
    const auto va = nte::arena::parse_variant(attacker ? attacker : rc.eval.attackers.front());
    const auto vb = nte::arena::parse_variant(defender ? defender : rc.eval.defenders.front());
    nte::arena::ArenaSettings settings;
    settings.search = rc.search;
    const std::uint64_t game_seed = nte::derive_seed(seed, "rollout");
    const nte::InitialCondition ic = nte::sample_initial_condition(rc.game, game_seed);
    nte::arena::CheckpointCache cache(checkpoint_root(rc, checkpoint_dir));
    std::vector<nte::arena::StepRecord> steps;
    const auto result = nte::arena::play_match(va, vb, ic.spec, ic.state, game_seed, settings, cache, &steps);

    const std::string hash = nte::config::config_hash(rc);
    const int sd = ic.spec.state_dim();
    const int ad = ic.spec.action_dim();
    std::string lines;
    for (const auto& st : steps) {
      json j = nte::io::state_json(st.state, sd);
      j["t"] = st.state.step_index;
      j["action"] = nte::io::action_json(st.action, ad);
      j["events"] = events_json(st.events);
      j["config_hash"] = hash;
      lines += j.dump() + "\n";
    }
    nte::JointState final_state = ic.state;
    if (!steps.empty()) {
      final_state = steps.back().state;
      nte::advance(final_state, steps.back().action, ic.spec);
    }
    json last = nte::io::state_json(final_state, sd);
    last["t"] = final_state.step_index;
    last["final"] = true;
    last["goal"] = std::vector<double>(ic.spec.goal_position.begin(), ic.spec.goal_position.begin() + ic.spec.pos_dim());
    last["attacker"] = result.attacker;
    last["defender"] = result.defender;
    last["attacker_score"] = nte::arena::performance_score(result, nte::arena::Side::Attacker);
    last["config_hash"] = hash;
    lines += last.dump() + "\n";
    nte::io::write_text(out_jsonl, lines);
  });
}

nte_status nte_inspect(const char* path, char** out_json) {
  NTE_NONNULL(path);
  NTE_NONNULL(out_json);
  return guarded([&] {
    fs::path p = path;
    if (fs::is_directory(p)) p /= "lineage.json";
    p = nte::io::manifest_path(p);
    json j = json::parse(nte::io::read_text(p));
    const std::string format = j.value("format", std::string{});
    json summary = {{"path", p.string()}, {"format", format}};
    if (format == "nte-checkpoint-1") {
      const auto ck = nte::io::load_checkpoint(p);
      summary["parameter_count"] = ck.network.params().size();
      summary["architecture_parameter_count"] = ck.network.arch().parameter_count();
      summary["consistent"] = ck.network.params().size() == ck.network.arch().parameter_count();
    } else if (format == "nte-dataset-1") {
      const auto ds = nte::io::load_dataset(p);
      summary["sample_count"] = ds.samples.size();
      summary["consistent"] = ds.samples.size() == j.at("sample_count").get<std::size_t>();
    } else if (format != "nte-lineage-1") {
      throw nte::DomainError(p.string() + ": unrecognized manifest format '" + format + "'");
    }
    *out_json = dup(json{{"manifest", j}, {"summary", summary}}.dump(2));
  });
}

nte_status nte_selftest(uint64_t seed, int scale, char** out_report, int* passed) {
  NTE_NONNULL(passed);
  return guarded([&] {
    const nte::SelftestReport r = nte::run_selftest(seed, scale);
    *passed = r.passed() ? 1 : 0;
    if (out_report) {
      json checks = json::array();
      for (const auto& c : r.checks) {
        checks.push_back(
            {{"name", c.name}, {"cases", c.cases}, {"failures", c.failures}, {"first_failure", c.first_failure}});
      }
      *out_report = dup(json{{"passed", r.passed()}, {"checks", checks}}.dump(2));
    }
  });
}

nte_status nte_game_create(const nte_config* cfg, uint64_t seed, nte_game** out) {
  NTE_NONNULL(cfg);
  NTE_NONNULL(out);
  return guarded([&] {
    nte::InitialCondition ic = nte::sample_initial_condition(cfg->cfg.game, seed);
    *out = new nte_game{std::move(ic.spec), std::move(ic.state)};
  });
}

void nte_game_free(nte_game* game) { delete game; }

nte_status nte_game_robot_count(const nte_game* game, int* out) {
  NTE_NONNULL(game);
  NTE_NONNULL(out);
  *out = static_cast<int>(game->state.robots.size());
  return NTE_OK;
}

nte_status nte_game_action_dim(const nte_game* game, int* out) {
  NTE_NONNULL(game);
  NTE_NONNULL(out);
  *out = game->spec.action_dim();
  return NTE_OK;
}

nte_status nte_game_state_json(const nte_game* game, char** out_json) {
  NTE_NONNULL(game);
  NTE_NONNULL(out_json);
  return guarded([&] {
    json j = nte::io::state_json(game->state, game->spec.state_dim());
    j["terminal"] = nte::is_terminal(game->state, game->spec);
    *out_json = dup(j.dump());
  });
}

nte_status nte_game_step(nte_game* game, const double* actions, size_t count, int* terminal) {
  NTE_NONNULL(game);
  NTE_NONNULL(actions);
  return guarded([&] {
    const std::size_t n = game->state.robots.size();
    const auto ad = static_cast<std::size_t>(game->spec.action_dim());
    if (count != n * ad)
      throw nte::ContractViolation("expected " + std::to_string(n * ad) + " action values, got " + std::to_string(count));
    nte::JointAction a(n, nte::ActionVec{});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < ad; ++k) a[i][k] = actions[i * ad + k];
    }
    const bool done = nte::advance(game->state, a, game->spec);
    if (terminal) *terminal = done ? 1 : 0;
  });
}

nte_status nte_game_search(const nte_game* game, int team, int budget, uint64_t seed, double* out_actions,
                           size_t count, char** out_stats_json) {
  NTE_NONNULL(game);
  NTE_NONNULL(out_actions);
  return guarded([&] {
    if (team != 0 && team != 1) throw nte::ConfigError("team", "must be 0 (attackers) or 1 (defenders)");
    const std::size_t n = game->state.robots.size();
    const auto ad = static_cast<std::size_t>(game->spec.action_dim());
    if (count != n * ad)
      throw nte::ContractViolation("expected room for " + std::to_string(n * ad) + " values, got " + std::to_string(count));
    nte::search::SearchConfig cfg;
    cfg.budget = budget;
    cfg.seed = seed;
    const auto res = nte::expert_policy(game->state, team == 0 ? nte::Team::A : nte::Team::B, {}, cfg, game->spec);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < ad; ++k) out_actions[i * ad + k] = res.action[i][k];
    }
    if (out_stats_json) *out_stats_json = dup(nte::io::root_stats_json(res.stats, static_cast<int>(ad)).dump());
  });
}

nte_status nte_game_terminal_value(const nte_game* game, int* out) {
  NTE_NONNULL(game);
  NTE_NONNULL(out);
  return guarded([&] { *out = nte::terminal_value(game->state, game->spec); });
}

}  // extern "C"
