#include "nte/config.hpp"

#include <set>

#include "nte/arena.hpp"
#include "nte/error.hpp"
#include "nte/io.hpp"

namespace nte::config {

using json = nlohmann::json;

std::string to_string(Profile p) { return p == Profile::DeskScale ? "desk_scale" : "paper_defaults"; }

Profile profile_from_string(const std::string& s) {
  if (s == "paper_defaults") return Profile::PaperDefaults;
  if (s == "desk_scale") return Profile::DeskScale;
  throw ConfigError("profile", "unknown profile '" + s + "' (paper_defaults, desk_scale)");
}

RunConfig preset(Profile p) {
  RunConfig c;
  c.profile = p;
  if (p == Profile::DeskScale) {
    c.game.team_a_count = 1;
    c.game.team_b_count = 1;
    c.game.pos_bound = 1.0;
    c.search.expert_budget = 1000;
    c.curriculum.team_size_range = {1, 1};
    c.curriculum.arena_sizes = {1.0};
    c.curriculum.iterations = 2;
    c.curriculum.dataset_size = 5000;
    c.curriculum.games_per_iteration = 250;
    c.train.batch_size = 64;
    c.train.learning_rate = 3e-3;
    c.eval.games = 50;
    c.eval.attackers = {"unbiased_learner", "biased_learner:k1", "biased_learner:k2", "unbiased_expert@10000"};
    c.eval.defenders = c.eval.attackers;
  } else {
    c.game.team_a_count = 3;
    c.game.team_b_count = 2;
    c.game.pos_bound = 3.0;
    c.curriculum.iterations = 5;
    c.curriculum.games_per_iteration = 4000;
  }
  return c;
}

namespace {

// Field listings shared by the reader and the writer.
template <class G, class V>
void visit_game(G& g, V& v) {
  v("team_a_count", g.team_a_count);
  v("team_b_count", g.team_b_count);
  v("pos_bound", g.pos_bound);
  v("vel_bound", g.vel_bound);
  v("acc_bound", g.acc_bound);
  v("tag_radius", g.tag_radius);
  v("collision_radius", g.collision_radius);
  v("sense_radius", g.sense_radius);
  v("goal_radius", g.goal_radius);
  v("goal_position", g.goal_position);
  v("timestep", g.timestep);
  v("horizon", g.horizon);
  v("dynamics_model", g.dynamics);
  v("obstacles", g.obstacles);
  v("dubins_gravity", g.dubins_gravity);
  v("dubins_rate_bound", g.dubins_rate_bound);
  v("dubins_bank_bound", g.dubins_bank_bound);
  v("dubins_speed_range", g.dubins_speed_range);
}

template <class S, class V>
void visit_search(S& s, V& v) {
  v("expert_budget", s.expert_budget);
  v("learner_budget", s.learner_budget);
  v("c_p", s.c_p);
  v("c_pw", s.c_pw);
  v("alpha_pw", s.alpha_pw);
  v("beta_policy", s.beta_policy);
  v("beta_value", s.beta_value);
  v("rollout_cap", s.rollout_cap);
}

template <class C, class V>
void visit_curriculum(C& c, V& v) {
  v("team_size_range", c.team_size_range);
  v("arena_sizes", c.arena_sizes);
  v("games_per_iteration", c.games_per_iteration);
  v("iterations", c.iterations);
  v("dataset_size", c.dataset_size);
  v("value_samples_per_game", c.value_samples_per_game);
  v("opponent_pool", c.opponent_pool);
}

template <class T, class V>
void visit_train(T& t, V& v) {
  v("epochs", t.epochs);
  v("batch_size", t.batch_size);
  v("learning_rate", t.learning_rate);
  v("momentum", t.momentum);
  v("warm_start", t.warm_start);
}

template <class E, class V>
void visit_eval(E& e, V& v) {
  v("games", e.games);
  v("attackers", e.attackers);
  v("defenders", e.defenders);
}

template <class P, class V>
void visit_paths(P& p, V& v) {
  v("out_dir", p.out_dir);
  v("checkpoint_dir", p.checkpoint_dir);
}

[[noreturn]] void type_error(const std::string& path, const char* expected) {
  throw ConfigError(path, std::string("expected ") + expected);
}

void read(const json& j, int& out, const std::string& path) {
  if (!j.is_number_integer()) type_error(path, "an integer");
  const auto v = j.get<long long>();
  if (v < -2147483647LL || v > 2147483647LL) throw ConfigError(path, "integer out of range");
  out = static_cast<int>(v);
}

void read(const json& j, double& out, const std::string& path) {
  if (!j.is_number()) type_error(path, "a number");
  out = j.get<double>();
}

void read(const json& j, bool& out, const std::string& path) {
  if (!j.is_boolean()) type_error(path, "true or false");
  out = j.get<bool>();
}

void read(const json& j, std::string& out, const std::string& path) {
  if (!j.is_string()) type_error(path, "a string");
  out = j.get<std::string>();
}

void read(const json& j, DynamicsModel& out, const std::string& path) {
  std::string s;
  read(j, s, path);
  try {
    out = dynamics_from_string(s);
  } catch (const ConfigError&) {
    throw ConfigError(path, "unknown dynamics model '" + s + "' (DoubleIntegrator2D, Dubins3D)");
  }
}

template <class T, std::size_t N>
void read(const json& j, std::array<T, N>& out, const std::string& path) {
  if (!j.is_array() || j.size() != N) throw ConfigError(path, "expected an array of " + std::to_string(N));
  for (std::size_t k = 0; k < N; ++k) read(j[k], out[k], path + "[" + std::to_string(k) + "]");
}

void read(const json& j, Obstacle& out, const std::string& path);

template <class T>
void read(const json& j, std::vector<T>& out, const std::string& path) {
  if (!j.is_array()) type_error(path, "an array");
  out.assign(j.size(), T{});
  for (std::size_t k = 0; k < j.size(); ++k) read(j[k], out[k], path + "[" + std::to_string(k) + "]");
}

void read(const json& j, Obstacle& out, const std::string& path) {
  if (!j.is_object()) type_error(path, "an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "center") read(it.value(), out.center, path + ".center");
    else if (it.key() == "radius") read(it.value(), out.radius, path + ".radius");
    else throw ConfigError(path + "." + it.key(), "unknown key");
  }
}

json write(int v) { return v; }
json write(double v) { return v; }
json write(bool v) { return v; }
json write(const std::string& v) { return v; }
json write(DynamicsModel m) { return to_string(m); }
json write(const Obstacle& o) { return {{"center", o.center}, {"radius", o.radius}}; }
template <class T, std::size_t N>
json write(const std::array<T, N>& a) {
  json out = json::array();
  for (const T& x : a) out.push_back(write(x));
  return out;
}
template <class T>
json write(const std::vector<T>& v) {
  json out = json::array();
  for (const T& x : v) out.push_back(write(x));
  return out;
}

class Reader {
 public:
  Reader(const json& obj, std::string section) : obj_(obj), section_(std::move(section)) {
    if (!obj_.is_object()) type_error(section_, "an object");
  }

  template <class T>
  void operator()(const char* key, T& field) {
    known_.insert(key);
    if (auto it = obj_.find(key); it != obj_.end()) read(*it, field, section_ + "." + key);
  }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!known_.count(it.key())) throw ConfigError(section_ + "." + it.key(), "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string section_;
  std::set<std::string> known_;
};

struct Writer {
  json& obj;

  template <class T>
  void operator()(const char* key, const T& field) {
    obj[key] = write(field);
  }
};

template <class T, class Visit>
void read_section(const json& doc, const char* name, T& target, Visit visit) {
  auto it = doc.find(name);
  if (it == doc.end()) return;
  Reader r(*it, name);
  visit(target, r);
  r.reject_unknown();
}

template <class T, class Visit>
json write_section(const T& source, Visit visit) {
  json out = json::object();
  Writer w{out};
  visit(source, w);
  return out;
}

}  // namespace

void RunConfig::validate() const {
  game.validate();
  search.validate();
  curriculum.validate();
  train.validate();
  if (eval.games < 1) throw ConfigError("eval.games", "must be >= 1");
  if (eval.attackers.empty()) throw ConfigError("eval.attackers", "must not be empty");
  if (eval.defenders.empty()) throw ConfigError("eval.defenders", "must not be empty");
  for (const auto* side : {&eval.attackers, &eval.defenders}) {
    const std::string name = side == &eval.attackers ? "eval.attackers" : "eval.defenders";
    for (std::size_t k = 0; k < side->size(); ++k) {
      try {
        arena::parse_variant((*side)[k]);
      } catch (const ConfigError& e) {
        throw ConfigError(name + "[" + std::to_string(k) + "]", e.what());
      }
    }
  }
  if (paths.out_dir.empty()) throw ConfigError("paths.out_dir", "must not be empty");
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("(root)", "expected a JSON object");
  static const std::set<std::string> sections{"profile", "game", "search", "curriculum", "train", "eval", "paths"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!sections.count(it.key())) throw ConfigError(it.key(), "unknown key");
  }
  Profile profile = Profile::PaperDefaults;
  if (auto it = doc.find("profile"); it != doc.end()) {
    if (!it->is_string()) type_error("profile", "a string");
    profile = profile_from_string(it->get<std::string>());
  }
  RunConfig cfg = preset(profile);
  read_section(doc, "game", cfg.game, [](auto& t, auto& v) { visit_game(t, v); });
  read_section(doc, "search", cfg.search, [](auto& t, auto& v) { visit_search(t, v); });
  read_section(doc, "curriculum", cfg.curriculum, [](auto& t, auto& v) { visit_curriculum(t, v); });
  read_section(doc, "train", cfg.train, [](auto& t, auto& v) { visit_train(t, v); });
  read_section(doc, "eval", cfg.eval, [](auto& t, auto& v) { visit_eval(t, v); });
  read_section(doc, "paths", cfg.paths, [](auto& t, auto& v) { visit_paths(t, v); });
  cfg.validate();
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("(root)", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

RunConfig load_config(const std::string& path) { return parse_config_text(io::read_text(path)); }

json to_json(const RunConfig& cfg) {
  return {{"profile", to_string(cfg.profile)},
          {"game", write_section(cfg.game, [](auto& t, auto& v) { visit_game(t, v); })},
          {"search", write_section(cfg.search, [](auto& t, auto& v) { visit_search(t, v); })},
          {"curriculum", write_section(cfg.curriculum, [](auto& t, auto& v) { visit_curriculum(t, v); })},
          {"train", write_section(cfg.train, [](auto& t, auto& v) { visit_train(t, v); })},
          {"eval", write_section(cfg.eval, [](auto& t, auto& v) { visit_eval(t, v); })},
          {"paths", write_section(cfg.paths, [](auto& t, auto& v) { visit_paths(t, v); })}};
}

std::string config_hash(const RunConfig& cfg) { return io::hex64(io::fnv1a64(to_json(cfg).dump())); }

improve::MetaLearnConfig meta_learn_config(const RunConfig& cfg) {
  return {cfg.game, cfg.search, cfg.curriculum, cfg.train, config_hash(cfg)};
}

}  // namespace nte::config
