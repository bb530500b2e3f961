#include "nte/game.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nte/error.hpp"

namespace nte {

namespace {

double dist_sq(const StateVec& a, const StateVec& b, int pos_dim) {
  double d = 0.0;
  for (int k = 0; k < pos_dim; ++k) {
    const double e = a[k] - b[k];
    d += e * e;
  }
  return d;
}

void require_positive(double v, const char* field) {
  if (!(v > 0.0)) throw ConfigError(std::string("game.") + field, "must be > 0");
}

}  // namespace

std::string to_string(Team t) { return t == Team::A ? "A" : "B"; }

std::string to_string(DynamicsModel m) {
  return m == DynamicsModel::Dubins3D ? "Dubins3D" : "DoubleIntegrator2D";
}

DynamicsModel dynamics_from_string(const std::string& name) {
  if (name == "DoubleIntegrator2D") return DynamicsModel::DoubleIntegrator2D;
  if (name == "Dubins3D") return DynamicsModel::Dubins3D;
  throw ConfigError("game.dynamics_model", "unknown dynamics model '" + name + "'");
}

void GameSpec::validate() const {
  if (team_a_count < 0) throw ConfigError("game.team_a_count", "must be >= 0");
  if (team_b_count < 0) throw ConfigError("game.team_b_count", "must be >= 0");
  require_positive(pos_bound, "pos_bound");
  require_positive(vel_bound, "vel_bound");
  require_positive(acc_bound, "acc_bound");
  require_positive(tag_radius, "tag_radius");
  require_positive(collision_radius, "collision_radius");
  require_positive(sense_radius, "sense_radius");
  require_positive(goal_radius, "goal_radius");
  require_positive(timestep, "timestep");
  if (!(collision_radius < tag_radius))
    throw ConfigError("game.collision_radius", "must be smaller than tag_radius");
  if (horizon < 1) throw ConfigError("game.horizon", "must be >= 1");
  for (std::size_t k = 0; k < obstacles.size(); ++k) {
    if (!(obstacles[k].radius > 0.0))
      throw ConfigError("game.obstacles[" + std::to_string(k) + "].radius", "must be > 0");
  }
  if (dynamics == DynamicsModel::Dubins3D) {
    require_positive(dubins_gravity, "dubins_gravity");
    require_positive(dubins_rate_bound, "dubins_rate_bound");
    require_positive(dubins_bank_bound, "dubins_bank_bound");
    if (!(dubins_speed_range[0] > 0.0))
      throw ConfigError("game.dubins_speed_range", "v_min must be > 0");
    if (!(dubins_speed_range[1] >= dubins_speed_range[0]))
      throw ConfigError("game.dubins_speed_range", "v_max must be >= v_min");
  }
}

StateVec GameSpec::goal_state() const {
  StateVec g{};
  for (int k = 0; k < pos_dim(); ++k) g[k] = goal_position[k];
  return g;
}

int JointState::team_count(Team t) const {
  return static_cast<int>(
      std::count_if(robots.begin(), robots.end(), [t](const RobotState& r) { return r.team == t; }));
}

RobotState step_double_integrator(const RobotState& s, std::span<const double> accel, double dt) {
  NTE_REQUIRE(accel.size() == 2, "double integrator expects a 2-vector action");
  RobotState out = s;
  out.x[0] = s.x[0] + s.x[2] * dt;
  out.x[1] = s.x[1] + s.x[3] * dt;
  out.x[2] = s.x[2] + accel[0] * dt;
  out.x[3] = s.x[3] + accel[1] * dt;
  return out;
}

RobotState step_dubins3d(const RobotState& s, std::span<const double> rates, double dt,
                         const GameSpec& spec) {
  NTE_REQUIRE(rates.size() == 3, "Dubins3D expects a 3-vector action");
  const double psi = s.x[3], gamma = s.x[4], phi = s.x[5], v = s.x[6];
  NTE_REQUIRE(v > 0.0, "Dubins3D speed must be positive");
  RobotState out = s;
  out.x[0] = s.x[0] + v * std::cos(gamma) * std::sin(psi) * dt;
  out.x[1] = s.x[1] + v * std::cos(gamma) * std::cos(psi) * dt;
  out.x[2] = s.x[2] - v * std::sin(gamma) * dt;
  out.x[3] = psi + (spec.dubins_gravity / v) * std::tan(phi) * dt;
  out.x[4] = gamma + rates[0] * dt;
  out.x[5] = std::clamp(phi + rates[1] * dt, -spec.dubins_bank_bound, spec.dubins_bank_bound);
  out.x[6] = std::clamp(v + rates[2] * dt, spec.dubins_speed_range[0], spec.dubins_speed_range[1]);
  return out;
}

Verdict check_admissible(int i, const JointState& s, const GameSpec& spec) {
  const RobotState& me = s.robots.at(static_cast<std::size_t>(i));
  const int pd = spec.pos_dim();
  const auto& p = me.x;

  if (me.team == Team::A) {
    const StateVec g = spec.goal_state();
    if (dist_sq(p, g, pd) <= spec.goal_radius * spec.goal_radius) return Verdict::Reached;
    const double rt2 = spec.tag_radius * spec.tag_radius;
    for (std::size_t j = 0; j < s.robots.size(); ++j) {
      const RobotState& o = s.robots[j];
      if (o.active && o.team == Team::B && dist_sq(p, o.x, pd) <= rt2) return Verdict::Tagged;
    }
  }

  for (int k = 0; k < pd; ++k) {
    if (std::abs(p[k]) > spec.pos_bound) return Verdict::Violated;
  }
  if (spec.dynamics == DynamicsModel::DoubleIntegrator2D) {
    const double v2 = p[2] * p[2] + p[3] * p[3];
    if (v2 > spec.vel_bound * spec.vel_bound) return Verdict::Violated;
  }
  const double rp2 = spec.collision_radius * spec.collision_radius;
  for (std::size_t j = 0; j < s.robots.size(); ++j) {
    if (static_cast<int>(j) == i || !s.robots[j].active) continue;
    if (dist_sq(p, s.robots[j].x, pd) <= rp2) return Verdict::Violated;
  }
  for (const Obstacle& ob : spec.obstacles) {
    double d = 0.0;
    for (int k = 0; k < pd; ++k) d += (p[k] - ob.center[k]) * (p[k] - ob.center[k]);
    if (d <= ob.radius * ob.radius) return Verdict::Violated;
  }
  return Verdict::Ok;
}

bool action_admissible(const ActionVec& a, const GameSpec& spec) {
  constexpr double tol = 1e-9;
  if (spec.dynamics == DynamicsModel::DoubleIntegrator2D) {
    return std::hypot(a[0], a[1]) <= spec.acc_bound * (1.0 + tol);
  }
  return std::abs(a[0]) <= spec.dubins_rate_bound * (1.0 + tol) &&
         std::abs(a[1]) <= spec.dubins_rate_bound * (1.0 + tol) &&
         std::abs(a[2]) <= spec.acc_bound * (1.0 + tol);
}

ActionVec project_action(const ActionVec& a, const GameSpec& spec) {
  ActionVec out = a;
  if (spec.dynamics == DynamicsModel::DoubleIntegrator2D) {
    const double n = std::hypot(a[0], a[1]);
    if (n > spec.acc_bound) {
      out[0] = a[0] * spec.acc_bound / n;
      out[1] = a[1] * spec.acc_bound / n;
    }
    out[2] = 0.0;
    return out;
  }
  out[0] = std::clamp(a[0], -spec.dubins_rate_bound, spec.dubins_rate_bound);
  out[1] = std::clamp(a[1], -spec.dubins_rate_bound, spec.dubins_rate_bound);
  out[2] = std::clamp(a[2], -spec.acc_bound, spec.acc_bound);
  return out;
}

ActionVec sample_uniform_action(const GameSpec& spec, Rng& rng) {
  ActionVec a{};
  if (spec.dynamics == DynamicsModel::DoubleIntegrator2D) {
    // uniform over the disc of radius acc_bound
    const double r = spec.acc_bound * std::sqrt(rng.uniform());
    const double th = 2.0 * std::numbers::pi * rng.uniform();
    a[0] = r * std::cos(th);
    a[1] = r * std::sin(th);
    return a;
  }
  a[0] = rng.uniform(-spec.dubins_rate_bound, spec.dubins_rate_bound);
  a[1] = rng.uniform(-spec.dubins_rate_bound, spec.dubins_rate_bound);
  a[2] = rng.uniform(-spec.acc_bound, spec.acc_bound);
  return a;
}

bool is_terminal(const JointState& s, const GameSpec& spec) {
  if (s.step_index >= spec.horizon) return true;
  return std::none_of(s.robots.begin(), s.robots.end(),
                      [](const RobotState& r) { return r.active && r.team == Team::A; });
}

bool advance(JointState& s, const JointAction& a, const GameSpec& spec, StepEvents* events) {
  if (a.size() != s.robots.size()) {
    throw ContractViolation("joint action has " + std::to_string(a.size()) + " entries, expected " +
                            std::to_string(s.robots.size()));
  }
  const std::size_t n = s.robots.size();
  const int ad = spec.action_dim();
  thread_local std::vector<Verdict> verdicts;
  verdicts.assign(n, Verdict::Ok);

  // A robot whose action leaves the admissible action set is deactivated
  // without moving.
  for (std::size_t i = 0; i < n; ++i) {
    RobotState& r = s.robots[i];
    if (!r.active) continue;
    if (!action_admissible(a[i], spec)) {
      verdicts[i] = Verdict::Violated;
      continue;
    }
    const std::span<const double> u(a[i].data(), static_cast<std::size_t>(ad));
    r = spec.dynamics == DynamicsModel::DoubleIntegrator2D ? step_double_integrator(r, u, spec.timestep)
                                                           : step_dubins3d(r, u, spec.timestep, spec);
  }

  // Everyone is judged on the same post-step snapshot before flags change.
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.robots[i].active || verdicts[i] != Verdict::Ok) continue;
    verdicts[i] = check_admissible(static_cast<int>(i), s, spec);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Verdict v = verdicts[i];
    if (!s.robots[i].active || v == Verdict::Ok) continue;
    s.robots[i].active = false;
    if (v == Verdict::Reached) ++s.reached_count;
    if (events) {
      const int idx = static_cast<int>(i);
      if (v == Verdict::Reached) events->reached.push_back(idx);
      else if (v == Verdict::Tagged) events->tagged.push_back(idx);
      else events->violated.push_back(idx);
    }
  }
  ++s.step_index;
  const bool term = is_terminal(s, spec);
  if (events) events->terminal = term;
  return term;
}

StepResult game_step(const JointState& s, const JointAction& a, const GameSpec& spec) {
  StepResult out{s, {}};
  advance(out.state, a, spec, &out.events);
  return out;
}

Observation observe(int i, const JointState& s, const GameSpec& spec) {
  NTE_REQUIRE(i >= 0 && static_cast<std::size_t>(i) < s.robots.size(), "observer index out of range");
  const RobotState& me = s.robots[static_cast<std::size_t>(i)];
  NTE_REQUIRE(me.active, "inactive robots do not observe");
  const int sd = spec.state_dim();
  const int pd = spec.pos_dim();
  const double rs2 = spec.sense_radius * spec.sense_radius;

  Observation z;
  const StateVec g = spec.goal_state();
  for (int k = 0; k < sd; ++k) z.goal_relative[k] = g[k] - me.x[k];
  for (std::size_t j = 0; j < s.robots.size(); ++j) {
    const RobotState& o = s.robots[j];
    if (static_cast<int>(j) == i || !o.active) continue;
    if (dist_sq(o.x, me.x, pd) > rs2) continue;
    StateVec rel{};
    for (int k = 0; k < sd; ++k) rel[k] = o.x[k] - me.x[k];
    (o.team == Team::A ? z.neighbors_a : z.neighbors_b).push_back(rel);
  }
  return z;
}

ValueObservation value_observation(const JointState& s, const GameSpec& spec) {
  const int sd = spec.state_dim();
  const StateVec g = spec.goal_state();
  ValueObservation y;
  y.reached_count = s.reached_count;
  for (const RobotState& r : s.robots) {
    if (!r.active) continue;
    StateVec rel{};
    for (int k = 0; k < sd; ++k) rel[k] = r.x[k] - g[k];
    (r.team == Team::A ? y.team_a : y.team_b).push_back(rel);
  }
  return y;
}

int terminal_value(const JointState& s, const GameSpec& spec) {
  NTE_REQUIRE(is_terminal(s, spec), "terminal_value called on a non-terminal state");
  return s.reached_count;
}

double normalized_value(const JointState& s) {
  const int na = s.team_count(Team::A);
  return na > 0 ? static_cast<double>(s.reached_count) / na : 0.0;
}

Reconstruction reconstruct_state(const Observation& z, Team observer_team, const GameSpec& spec,
                                 int reached_count, int step_index) {
  const int sd = spec.state_dim();
  const StateVec g = spec.goal_state();
  RobotState self;
  self.team = observer_team;
  for (int k = 0; k < sd; ++k) self.x[k] = g[k] - z.goal_relative[k];

  auto absolute = [&](const StateVec& rel, Team t) {
    RobotState r;
    r.team = t;
    for (int k = 0; k < sd; ++k) r.x[k] = self.x[k] + rel[k];
    return r;
  };

  Reconstruction out;
  out.spec = spec;
  JointState& st = out.state;
  st.step_index = step_index;
  st.reached_count = reached_count;
  if (observer_team == Team::A) {
    out.observer = 0;
    st.robots.push_back(self);
  }
  for (const StateVec& rel : z.neighbors_a) st.robots.push_back(absolute(rel, Team::A));
  for (int k = 0; k < reached_count; ++k) {
    RobotState placeholder;
    placeholder.team = Team::A;
    placeholder.active = false;
    placeholder.x = g;
    st.robots.push_back(placeholder);
  }
  if (observer_team == Team::B) {
    out.observer = static_cast<int>(st.robots.size());
    st.robots.push_back(self);
  }
  for (const StateVec& rel : z.neighbors_b) st.robots.push_back(absolute(rel, Team::B));
  out.spec.team_a_count = st.team_count(Team::A);
  out.spec.team_b_count = st.team_count(Team::B);
  return out;
}

InitialCondition sample_initial_condition(const GameSpec& base, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "game_init"));
  InitialCondition ic{base, {}};
  GameSpec& spec = ic.spec;
  const double pb = spec.pos_bound;
  const bool dubins = spec.dynamics == DynamicsModel::Dubins3D;
  const int pd = spec.pos_dim();

  spec.goal_position = {rng.uniform(0.4 * pb, 0.7 * pb), rng.uniform(-0.4 * pb, 0.4 * pb), 0.0};

  auto place = [&](Team t) {
    RobotState r;
    r.team = t;
    const double lo = t == Team::A ? -0.9 * pb : 0.2 * pb;
    const double hi = t == Team::A ? -0.5 * pb : 0.9 * pb;
    r.x[0] = rng.uniform(lo, hi);
    r.x[1] = rng.uniform(-0.9 * pb, 0.9 * pb);
    if (dubins) {
      r.x[2] = rng.uniform(-0.5 * pb, 0.5 * pb);
      r.x[3] = t == Team::A ? std::numbers::pi / 2 : -std::numbers::pi / 2;
      r.x[6] = std::clamp(1.0, spec.dubins_speed_range[0], spec.dubins_speed_range[1]);
    }
    return r;
  };

  for (int attempt = 0; attempt < 1000; ++attempt) {
    JointState s;
    for (int i = 0; i < spec.team_a_count; ++i) s.robots.push_back(place(Team::A));
    for (int i = 0; i < spec.team_b_count; ++i) s.robots.push_back(place(Team::B));

    bool ok = true;
    for (std::size_t i = 0; i < s.robots.size() && ok; ++i) {
      if (check_admissible(static_cast<int>(i), s, spec) != Verdict::Ok) ok = false;
      // keep a margin so nobody is tagged or collides on the first step
      for (std::size_t j = i + 1; j < s.robots.size() && ok; ++j) {
        const bool rivals = s.robots[i].team != s.robots[j].team;
        const double margin = 2.0 * (rivals ? spec.tag_radius : spec.collision_radius);
        if (dist_sq(s.robots[i].x, s.robots[j].x, pd) <= margin * margin) ok = false;
      }
    }
    if (!ok) continue;
    ic.state = std::move(s);
    return ic;
  }
  throw DomainError("could not place " + std::to_string(spec.team_a_count) + "v" +
                    std::to_string(spec.team_b_count) + " robots in a " + std::to_string(pb) +
                    " m arena after 1000 attempts");
}

}  // namespace nte
