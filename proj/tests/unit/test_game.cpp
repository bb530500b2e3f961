#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nte/error.hpp"
#include "nte/game.hpp"
#include "oracles.hpp"

using namespace nte;

namespace {

RobotState robot(Team t, double px, double py, double vx = 0.0, double vy = 0.0) {
  RobotState r;
  r.team = t;
  r.x = {px, py, vx, vy, 0, 0, 0};
  return r;
}

RobotState plane(double x, double y, double z, double psi, double gamma, double phi, double v) {
  RobotState r;
  r.x = {x, y, z, psi, gamma, phi, v};
  return r;
}

GameSpec dubins_spec() {
  GameSpec s;
  s.dynamics = DynamicsModel::Dubins3D;
  s.pos_bound = 5.0;
  return s;
}

JointAction zero_action(std::size_t n) { return JointAction(n, ActionVec{}); }

}  // namespace

TEST_CASE("double integrator step matches worked examples") {
  const double a[2] = {0.0, 2.0};
  const RobotState n = step_double_integrator(robot(Team::A, 0, 0, 1, 0), a, 0.1);
  CHECK(n.x[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(n.x[1] == 0.0);
  CHECK(n.x[2] == 1.0);
  CHECK(n.x[3] == doctest::Approx(0.2).epsilon(1e-15));

  const double zero[2] = {0.0, 0.0};
  for (double dt : {0.01, 0.1, 1.0}) {
    const RobotState still = robot(Team::A, 1, 1);
    CHECK(step_double_integrator(still, zero, dt) == still);
  }
}

TEST_CASE("double integrator step matches an independent Euler oracle") {
  Rng rng(11);
  for (int n = 0; n < 100; ++n) {
    const RobotState s = robot(Team::A, rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const double a[2] = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double dt = rng.uniform(0.001, 0.5);
    const RobotState got = step_double_integrator(s, a, dt);
    const oracle::Di want = oracle::double_integrator({s.x[0], s.x[1], s.x[2], s.x[3]}, a[0], a[1], dt);
    CHECK(std::abs(got.x[0] - want.px) <= 1e-12);
    CHECK(std::abs(got.x[1] - want.py) <= 1e-12);
    CHECK(std::abs(got.x[2] - want.vx) <= 1e-12);
    CHECK(std::abs(got.x[3] - want.vy) <= 1e-12);
  }
}

TEST_CASE("double integrator rejects a wrong action dimension") {
  const double a[3] = {0, 0, 0};
  CHECK_THROWS_AS(step_double_integrator(robot(Team::A, 0, 0), a, 0.1), ContractViolation);
}

TEST_CASE("Dubins step: level flight and pure dive") {
  const GameSpec spec = dubins_spec();
  const double zero[3] = {0, 0, 0};
  const RobotState level = step_dubins3d(plane(0, 0, 0, 0, 0, 0, 1), zero, 0.1, spec);
  CHECK(std::abs(level.x[0]) <= 1e-15);
  CHECK(level.x[1] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(level.x[2] == 0.0);
  CHECK(level.x[3] == 0.0);
  CHECK(level.x[4] == 0.0);
  CHECK(level.x[5] == 0.0);

  const RobotState dive = step_dubins3d(plane(0, 0, 0, 0, std::numbers::pi / 2, 0, 1), zero, 0.1, spec);
  CHECK(dive.x[2] == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(std::abs(dive.x[0]) <= 1e-15);
  CHECK(std::abs(dive.x[1]) <= 1e-15);
}

TEST_CASE("Dubins step matches an independent Euler oracle, clamps included") {
  const GameSpec spec = dubins_spec();
  Rng rng(12);
  for (int n = 0; n < 100; ++n) {
    const oracle::Plane p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3, 3),
                          rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 2.0)};
    const double a[3] = {rng.uniform(-0.7, 0.7), rng.uniform(-5, 5), rng.uniform(-20, 20)};
    const double dt = rng.uniform(0.01, 0.3);
    const RobotState got = step_dubins3d(plane(p.x, p.y, p.z, p.psi, p.gamma, p.phi, p.v), a, dt, spec);
    const oracle::Plane w = oracle::dubins(p, a[0], a[1], a[2], dt, spec.dubins_gravity, spec.dubins_bank_bound,
                                           spec.dubins_speed_range[0], spec.dubins_speed_range[1]);
    const double want[7] = {w.x, w.y, w.z, w.psi, w.gamma, w.phi, w.v};
    for (int k = 0; k < 7; ++k) CHECK(std::abs(got.x[k] - want[k]) <= 1e-12);
  }
}

TEST_CASE("Dubins step rejects non-positive speed") {
  const double zero[3] = {0, 0, 0};
  CHECK_THROWS_AS(step_dubins3d(plane(0, 0, 0, 0, 0, 0, 0), zero, 0.1, dubins_spec()), ContractViolation);
}

TEST_CASE("admissibility verdicts and their precedence") {
  GameSpec spec;
  spec.pos_bound = 2.0;
  SUBCASE("attacker on the goal with a defender 1 m away reaches") {
    JointState s{{robot(Team::A, 0, 0), robot(Team::B, 1, 0)}};
    CHECK(check_admissible(0, s, spec) == Verdict::Reached);
  }
  SUBCASE("attacker 0.15 m from a defender is tagged") {
    JointState s{{robot(Team::A, -1, 0), robot(Team::B, -0.85, 0)}};
    CHECK(check_admissible(0, s, spec) == Verdict::Tagged);
  }
  SUBCASE("leaving the arena violates") {
    JointState s{{robot(Team::A, 2.01, 0)}};
    CHECK(check_admissible(0, s, spec) == Verdict::Violated);
  }
  SUBCASE("overspeed violates") {
    JointState s{{robot(Team::B, 1, 1, 0.8, 0.8)}};
    CHECK(check_admissible(0, s, spec) == Verdict::Violated);
  }
  SUBCASE("reached beats tagged") {
    JointState s{{robot(Team::A, 0.1, 0), robot(Team::B, 0.2, 0)}};
    CHECK(check_admissible(0, s, spec) == Verdict::Reached);
  }
  SUBCASE("tagged beats violated") {
    JointState s{{robot(Team::A, 1.95, 0, 2, 0), robot(Team::B, 1.8, 0)}};
    CHECK(check_admissible(0, s, spec) == Verdict::Tagged);
  }
  SUBCASE("teammates closer than the collision radius both violate") {
    JointState s{{robot(Team::A, -1, 0), robot(Team::A, -1.05, 0)}};
    CHECK(check_admissible(0, s, spec) == Verdict::Violated);
    CHECK(check_admissible(1, s, spec) == Verdict::Violated);
  }
  SUBCASE("inactive robots neither tag nor collide") {
    JointState s{{robot(Team::A, -1, 0), robot(Team::B, -0.95, 0)}};
    s.robots[1].active = false;
    CHECK(check_admissible(0, s, spec) == Verdict::Ok);
  }
  SUBCASE("entering an obstacle violates") {
    spec.obstacles.push_back({{1.0, 1.0, 0.0}, 0.3});
    JointState s{{robot(Team::B, 1.1, 1.1)}};
    CHECK(check_admissible(0, s, spec) == Verdict::Violated);
  }
}

TEST_CASE("game step: vacuous termination when nobody is active") {
  GameSpec spec;
  JointState s{{robot(Team::A, -0.5, 0), robot(Team::B, 0.5, 0)}};
  for (auto& r : s.robots) r.active = false;
  const StepResult r = game_step(s, zero_action(2), spec);
  CHECK(r.events.terminal);
  CHECK(r.state.robots == s.robots);
  CHECK(r.state.step_index == 1);
}

TEST_CASE("game step: lone attacker one step from the goal scores") {
  GameSpec spec;
  spec.team_b_count = 0;
  JointState s{{robot(Team::A, -0.25, 0, 1, 0)}};
  JointAction a = zero_action(1);
  a[0] = {2.0, 0.0, 0.0};
  const StepResult r = game_step(s, a, spec);
  CHECK(r.events.reached == std::vector<int>{0});
  CHECK(r.events.terminal);
  CHECK(r.state.reached_count == 1);
  CHECK(terminal_value(r.state, spec) == 1);
}

TEST_CASE("game step: inadmissible action marks the robot violated and it does not move") {
  GameSpec spec;
  JointState s{{robot(Team::A, -0.5, 0), robot(Team::B, 0.5, 0)}};
  JointAction a = zero_action(2);
  a[0] = {5.0, 0.0, 0.0};
  const StepResult r = game_step(s, a, spec);
  CHECK(r.events.violated == std::vector<int>{0});
  CHECK_FALSE(r.state.robots[0].active);
  CHECK(r.state.robots[0].x == s.robots[0].x);
}

TEST_CASE("game step: simultaneous judgement on the post-step state") {
  GameSpec spec;
  spec.pos_bound = 2.0;
  // both move into tag range in the same step
  JointState s{{robot(Team::A, -0.6, 0, 0.5, 0), robot(Team::B, -0.35, 0, -0.5, 0)}};
  const StepResult r = game_step(s, zero_action(2), spec);
  CHECK(r.events.tagged == std::vector<int>{0});
  CHECK_FALSE(r.state.robots[0].active);
  CHECK(r.state.robots[1].active);
  CHECK(r.events.terminal);
  CHECK(terminal_value(r.state, spec) == 0);
}

TEST_CASE("game step rejects a wrong action count") {
  GameSpec spec;
  JointState s{{robot(Team::A, -0.5, 0), robot(Team::B, 0.5, 0)}};
  CHECK_THROWS_AS(game_step(s, zero_action(1), spec), ContractViolation);
}

TEST_CASE("random rollouts: determinism, inactive freeze, monotone reached count") {
  for (int dyn = 0; dyn < 2; ++dyn) {
    GameSpec base;
    base.team_a_count = 2;
    base.team_b_count = 2;
    base.pos_bound = 2.0;
    if (dyn == 1) {
      base.dynamics = DynamicsModel::Dubins3D;
      base.pos_bound = 3.0;
    }
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      InitialCondition ic = sample_initial_condition(base, seed);
      Rng rng(seed + 100);
      JointState s = ic.state;
      int recount = 0;
      while (!is_terminal(s, ic.spec)) {
        JointAction a(s.robots.size());
        for (auto& u : a) u = sample_uniform_action(ic.spec, rng);
        const StepResult r = game_step(s, a, ic.spec);
        REQUIRE(game_step(s, a, ic.spec).state == r.state);
        for (std::size_t i = 0; i < s.robots.size(); ++i) {
          if (!s.robots[i].active) CHECK(r.state.robots[i] == s.robots[i]);
        }
        CHECK(r.state.reached_count >= s.reached_count);
        recount += static_cast<int>(r.events.reached.size());
        if (dyn == 1) {
          for (const RobotState& x : r.state.robots) {
            CHECK(x.x[6] >= 0.5);
            CHECK(x.x[6] <= 2.0);
            CHECK(std::abs(x.x[5]) <= ic.spec.dubins_bank_bound + 1e-15);
          }
        }
        s = r.state;
      }
      CHECK(terminal_value(s, ic.spec) == s.reached_count);
      CHECK(terminal_value(s, ic.spec) == recount);
    }
  }
}

TEST_CASE("horizon ends the game") {
  GameSpec spec;
  spec.horizon = 3;
  JointState s{{robot(Team::A, -0.8, 0), robot(Team::B, 0.8, 0)}};
  for (int t = 0; t < 3; ++t) {
    CHECK_FALSE(is_terminal(s, spec));
    advance(s, zero_action(2), spec);
  }
  CHECK(is_terminal(s, spec));
}

TEST_CASE("terminal value counts scorers and requires a terminal state") {
  GameSpec spec;
  spec.team_a_count = 3;
  JointState s{{robot(Team::A, 0, 0), robot(Team::A, 0, 0), robot(Team::A, -0.5, 0)}};
  for (auto& r : s.robots) r.active = false;
  s.reached_count = 2;
  CHECK(terminal_value(s, spec) == 2);
  CHECK(normalized_value(s) == doctest::Approx(2.0 / 3.0));
  s.reached_count = 0;
  CHECK(terminal_value(s, spec) == 0);
  s.robots[2].active = true;
  CHECK_THROWS_AS(terminal_value(s, spec), ContractViolation);
}

TEST_CASE("observation: goal offset, sensing radius, inactive observer") {
  GameSpec spec;
  spec.pos_bound = 5.0;
  spec.goal_position = {1.0, 0.0, 0.0};
  JointState s{{robot(Team::A, 0, 0), robot(Team::B, 1, 1), robot(Team::B, 3, 0)}};
  const Observation z = observe(0, s, spec);
  CHECK(z.goal_relative[0] == 1.0);
  CHECK(z.goal_relative[1] == 0.0);
  CHECK(z.goal_relative[2] == 0.0);
  CHECK(z.goal_relative[3] == 0.0);
  CHECK(z.neighbors_a.empty());
  REQUIRE(z.neighbors_b.size() == 1);  // the robot 3 m away is out of range
  CHECK(z.neighbors_b[0][0] == 1.0);
  CHECK(z.neighbors_b[0][1] == 1.0);

  s.robots[0].active = false;
  CHECK_THROWS_AS(observe(0, s, spec), ContractViolation);
}

TEST_CASE("observation: reordering robots keeps set membership") {
  GameSpec spec;
  spec.pos_bound = 3.0;
  JointState s{{robot(Team::A, 0, 0), robot(Team::A, 0.5, 0.5), robot(Team::B, 1, 0), robot(Team::B, -1, 0.3)}};
  JointState p = s;
  std::swap(p.robots[2], p.robots[3]);
  auto sorted = [](std::vector<StateVec> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const Observation a = observe(0, s, spec);
  const Observation b = observe(0, p, spec);
  CHECK(sorted(a.neighbors_b) == sorted(b.neighbors_b));
  CHECK(a.neighbors_b != b.neighbors_b);
}

TEST_CASE("reconstruction inverts the observation") {
  GameSpec spec;
  spec.pos_bound = 3.0;
  spec.goal_position = {0.7, -0.2, 0.0};
  JointState s{{robot(Team::A, -1, 0.25, 0.5, 0), robot(Team::A, 2.9, 2.9), robot(Team::B, 0.5, 0.5, 0, -0.25)}};
  s.reached_count = 1;
  s.step_index = 4;
  const Observation z = observe(0, s, spec);
  const Reconstruction rec = reconstruct_state(z, Team::A, spec, s.reached_count, s.step_index);
  CHECK(rec.state.robots.at(static_cast<std::size_t>(rec.observer)).x == s.robots[0].x);
  CHECK(rec.state.reached_count == 1);
  CHECK(rec.state.step_index == 4);
  int defenders = 0;
  for (const RobotState& r : rec.state.robots) {
    if (r.team == Team::B && r.active) {
      ++defenders;
      for (int k = 0; k < 4; ++k) CHECK(std::abs(r.x[k] - s.robots[2].x[k]) <= 1e-12);
    }
  }
  CHECK(defenders == 1);
  int active_attackers = 0;
  for (const RobotState& r : rec.state.robots) active_attackers += (r.team == Team::A && r.active) ? 1 : 0;
  CHECK(active_attackers == 1);  // the far teammate is unseen
}

TEST_CASE("reconstruction with nothing in range holds only the observer") {
  GameSpec spec;
  spec.pos_bound = 5.0;
  JointState s{{robot(Team::A, -4, 0), robot(Team::B, 4, 0)}};
  const Reconstruction rec = reconstruct_state(observe(0, s, spec), Team::A, spec, 0, 0);
  int active = 0;
  for (const RobotState& r : rec.state.robots) active += r.active ? 1 : 0;
  CHECK(active == 1);
}

TEST_CASE("reconstruction round trip over random states") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GameSpec base;
    base.team_a_count = 1 + static_cast<int>(seed % 3);
    base.team_b_count = 1 + static_cast<int>((seed / 3) % 3);
    base.pos_bound = 3.0;
    base.sense_radius = 2.0;
    if (seed % 4 == 0) base.dynamics = DynamicsModel::Dubins3D;
    const InitialCondition ic = sample_initial_condition(base, seed);
    const int sd = ic.spec.state_dim();
    for (std::size_t i = 0; i < ic.state.robots.size(); ++i) {
      const RobotState& me = ic.state.robots[i];
      const Observation z = observe(static_cast<int>(i), ic.state, ic.spec);
      const Reconstruction rec = reconstruct_state(z, me.team, ic.spec, 0, 0);
      std::size_t visible = 0;
      for (const RobotState& t : ic.state.robots) {
        double d2 = 0;
        for (int k = 0; k < ic.spec.pos_dim(); ++k) d2 += (t.x[k] - me.x[k]) * (t.x[k] - me.x[k]);
        visible += d2 <= ic.spec.sense_radius * ic.spec.sense_radius ? 1 : 0;
      }
      std::size_t matched = 0;
      for (const RobotState& r : rec.state.robots) {
        if (!r.active) continue;
        for (const RobotState& t : ic.state.robots) {
          double err = 0;
          for (int k = 0; k < sd; ++k) err = std::max(err, std::abs(t.x[k] - r.x[k]));
          if (t.team == r.team && err <= 1e-12) {
            ++matched;
            break;
          }
        }
      }
      CHECK(matched == visible);
    }
  }
}

TEST_CASE("value observation is goal relative and carries the reached count") {
  GameSpec spec;
  spec.goal_position = {0.3, 0.1, 0.0};
  JointState s{{robot(Team::A, 0.3, 0.1), robot(Team::A, -0.5, 0), robot(Team::B, 0.6, 0)}};
  s.robots[1].active = false;
  s.reached_count = 1;
  const ValueObservation y = value_observation(s, spec);
  REQUIRE(y.team_a.size() == 1);
  CHECK(y.team_a[0] == StateVec{});
  REQUIRE(y.team_b.size() == 1);
  CHECK(y.team_b[0][0] == doctest::Approx(0.3));
  CHECK(y.reached_count == 1);
}

TEST_CASE("action projection is radial and uniform samples are admissible") {
  GameSpec spec;
  const ActionVec p = project_action({3.0, 4.0, 0.0}, spec);
  CHECK(std::hypot(p[0], p[1]) == doctest::Approx(2.0));
  CHECK(p[0] / p[1] == doctest::Approx(0.75));
  const ActionVec inside{0.3, -0.4, 0.0};
  CHECK(project_action(inside, spec) == inside);

  Rng rng(5);
  const GameSpec d = dubins_spec();
  for (int n = 0; n < 1000; ++n) {
    CHECK(action_admissible(sample_uniform_action(spec, rng), spec));
    CHECK(action_admissible(sample_uniform_action(d, rng), d));
  }
}

TEST_CASE("initial conditions: deterministic, admissible, teams on opposite sides") {
  GameSpec base;
  base.team_a_count = 3;
  base.team_b_count = 2;
  base.pos_bound = 3.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const InitialCondition a = sample_initial_condition(base, seed);
    const InitialCondition b = sample_initial_condition(base, seed);
    CHECK(a.state == b.state);
    CHECK(a.spec == b.spec);
    double attacker_x = 0, defender_x = 0;
    for (std::size_t i = 0; i < a.state.robots.size(); ++i) {
      CHECK(check_admissible(static_cast<int>(i), a.state, a.spec) == Verdict::Ok);
      (a.state.robots[i].team == Team::A ? attacker_x : defender_x) += a.state.robots[i].x[0];
    }
    CHECK(attacker_x / 3 < defender_x / 2);
    // goal nearer the defenders
    double da = 0, db = 0;
    for (const RobotState& r : a.state.robots) {
      const double d = std::hypot(r.x[0] - a.spec.goal_position[0], r.x[1] - a.spec.goal_position[1]);
      (r.team == Team::A ? da : db) += d;
    }
    CHECK(db / 2 < da / 3);
  }
}

TEST_CASE("initial conditions: infeasible placement is a domain error") {
  GameSpec base;
  base.team_a_count = 5;
  base.team_b_count = 5;
  base.pos_bound = 0.3;
  CHECK_THROWS_AS(sample_initial_condition(base, 1), DomainError);
}

TEST_CASE("spec validation names the offending field") {
  GameSpec spec;
  spec.tag_radius = 0.0;
  try {
    spec.validate();
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "game.tag_radius");
  }
  GameSpec ok;
  CHECK_NOTHROW(ok.validate());
}
