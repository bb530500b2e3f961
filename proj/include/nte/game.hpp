#pragma once

// Reach-Target-Avoid game: team A (attackers) scores by entering the goal
// region, team B (defenders) by tagging attackers first. Deterministic
// transitions, simultaneous moves, robots freeze once inactive.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nte/rng.hpp"

namespace nte {

inline constexpr int kMaxStateDim = 7;
inline constexpr int kMaxActionDim = 3;

using StateVec = std::array<double, kMaxStateDim>;
using ActionVec = std::array<double, kMaxActionDim>;

enum class Team : std::uint8_t { A, B };
enum class DynamicsModel : std::uint8_t { DoubleIntegrator2D, Dubins3D };

inline constexpr Team other(Team t) { return t == Team::A ? Team::B : Team::A; }

std::string to_string(Team t);
std::string to_string(DynamicsModel m);
DynamicsModel dynamics_from_string(const std::string& name);

struct Obstacle {
  std::array<double, 3> center{};
  double radius = 0.0;

  friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

struct GameSpec {
  int team_a_count = 1;
  int team_b_count = 1;
  double pos_bound = 1.0;   // half-width of the square/cube arena [m]
  double vel_bound = 1.0;   // [m/s]
  double acc_bound = 2.0;   // [m/s^2]
  double tag_radius = 0.2;
  double collision_radius = 0.1;
  double sense_radius = 2.0;
  double goal_radius = 0.2;
  std::array<double, 3> goal_position{};
  double timestep = 0.1;
  int horizon = 300;
  DynamicsModel dynamics = DynamicsModel::DoubleIntegrator2D;
  std::vector<Obstacle> obstacles;
  double dubins_gravity = 0.98;
  double dubins_rate_bound = 0.6283185307179586;   // 36 deg/s
  double dubins_bank_bound = 1.0471975511965976;   // 60 deg
  std::array<double, 2> dubins_speed_range{0.5, 2.0};

  // Throws ConfigError naming the offending field ("game.tag_radius").
  void validate() const;

  int state_dim() const { return dynamics == DynamicsModel::Dubins3D ? 7 : 4; }
  int action_dim() const { return dynamics == DynamicsModel::Dubins3D ? 3 : 2; }
  int pos_dim() const { return dynamics == DynamicsModel::Dubins3D ? 3 : 2; }

  // Goal embedded in state space: position followed by zeros.
  StateVec goal_state() const;

  friend bool operator==(const GameSpec&, const GameSpec&) = default;
};

struct RobotState {
  StateVec x{};
  bool active = true;
  Team team = Team::A;

  friend bool operator==(const RobotState&, const RobotState&) = default;
};

// Team-A robots come first, then team B.
struct JointState {
  std::vector<RobotState> robots;
  int step_index = 0;
  int reached_count = 0;

  int team_count(Team t) const;
  friend bool operator==(const JointState&, const JointState&) = default;
};

// One sub-action per robot, in robot order. Inactive robots' entries are
// ignored by game_step.
using JointAction = std::vector<ActionVec>;

struct Observation {
  StateVec goal_relative{};
  std::vector<StateVec> neighbors_a;
  std::vector<StateVec> neighbors_b;
};

// Inputs for the value network: active robots relative to the goal, plus the
// number of attackers that already scored.
struct ValueObservation {
  std::vector<StateVec> team_a;
  std::vector<StateVec> team_b;
  int reached_count = 0;
};

struct StepEvents {
  std::vector<int> tagged;
  std::vector<int> reached;
  std::vector<int> violated;
  bool terminal = false;
};

enum class Verdict : std::uint8_t { Ok, Reached, Tagged, Violated };

// Euler step of the double integrator. No clamping.
RobotState step_double_integrator(const RobotState& s, std::span<const double> accel, double dt);

// Euler step of the 3D Dubins airplane, action = [gamma_dot, phi_dot, v_dot].
// Speed is projected into the speed range and bank into +-bank bound afterwards.
RobotState step_dubins3d(const RobotState& s, std::span<const double> rates, double dt,
                         const GameSpec& spec);

// Post-step verdict for robot i, precedence reached > tagged > violated.
Verdict check_admissible(int i, const JointState& s, const GameSpec& spec);

bool action_admissible(const ActionVec& a, const GameSpec& spec);
ActionVec project_action(const ActionVec& a, const GameSpec& spec);
ActionVec sample_uniform_action(const GameSpec& spec, Rng& rng);

struct StepResult {
  JointState state;
  StepEvents events;
};

StepResult game_step(const JointState& s, const JointAction& a, const GameSpec& spec);

// In-place variant used by rollouts; returns the terminal flag.
bool advance(JointState& s, const JointAction& a, const GameSpec& spec, StepEvents* events = nullptr);

bool is_terminal(const JointState& s, const GameSpec& spec);

Observation observe(int i, const JointState& s, const GameSpec& spec);

ValueObservation value_observation(const JointState& s, const GameSpec& spec);

// Requires a terminal state.
int terminal_value(const JointState& s, const GameSpec& spec);

// n_rg divided by the number of attackers in `s`; valid on any state.
double normalized_value(const JointState& s);

// Sub-game seen by one robot. Placeholders for attackers that already scored
// are kept as inactive team-A rows parked at the goal, so that n_rg and the
// attacker count stay consistent.
struct Reconstruction {
  JointState state;
  GameSpec spec;
  int observer = -1;  // index of the observer inside `state`
};

Reconstruction reconstruct_state(const Observation& z, Team observer_team, const GameSpec& spec,
                                 int reached_count, int step_index);

// Random admissible initial condition: attackers on the left, defenders on the
// right, goal nearer the defenders. Throws DomainError after 1000 rejections.
struct InitialCondition {
  GameSpec spec;
  JointState state;
};
InitialCondition sample_initial_condition(const GameSpec& base, std::uint64_t seed);

}  // namespace nte
