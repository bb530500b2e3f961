#include "nte/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "nte/game_search.hpp"
#include "nte/neural.hpp"
#include "nte/search.hpp"

namespace nte {

namespace {

struct Fuzz {
  JointState state;
  GameSpec spec;
};

// Random game after a few uniform steps, so states are not all initial ones.
Fuzz random_game(Rng& rng) {
  GameSpec base;
  base.dynamics = rng.uniform() < 0.3 ? DynamicsModel::Dubins3D : DynamicsModel::DoubleIntegrator2D;
  base.team_a_count = 1 + static_cast<int>(rng.below(3));
  base.team_b_count = 1 + static_cast<int>(rng.below(3));
  base.pos_bound = 2.0 + static_cast<double>(rng.below(2));
  InitialCondition ic = sample_initial_condition(base, rng.next());
  const int warmup = static_cast<int>(rng.below(4));
  for (int t = 0; t < warmup && !is_terminal(ic.state, ic.spec); ++t) {
    JointAction a(ic.state.robots.size());
    for (auto& u : a) u = sample_uniform_action(ic.spec, rng);
    advance(ic.state, a, ic.spec);
  }
  return {ic.state, ic.spec};
}

JointAction random_action(const JointState& s, const GameSpec& spec, Rng& rng) {
  JointAction a(s.robots.size());
  for (auto& u : a) u = sample_uniform_action(spec, rng);
  return a;
}

void run_check(SelftestReport& report, const std::string& name, int cases, Rng& rng,
               const std::function<std::string(Rng&)>& body) {
  SelftestCheck c{name, cases, 0, {}};
  for (int n = 0; n < cases; ++n) {
    std::string why;
    try {
      why = body(rng);
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    if (!why.empty()) {
      if (c.failures++ == 0) c.first_failure = "case " + std::to_string(n) + ": " + why;
    }
  }
  report.checks.push_back(std::move(c));
}

std::string trajectory_invariants(Rng& rng) {
  Fuzz f = random_game(rng);
  JointState s = f.state;
  while (!is_terminal(s, f.spec)) {
    const JointAction a = random_action(s, f.spec, rng);
    const StepResult r1 = game_step(s, a, f.spec);
    const StepResult r2 = game_step(s, a, f.spec);
    if (!(r1.state == r2.state)) return "step is not deterministic";
    for (std::size_t i = 0; i < s.robots.size(); ++i) {
      if (!s.robots[i].active && !(r1.state.robots[i] == s.robots[i])) return "inactive robot moved";
    }
    if (r1.state.reached_count < s.reached_count) return "reached count decreased";
    if (f.spec.dynamics == DynamicsModel::Dubins3D) {
      for (const RobotState& r : r1.state.robots) {
        if (r.x[6] < f.spec.dubins_speed_range[0] - 1e-12 || r.x[6] > f.spec.dubins_speed_range[1] + 1e-12)
          return "Dubins speed left its range";
      }
    }
    s = r1.state;
  }
  if (terminal_value(s, f.spec) != s.reached_count) return "terminal value differs from reached count";
  return {};
}

std::string reconstruction_exact(Rng& rng) {
  Fuzz f = random_game(rng);
  const int sd = f.spec.state_dim();
  for (std::size_t i = 0; i < f.state.robots.size(); ++i) {
    const RobotState& me = f.state.robots[i];
    if (!me.active) continue;
    const Observation z = observe(static_cast<int>(i), f.state, f.spec);
    const Reconstruction rec = reconstruct_state(z, me.team, f.spec, f.state.reached_count, f.state.step_index);
    const RobotState& self = rec.state.robots.at(static_cast<std::size_t>(rec.observer));
    for (int k = 0; k < sd; ++k) {
      if (std::abs(self.x[k] - me.x[k]) > 1e-12) return "observer row not recovered";
    }
    // every reconstructed active row must match some true visible robot
    for (const RobotState& r : rec.state.robots) {
      if (!r.active) continue;
      bool found = false;
      for (const RobotState& t : f.state.robots) {
        if (!t.active || t.team != r.team) continue;
        double err = 0.0;
        for (int k = 0; k < sd; ++k) err = std::max(err, std::abs(t.x[k] - r.x[k]));
        found = found || err <= 1e-12;
      }
      if (!found) return "reconstructed row has no matching robot";
    }
  }
  return {};
}

std::string search_invariants(Rng& rng) {
  Fuzz f = random_game(rng);
  if (is_terminal(f.state, f.spec)) return {};
  search::SearchConfig cfg;
  cfg.budget = 1 + static_cast<int>(rng.below(300));
  cfg.seed = rng.next();
  cfg.root_team = rng.uniform() < 0.5 ? Team::A : Team::B;
  const GameDomain domain(f.spec, {});
  search::Tree<GameDomain> tree(domain, f.state, cfg);
  for (int l = 0; l < cfg.budget; ++l) {
    tree.iterate();
    if (auto why = tree.check_invariants(); !why.empty()) return why;
  }
  if (tree.node(0).visits != cfg.budget) return "root visits differ from budget";
  return {};
}

std::string permutation_invariance(Rng& rng) {
  nn::Architecture arch;
  arch.elem_dim = 4;
  arch.self_dim = 1 + static_cast<int>(rng.below(4));
  arch.out_dim = 1 + static_cast<int>(rng.below(3));
  const nn::Network net = nn::Network::initialized(arch, rng.next());
  nn::SetInput in;
  for (int k = 0; k < arch.self_dim; ++k) in.self.push_back(rng.uniform(-2, 2));
  const auto na = rng.below(6);
  const auto nb = rng.below(6);
  for (std::uint64_t k = 0; k < na * 4; ++k) in.set_a.push_back(rng.uniform(-2, 2));
  for (std::uint64_t k = 0; k < nb * 4; ++k) in.set_b.push_back(rng.uniform(-2, 2));
  const nn::GaussianOutput o1 = net.forward(in);

  auto shuffle = [&](std::vector<double>& flat) {
    const std::size_t n = flat.size() / 4;
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = rng.below(i);
      for (int k = 0; k < 4; ++k) std::swap(flat[(i - 1) * 4 + k], flat[j * 4 + k]);
    }
  };
  nn::SetInput p = in;
  shuffle(p.set_a);
  shuffle(p.set_b);
  const nn::GaussianOutput o2 = net.forward(p);
  if (o1.mean != o2.mean || o1.std != o2.std) return "output changed under permutation";
  return {};
}

std::string gradient_check(Rng& rng) {
  nn::Architecture arch;
  arch.elem_dim = 4;
  arch.self_dim = 4;
  arch.out_dim = 2;
  nn::Network net = nn::Network::initialized(arch, rng.next());
  std::vector<nn::TrainingSample> batch(3);
  for (auto& s : batch) {
    for (int k = 0; k < 4; ++k) s.input.self.push_back(rng.uniform(-1, 1));
    const std::uint64_t na = 4 * (1 + rng.below(3));
    const std::uint64_t nb = 4 * rng.below(3);
    for (std::uint64_t k = 0; k < na; ++k) s.input.set_a.push_back(rng.uniform(-1, 1));
    for (std::uint64_t k = 0; k < nb; ++k) s.input.set_b.push_back(rng.uniform(-1, 1));
    s.target = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  }
  std::vector<double> grad(net.params().size());
  nn::loss_and_gradient(net, batch, grad);
  const double h = 1e-5;
  for (int n = 0; n < 10; ++n) {
    const std::size_t k = rng.below(grad.size());
    const double keep = net.params()[k];
    net.params()[k] = keep + h;
    const double up = nn::mean_loss(net, batch);
    net.params()[k] = keep - h;
    const double down = nn::mean_loss(net, batch);
    net.params()[k] = keep;
    const double fd = (up - down) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-6});
    if (std::abs(fd - grad[k]) / denom > 1e-4) return "gradient mismatch at parameter " + std::to_string(k);
  }
  return {};
}

}  // namespace

SelftestReport run_selftest(std::uint64_t seed, int scale) {
  scale = std::max(1, scale);
  SelftestReport report;
  Rng rng(derive_seed(seed, "selftest"));
  run_check(report, "trajectory invariants", 40 * scale, rng, trajectory_invariants);
  run_check(report, "reconstruction exactness", 200 * scale, rng, reconstruction_exact);
  run_check(report, "search invariants", 20 * scale, rng, search_invariants);
  run_check(report, "network permutation invariance", 200 * scale, rng, permutation_invariance);
  run_check(report, "gradient finite differences", 20 * scale, rng, gradient_check);
  return report;
}

}  // namespace nte
