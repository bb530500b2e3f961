#include <cmath>
#include <numeric>

#include "doctest.h"
#include "nets.hpp"
#include "nte/game_search.hpp"
#include "nte/search.hpp"
#include "toy_game.hpp"

using namespace nte;
using search::SearchConfig;

namespace {

RobotState robot(Team t, double px, double py, double vx = 0.0, double vy = 0.0) {
  RobotState r;
  r.team = t;
  r.x = {px, py, vx, vy, 0, 0, 0};
  return r;
}

struct OneVsOne {
  GameSpec spec;
  JointState state;
  OneVsOne() {
    spec.pos_bound = 2.0;
    state.robots = {robot(Team::A, -1.0, 0.5), robot(Team::B, 1.0, -0.5)};
  }
};

SearchConfig config(int budget, std::uint64_t seed) {
  SearchConfig c;
  c.budget = budget;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("exploration exponent and widening limit") {
  CHECK(search::exploration_exponent(0) == doctest::Approx(0.0485).epsilon(1e-12));
  CHECK(search::exploration_exponent(10) == 0.01);
  for (int d = 0; d < 40; ++d) {
    CHECK(search::exploration_exponent(d) >= 0.01);
    CHECK(search::exploration_exponent(d) <= 0.5);
  }
  const SearchConfig c;
  CHECK(search::widening_limit(16, c) == 2);
  CHECK(search::widening_limit(0, c) == 1);
  CHECK(search::widening_limit(1, c) == 1);
  CHECK(search::widening_limit(17, c) == 3);
}

TEST_CASE("selection flips perspective for team B") {
  const SearchConfig c;
  for (Team t : {Team::A, Team::B}) {
    const double high = search::selection_score(0.5, 10, 20, 0, t, c);
    const double low = search::selection_score(0.2, 10, 20, 0, t, c);
    if (t == Team::A) CHECK(high > low);
    else CHECK(low > high);
  }
  // less visited children get a larger bonus
  CHECK(search::selection_score(0.5, 1, 20, 0, Team::A, c) > search::selection_score(0.5, 10, 20, 0, Team::A, c));
}

TEST_CASE("search contract: budget and terminal root") {
  OneVsOne g;
  const GameDomain d(g.spec, {});
  CHECK_THROWS_AS(search::Tree<GameDomain>(d, g.state, config(0, 1)), ContractViolation);
  JointState done = g.state;
  for (auto& r : done.robots) r.active = false;
  CHECK_THROWS_AS(search::Tree<GameDomain>(d, done, config(10, 1)), ContractViolation);
}

TEST_CASE("budget one gives a single root child") {
  OneVsOne g;
  const GameDomain d(g.spec, {});
  search::Tree<GameDomain> tree(d, g.state, config(1, 3));
  tree.run();
  REQUIRE(tree.node(0).children.size() == 1);
  CHECK(tree.result().action == tree.node(tree.node(0).children[0]).edge);
  CHECK(tree.node(0).visits == 1);
}

TEST_CASE("search is deterministic in its seed") {
  OneVsOne g;
  auto run = [&](std::uint64_t seed) { return search_game(g.state, {}, config(300, seed), g.spec); };
  const GameSearchResult a = run(5), b = run(5), c = run(6);
  REQUIRE(a.stats.children.size() == b.stats.children.size());
  for (std::size_t k = 0; k < a.stats.children.size(); ++k) {
    CHECK(a.stats.children[k].action == b.stats.children[k].action);
    CHECK(a.stats.children[k].visits == b.stats.children[k].visits);
    CHECK(a.stats.children[k].mean_value == b.stats.children[k].mean_value);
  }
  CHECK(a.action == b.action);
  CHECK_FALSE(a.stats.children[0].action == c.stats.children[0].action);
}

TEST_CASE("invariants hold after every iteration and the root gets the whole budget") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GameSpec base;
    base.team_a_count = 1 + static_cast<int>(seed % 3);
    base.team_b_count = 1 + static_cast<int>(seed % 2);
    base.pos_bound = 2.0;
    const InitialCondition ic = sample_initial_condition(base, seed);
    const GameDomain d(ic.spec, {});
    SearchConfig c = config(200, seed);
    c.root_team = seed % 2 ? Team::B : Team::A;
    search::Tree<GameDomain> tree(d, ic.state, c);
    for (int l = 0; l < c.budget; ++l) {
      tree.iterate();
      REQUIRE(tree.check_invariants() == "");
    }
    const auto& root = tree.node(0);
    CHECK(root.visits == c.budget);
    int child_visits = 0;
    for (int ch : root.children) child_visits += tree.node(ch).visits;
    CHECK(child_visits == c.budget - root.leaf_evals);
  }
}

TEST_CASE("backpropagation updates the whole path") {
  const toy::Domain d(toy::random_payoff(1));
  search::Tree<toy::Domain> tree(d, toy::State{}, config(10, 1));
  const int c1 = *tree.expand(0);
  const int c2 = *tree.expand(c1);
  const int before_root = tree.node(0).visits;
  tree.backpropagate(c2, 1.0);
  CHECK(tree.node(0).visits == before_root + 1);
  CHECK(tree.node(0).value_sum == 1.0);
  CHECK(tree.node(c1).visits == 1);
  CHECK(tree.node(c2).visits == 1);
  CHECK(tree.node(c2).value_sum == 1.0);
  CHECK(tree.node(c2).depth == 2);
}

TEST_CASE("root mean value stays in [0, 1]") {
  OneVsOne g;
  const GameDomain d(g.spec, {});
  search::Tree<GameDomain> tree(d, g.state, config(200, 9));
  for (int l = 0; l < 200; ++l) {
    tree.iterate();
    const double q = tree.node(0).value_sum / tree.node(0).visits;
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
  }
}

TEST_CASE("expansion gate: beta_policy 0 never uses the network, 1 always does") {
  OneVsOne g;
  const nn::Network pa = testnet::constant(nn::policy_architecture(g.spec), {0.3, -0.2});
  const nn::Network pb = testnet::constant(nn::policy_architecture(g.spec), {-0.5, 0.1});
  const NetworkSet nets{&pa, &pb, nullptr};

  SearchConfig c = config(200, 2);
  c.beta_policy = 0.0;
  const GameSearchResult uniform = search_game(g.state, nets, c, g.spec);
  CHECK(uniform.stats.neural_expansions == 0);

  c.beta_policy = 1.0;
  const GameSearchResult neural = search_game(g.state, nets, c, g.spec);
  CHECK(neural.stats.uniform_expansions == 0);
  for (const auto& ch : neural.stats.children) {
    CHECK(ch.action[0][0] == doctest::Approx(0.3).epsilon(1e-3));
    CHECK(ch.action[0][1] == doctest::Approx(-0.2).epsilon(1e-3));
    CHECK(ch.action[1][0] == doctest::Approx(-0.5).epsilon(1e-3));
    CHECK(ch.action[1][1] == doctest::Approx(0.1).epsilon(1e-3));
  }
}

TEST_CASE("expansion gate frequency matches beta_policy") {
  OneVsOne g;
  const nn::Network p = nn::Network::initialized(nn::policy_architecture(g.spec), 4);
  const GameDomain d(g.spec, {&p, &p, nullptr});
  SearchConfig c = config(1, 8);
  c.beta_policy = 0.5;
  search::Tree<GameDomain> tree(d, g.state, c);
  for (int n = 0; n < 10000; ++n) REQUIRE(tree.expand(0).has_value());
  const double freq = tree.root_stats().neural_expansions / 10000.0;
  CHECK(freq == doctest::Approx(0.5).epsilon(0.04));  // 0.5 +- 0.02
}

TEST_CASE("default policy: terminal short circuit, constant value network, rollouts") {
  GameSpec spec;
  spec.pos_bound = 2.0;
  const nn::Network v = testnet::constant(nn::value_architecture(spec), {0.7});
  const GameDomain d(spec, {nullptr, nullptr, &v});
  JointState live{{robot(Team::A, -1, 0), robot(Team::B, 1, 0)}};

  SUBCASE("terminal state with every attacker tagged is worth 0") {
    JointState tagged = live;
    for (auto& r : tagged.robots) r.active = false;
    for (double beta : {0.0, 1.0}) {
      SearchConfig c = config(1, 1);
      c.beta_value = beta;
      search::Tree<GameDomain> tree(d, live, c);
      CHECK(tree.default_policy(tagged) == 0.0);
    }
  }
  SUBCASE("beta_value 1 with a constant network returns its output") {
    SearchConfig c = config(1, 1);
    c.beta_value = 1.0;
    search::Tree<GameDomain> tree(d, live, c);
    for (int n = 0; n < 100; ++n) CHECK(tree.default_policy(live) == doctest::Approx(0.7).epsilon(1e-3));
  }
  SUBCASE("wide value samples are clamped to [0, 1]") {
    const nn::Network wide = testnet::constant(nn::value_architecture(spec), {0.5}, 2.0);
    const GameDomain wd(spec, {nullptr, nullptr, &wide});
    SearchConfig c = config(1, 1);
    c.beta_value = 1.0;
    search::Tree<GameDomain> tree(wd, live, c);
    int low = 0, high = 0;
    for (int n = 0; n < 1000; ++n) {
      const double v = tree.default_policy(live);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      low += v == 0.0 ? 1 : 0;
      high += v == 1.0 ? 1 : 0;
    }
    CHECK(low > 0);
    CHECK(high > 0);

    SearchConfig full = config(300, 2);
    full.beta_value = 0.5;
    search::Tree<GameDomain> searched(wd, live, full);
    for (int n = 0; n < 300; ++n) {
      searched.iterate();
      REQUIRE(searched.check_invariants().empty());
    }
  }
  SUBCASE("lone attacker next to the goal usually scores in a random rollout") {
    GameSpec solo;
    solo.team_b_count = 0;
    const GameDomain sd(solo, {});
    JointState s{{robot(Team::A, -0.3, 0)}};
    search::Tree<GameDomain> tree(sd, s, config(1, 1));
    double sum = 0;
    for (int n = 0; n < 1000; ++n) sum += tree.default_policy(s);
    CHECK(sum / 1000 >= 0.2);
  }
}

TEST_CASE("visit-weighted label") {
  GameRootStats st;
  st.root_visits = 40;
  st.children.push_back({JointAction{ActionVec{1, 0, 0}}, 30, 0.5});
  st.children.push_back({JointAction{ActionVec{0, 1, 0}}, 10, 0.5});
  const ActionVec a = visit_weighted_action(st, 0);
  CHECK(a[0] == doctest::Approx(0.75));
  CHECK(a[1] == doctest::Approx(0.25));

  GameRootStats one;
  one.root_visits = 1;
  one.children.push_back({JointAction{ActionVec{0.3, -0.4, 0}}, 1, 1.0});
  CHECK(visit_weighted_action(one, 0) == ActionVec{0.3, -0.4, 0});
}

TEST_CASE("toy game: search finds the minimax root move") {
  int agree = 0, played = 0;
  for (std::uint64_t seed = 0; played < 5; ++seed) {
    const toy::Payoff p = toy::random_payoff(seed);
    const toy::Minimax m = toy::solve(p);
    if (m.margin < 0.05) continue;
    ++played;
    SearchConfig c = config(10000, seed);
    c.c_pw = 3.0;
    const toy::Domain d(p);
    agree += search::run_search(d, toy::State{}, c).action == m.root ? 1 : 0;
  }
  CHECK(agree == 5);
}

TEST_CASE("toy game: complementing payoffs and swapping the root team mirrors the tree") {
  const toy::Payoff p = toy::random_payoff(3);
  toy::Payoff q = p;
  for (auto& x : q)
    for (auto& y : x)
      for (auto& z : y)
        for (auto& w : z) w = 1.0 - w;
  SearchConfig ca = config(2000, 4);
  SearchConfig cb = ca;
  cb.root_team = Team::B;
  const toy::Domain da(p), db(q);
  const auto ra = search::run_search(da, toy::State{}, ca);
  const auto rb = search::run_search(db, toy::State{}, cb);
  REQUIRE(ra.stats.children.size() == rb.stats.children.size());
  for (std::size_t k = 0; k < ra.stats.children.size(); ++k) {
    CHECK(ra.stats.children[k].visits == rb.stats.children[k].visits);
    CHECK(ra.stats.children[k].mean_value == doctest::Approx(1.0 - rb.stats.children[k].mean_value).epsilon(1e-9));
  }
  CHECK(ra.action == rb.action);
}

TEST_CASE("learner: zero action without sensing, expert agreement under full visibility") {
  OneVsOne g;
  GameSpec blind = g.spec;
  blind.sense_radius = 0.0;
  const Observation z0 = observe(0, g.state, blind);
  CHECK(learner_policy(Team::A, z0, {}, config(50, 1), blind, {}) == ActionVec{});

  // dyadic coordinates make the reconstruction exact, so both searches see
  // the same tree
  g.spec.goal_position = {0.5, 0.25, 0.0};
  g.state.robots = {robot(Team::A, -1.0, 0.5, 0.25, 0.0), robot(Team::B, 0.5, -0.5)};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GameSearchResult e = expert_policy(g.state, Team::A, {}, config(500, seed), g.spec);
    const ActionVec l = learner_policy(Team::A, observe(0, g.state, g.spec), {}, config(500, seed), g.spec, {});
    CHECK(l == e.action[0]);
  }
}

TEST_CASE("learner: a lone attacker heads for the goal") {
  GameSpec spec;
  spec.pos_bound = 5.0;
  spec.team_b_count = 1;
  double before = 0, after = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    // defender far outside the sensing radius
    JointState s{{robot(Team::A, -1.2, 0.3 * std::cos(seed)), robot(Team::B, 4.5, 4.5)}};
    before += std::hypot(s.robots[0].x[0], s.robots[0].x[1]);
    for (int t = 0; t < 5 && !is_terminal(s, spec); ++t) {
      JointAction a(2, ActionVec{});
      learner_team_action(s, Team::A, {}, config(200, seed * 31 + t), spec, a);
      advance(s, a, spec);
    }
    after += std::hypot(s.robots[0].x[0], s.robots[0].x[1]);
  }
  CHECK(after < before);
}
