#include <cmath>
#include <map>

#include "doctest.h"
#include "nte/arena.hpp"
#include "nte/error.hpp"

using namespace nte;
using namespace nte::arena;

namespace {

ArenaSettings cheap(int n_seeds, std::uint64_t seed) {
  ArenaSettings s;
  s.search.learner_budget = 20;
  s.search.expert_budget = 40;
  s.n_seeds = n_seeds;
  s.seed = seed;
  return s;
}

GameSpec two_vs_two() {
  GameSpec g;
  g.team_a_count = 2;
  g.team_b_count = 2;
  g.pos_bound = 2.0;
  return g;
}

}  // namespace

TEST_CASE("variant names parse and print") {
  CHECK(parse_variant("unbiased_learner").kind == VariantKind::UnbiasedLearner);
  const Variant b = parse_variant("biased_learner:2");
  CHECK(b.kind == VariantKind::BiasedLearner);
  CHECK(b.k == 2);
  CHECK(b.name() == "biased_learner:k2");
  CHECK(parse_variant("biased_learner:k2").k == 2);
  const Variant e = parse_variant("unbiased_expert@10000");
  CHECK(e.expert());
  CHECK(e.budget == 10000);
  CHECK(e.name() == "unbiased_expert@10000");
  const Variant be = parse_variant("biased_expert:k1@2000");
  CHECK(be.biased());
  CHECK(be.k == 1);
  CHECK(be.budget == 2000);
  CHECK(parse_variant("random").kind == VariantKind::RandomUniform);
  for (const char* bad : {"", "learner", "random:1", "unbiased_learner:3", "biased_learner:x", "unbiased_expert@0"}) {
    CHECK_THROWS_AS(parse_variant(bad), ConfigError);
  }
}

TEST_CASE("scores: worked examples and zero sum") {
  MatchResult r;
  r.team_a_count = 3;
  r.reached = 2;
  CHECK(performance_score(r, Side::Attacker) == doctest::Approx(2.0 / 3.0));
  CHECK(performance_score(r, Side::Defender) == doctest::Approx(1.0 / 3.0));
  r.reached = 0;
  CHECK(performance_score(r, Side::Defender) == 1.0);
  for (int n = 0; n <= 3; ++n) {
    r.reached = n;
    CHECK(performance_score(r, Side::Attacker) + performance_score(r, Side::Defender) == doctest::Approx(1.0));
  }
}

TEST_CASE("tournament crosses every variant pair on shared initial conditions") {
  const std::vector<Variant> attackers{parse_variant("random"), parse_variant("unbiased_learner")};
  const std::vector<Variant> defenders{parse_variant("random"), parse_variant("unbiased_expert")};
  CheckpointCache cache("unused");
  const GameSpec spec = two_vs_two();
  const auto results = run_tournament(attackers, defenders, spec, cheap(5, 3), cache);
  REQUIRE(results.size() == 20);
  std::map<std::pair<std::string, std::string>, int> pairs;
  std::map<std::uint64_t, int> per_seed;
  for (const auto& r : results) {
    CHECK(r.error.empty());
    ++pairs[{r.attacker, r.defender}];
    ++per_seed[r.seed];
    CHECK(r.team_a_count == 2);
    CHECK(r.reached >= 0);
    CHECK(r.reached <= 2);
    CHECK(performance_score(r, Side::Attacker) + performance_score(r, Side::Defender) == doctest::Approx(1.0));
  }
  CHECK(pairs.size() == 4);
  for (const auto& [k, n] : pairs) CHECK(n == 5);
  CHECK(per_seed.size() == 5);
  for (const auto& [seed, n] : per_seed) {
    CHECK(n == 4);
    CHECK(sample_initial_condition(spec, seed).state.robots.size() == 4);
  }
  // learners time each decision, random play is timed too
  for (const auto& r : results) {
    CHECK(r.attacker_ms.size() > 0);
    CHECK(r.defender_ms.size() > 0);
  }
}

TEST_CASE("tournaments are reproducible") {
  const std::vector<Variant> attackers{parse_variant("unbiased_learner")};
  const std::vector<Variant> defenders{parse_variant("random"), parse_variant("unbiased_learner")};
  CheckpointCache c1("unused"), c2("unused");
  const auto a = run_tournament(attackers, defenders, two_vs_two(), cheap(4, 8), c1);
  const auto b = run_tournament(attackers, defenders, two_vs_two(), cheap(4, 8), c2);
  CHECK(results_csv(a, "h") == results_csv(b, "h"));
  CHECK(results_csv(a, "h").rfind("# config_hash: h\n", 0) == 0);
}

TEST_CASE("a missing checkpoint fails before any game is played") {
  CheckpointCache cache("/nonexistent/nte");
  CHECK_THROWS_AS(run_tournament({parse_variant("biased_learner:1")}, {parse_variant("random")}, GameSpec{},
                                 cheap(1, 1), cache),
                  DomainError);
}

TEST_CASE("random play is symmetric under mirrored initial conditions") {
  GameSpec spec;
  spec.team_a_count = 2;
  spec.team_b_count = 2;
  spec.pos_bound = 1.0;
  const Variant rnd = parse_variant("random");
  CheckpointCache cache("unused");
  const ArenaSettings settings = cheap(1, 0);
  const int n = 400;
  double original = 0, mirrored = 0;
  for (int g = 0; g < n; ++g) {
    const InitialCondition ic = sample_initial_condition(spec, static_cast<std::uint64_t>(g));
    InitialCondition mi = ic;
    mi.spec.goal_position[1] = -ic.spec.goal_position[1];
    for (RobotState& r : mi.state.robots) {
      r.x[1] = -r.x[1];
      r.x[3] = -r.x[3];
    }
    original += performance_score(play_match(rnd, rnd, ic.spec, ic.state, 1000 + g, settings, cache), Side::Attacker);
    mirrored += performance_score(play_match(rnd, rnd, mi.spec, mi.state, 5000 + g, settings, cache), Side::Attacker);
  }
  // independent play on both sides: the difference of means has sd <= 0.035
  CHECK(std::abs(original - mirrored) / n < 0.11);
}

TEST_CASE("plot rows partition the results and match an independent aggregation") {
  std::vector<MatchResult> results;
  Rng rng(4);
  const char* names[] = {"unbiased_learner", "biased_learner:k1", "biased_learner:k2"};
  for (int n = 0; n < 60; ++n) {
    MatchResult r;
    r.attacker = names[rng.below(3)];
    r.defender = names[rng.below(3)];
    r.attacker_k = r.attacker.back() == '1' ? 1 : r.attacker.back() == '2' ? 2 : 0;
    r.defender_k = r.defender.back() == '1' ? 1 : r.defender.back() == '2' ? 2 : 0;
    r.team_a_count = 3;
    r.reached = static_cast<int>(rng.below(4));
    r.attacker_ms = {rng.uniform(1, 5), rng.uniform(1, 5)};
    r.defender_ms = {rng.uniform(1, 5)};
    results.push_back(r);
  }
  const auto rows = plot_rows(results);
  int attackers = 0, defenders = 0;
  for (const PlotRow& row : rows) {
    (row.role == "attacker" ? attackers : defenders) += row.n_games;
    const Side side = row.role == "attacker" ? Side::Attacker : Side::Defender;
    double sum = 0, sq = 0;
    int count = 0;
    for (const auto& r : results) {
      if ((side == Side::Attacker ? r.attacker : r.defender) != row.variant) continue;
      const double s = performance_score(r, side);
      sum += s;
      sq += s * s;
      ++count;
    }
    const double mean = sum / count;
    CHECK(count == row.n_games);
    CHECK(std::abs(row.mean_score - mean) <= 1e-9);
    CHECK(std::abs(row.var_score - (sq / count - mean * mean)) <= 1e-9);
  }
  CHECK(attackers == 60);
  CHECK(defenders == 60);

  const auto single = plot_rows({results[0]});
  REQUIRE(single.size() == 2);
  CHECK(single[0].n_games == 1);
  CHECK(single[0].var_score == 0.0);
  CHECK(single[0].mean_score == performance_score(results[0], single[0].role == "attacker" ? Side::Attacker : Side::Defender));

  const std::string csv = plot_csv(rows, "h");
  CHECK(csv.find("variant,role,k,mean_score,var_score,n_games,p50_ms,p95_ms") != std::string::npos);
}

TEST_CASE("failed games are left out of the plot statistics") {
  MatchResult ok, bad;
  ok.attacker = bad.attacker = "a";
  ok.defender = bad.defender = "b";
  ok.team_a_count = bad.team_a_count = 1;
  ok.reached = 1;
  bad.error = "boom";
  const auto rows = plot_rows({ok, bad});
  for (const PlotRow& r : rows) CHECK(r.n_games == 1);
}

TEST_CASE("nearest-rank percentile") {
  CHECK(percentile({}, 50) == 0.0);
  CHECK(percentile({5.0}, 95) == 5.0);
  const std::vector<double> v{4, 1, 3, 2, 5, 6, 8, 7, 10, 9};
  CHECK(percentile(v, 50) == 5.0);
  CHECK(percentile(v, 95) == 10.0);
  CHECK(percentile(v, 0) == 1.0);
  CHECK(percentile(v, 100) == 10.0);
}
