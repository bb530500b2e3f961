#pragma once

// Continuous-action Monte Carlo tree search with progressive widening and
// network-gated expansion / evaluation.
//
// Nodes own a state; edges carry full joint actions. The team acting at a
// depth only changes how children are scored during selection: the root team
// acts at even depths, the other team at odd depths. Values are always stored
// from team A's point of view in [0, 1].
//
// A node with N visits may hold at most max(1, ceil(c_pw * N^alpha_pw))
// children. When it is full, selection descends to the child maximizing
//
//   Q(child) + c_p * sqrt(N(node)^alpha_d(depth) / N(child)),
//
// with Q flipped to 1 - W/N when team B acts.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nte/error.hpp"
#include "nte/game.hpp"
#include "nte/rng.hpp"

namespace nte::search {

// (1 - 3 / (100 - 10 d)) / 20, clamped to [0.01, 0.5]. The pole at d = 10 maps
// to the lower clamp.
double exploration_exponent(int depth);

struct SearchConfig {
  int budget = 500;
  double c_p = 2.0;
  double c_pw = 1.0;
  double alpha_pw = 0.25;
  double beta_policy = 0.0;
  double beta_value = 0.0;
  int rollout_cap = 0;  // extra cap on rollout length, 0 = until terminal
  // Re-draws when an expansion reproduces an existing edge (only happens for
  // discrete action sets).
  int distinct_retries = 8;
  Team root_team = Team::A;
  std::uint64_t seed = 0;

  void validate() const;
};

int widening_limit(int visits, const SearchConfig& cfg);

// Selection score of a child whose team-A mean value is `mean_a`, seen by
// the team acting at the parent.
double selection_score(double mean_a, int child_visits, int parent_visits, int parent_depth, Team acting,
                       const SearchConfig& cfg);

template <class D>
concept Domain = requires(const D& d, const typename D::State& s, typename D::State& m,
                          const typename D::Action& a, Rng& rng) {
  { d.terminal(s) } -> std::convertible_to<bool>;
  { d.step(s, a) } -> std::same_as<typename D::State>;
  { d.advance(m, a) };
  { d.uniform_action(s, rng) } -> std::same_as<typename D::Action>;
  { d.has_policy() } -> std::convertible_to<bool>;
  { d.policy_action(s, rng) } -> std::same_as<typename D::Action>;
  { d.has_value() } -> std::convertible_to<bool>;
  { d.value_sample(s, rng) } -> std::convertible_to<double>;
  { d.value(s) } -> std::convertible_to<double>;
  { d.same_action(a, a) } -> std::convertible_to<bool>;
};

template <class Action>
struct ChildStats {
  Action action;
  int visits = 0;
  double mean_value = 0.0;  // team-A perspective
};

template <class Action>
struct RootStats {
  std::vector<ChildStats<Action>> children;
  int root_visits = 0;
  int best = -1;
  int neural_expansions = 0;
  int uniform_expansions = 0;
  int value_evaluations = 0;
  int rollouts = 0;
  int tree_size = 0;
};

template <class Action>
struct SearchResult {
  Action action;
  RootStats<Action> stats;
};

template <Domain D>
class Tree {
 public:
  using State = typename D::State;
  using Action = typename D::Action;

  struct Node {
    State state;
    Action edge{};
    int parent = -1;
    int depth = 0;
    std::vector<int> children;
    int visits = 0;
    double value_sum = 0.0;
    int leaf_evals = 0;  // times this node was the evaluated leaf
    bool terminal = false;
  };

  Tree(const D& domain, State root, const SearchConfig& cfg)
      : domain_(domain), cfg_(cfg), rng_(derive_seed(cfg.seed, "search")) {
    cfg_.validate();
    if (domain_.terminal(root)) throw ContractViolation("search started from a terminal state");
    nodes_.reserve(static_cast<std::size_t>(cfg_.budget) + 1);
    Node n;
    n.state = std::move(root);
    nodes_.push_back(std::move(n));
  }

  // One select / expand / evaluate / backpropagate pass. Returns the leaf.
  int iterate() {
    int node = 0;
    int leaf = -1;
    while (leaf < 0) {
      Node& n = nodes_[static_cast<std::size_t>(node)];
      if (n.terminal) {
        leaf = node;
        break;
      }
      if (static_cast<int>(n.children.size()) < widening_limit(n.visits, cfg_)) {
        if (auto child = expand(node)) {
          leaf = *child;
          break;
        }
      }
      if (nodes_[static_cast<std::size_t>(node)].children.empty()) {
        leaf = node;  // nothing new could be generated, evaluate in place
        break;
      }
      node = select_child(node);
    }
    const double v = default_policy(nodes_[static_cast<std::size_t>(leaf)].state);
    ++nodes_[static_cast<std::size_t>(leaf)].leaf_evals;
    backpropagate(leaf, v);
    return leaf;
  }

  void run() {
    for (int l = 0; l < cfg_.budget; ++l) iterate();
  }

  Team acting_team(int depth) const { return depth % 2 == 0 ? cfg_.root_team : other(cfg_.root_team); }

  // Q from the perspective of the team acting at `parent`.
  double child_q(int parent, int child) const {
    const Node& c = nodes_[static_cast<std::size_t>(child)];
    const double mean = c.value_sum / c.visits;
    return acting_team(nodes_[static_cast<std::size_t>(parent)].depth) == Team::A ? mean : 1.0 - mean;
  }

  double child_score(int parent, int child) const {
    const Node& p = nodes_[static_cast<std::size_t>(parent)];
    const Node& c = nodes_[static_cast<std::size_t>(child)];
    return selection_score(c.value_sum / c.visits, c.visits, p.visits, p.depth, acting_team(p.depth), cfg_);
  }

  int select_child(int node) const {
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c : n.children) {
      const double s = child_score(node, c);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    return best;
  }

  // Adds one child under `node`, or nothing if every draw duplicated an
  // existing edge.
  std::optional<int> expand(int node) {
    const bool neural = rng_.uniform() < cfg_.beta_policy && domain_.has_policy();
    const State& s = nodes_[static_cast<std::size_t>(node)].state;
    Action a{};
    bool fresh = false;
    for (int attempt = 0; attempt <= cfg_.distinct_retries && !fresh; ++attempt) {
      a = neural ? domain_.policy_action(s, rng_) : domain_.uniform_action(s, rng_);
      fresh = true;
      for (int c : nodes_[static_cast<std::size_t>(node)].children) {
        if (domain_.same_action(nodes_[static_cast<std::size_t>(c)].edge, a)) {
          fresh = false;
          break;
        }
      }
    }
    if (!fresh) return std::nullopt;
    (neural ? neural_expansions_ : uniform_expansions_)++;

    Node child;
    child.state = domain_.step(s, a);
    child.edge = std::move(a);
    child.parent = node;
    child.depth = nodes_[static_cast<std::size_t>(node)].depth + 1;
    child.terminal = domain_.terminal(child.state);
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(child));
    nodes_[static_cast<std::size_t>(node)].children.push_back(idx);
    return idx;
  }

  // Value in [0, 1] for team A: network sample with probability beta_value,
  // otherwise a uniform-random rollout.
  double default_policy(const State& s) {
    if (domain_.terminal(s)) return domain_.value(s);
    if (rng_.uniform() < cfg_.beta_value && domain_.has_value()) {
      ++value_evaluations_;
      return std::clamp(static_cast<double>(domain_.value_sample(s, rng_)), 0.0, 1.0);
    }
    ++rollouts_;
    State cur = s;
    for (int t = 0; !domain_.terminal(cur) && (cfg_.rollout_cap <= 0 || t < cfg_.rollout_cap); ++t) {
      domain_.advance(cur, domain_.uniform_action(cur, rng_));
    }
    return domain_.value(cur);
  }

  void backpropagate(int leaf, double v) {
    for (int n = leaf; n >= 0; n = nodes_[static_cast<std::size_t>(n)].parent) {
      Node& node = nodes_[static_cast<std::size_t>(n)];
      ++node.visits;
      node.value_sum += v;
    }
  }

  // Most visited root child; ties by mean value for the root team, then
  // insertion order.
  int best_root_child() const {
    const Node& root = nodes_[0];
    int best = -1;
    for (int c : root.children) {
      if (best < 0) {
        best = c;
        continue;
      }
      const Node& cn = nodes_[static_cast<std::size_t>(c)];
      const Node& bn = nodes_[static_cast<std::size_t>(best)];
      if (cn.visits > bn.visits || (cn.visits == bn.visits && child_q(0, c) > child_q(0, best))) best = c;
    }
    return best;
  }

  RootStats<Action> root_stats() const {
    RootStats<Action> st;
    const Node& root = nodes_[0];
    st.root_visits = root.visits;
    const int best = best_root_child();
    for (std::size_t k = 0; k < root.children.size(); ++k) {
      const Node& c = nodes_[static_cast<std::size_t>(root.children[k])];
      st.children.push_back({c.edge, c.visits, c.value_sum / c.visits});
      if (root.children[k] == best) st.best = static_cast<int>(k);
    }
    st.neural_expansions = neural_expansions_;
    st.uniform_expansions = uniform_expansions_;
    st.value_evaluations = value_evaluations_;
    st.rollouts = rollouts_;
    st.tree_size = static_cast<int>(nodes_.size());
    return st;
  }

  SearchResult<Action> result() const {
    if (nodes_[0].children.empty()) throw DomainError("search produced no root children");
    const int best = best_root_child();
    return {nodes_[static_cast<std::size_t>(best)].edge, root_stats()};
  }

  // Empty when the tree satisfies visit conservation and the widening bound.
  std::string check_invariants() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      int sum = n.leaf_evals;
      for (int c : n.children) sum += nodes_[static_cast<std::size_t>(c)].visits;
      if (sum != n.visits) {
        return "node " + std::to_string(i) + ": visits " + std::to_string(n.visits) +
               " != leaf evaluations + child visits " + std::to_string(sum);
      }
      const int limit = widening_limit(n.visits, cfg_);
      if (static_cast<int>(n.children.size()) > limit) {
        return "node " + std::to_string(i) + ": " + std::to_string(n.children.size()) +
               " children exceeds widening limit " + std::to_string(limit);
      }
      if (n.visits > 0) {
        const double q = n.value_sum / n.visits;
        if (q < -1e-12 || q > 1.0 + 1e-12) return "node " + std::to_string(i) + ": mean value out of [0,1]";
      }
    }
    return {};
  }

  const Node& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return nodes_.size(); }
  const SearchConfig& config() const { return cfg_; }
  Rng& rng() { return rng_; }

 private:
  const D& domain_;
  SearchConfig cfg_;
  Rng rng_;
  std::vector<Node> nodes_;
  int neural_expansions_ = 0;
  int uniform_expansions_ = 0;
  int value_evaluations_ = 0;
  int rollouts_ = 0;
};

template <Domain D>
SearchResult<typename D::Action> run_search(const D& domain, typename D::State root, const SearchConfig& cfg) {
  Tree<D> tree(domain, std::move(root), cfg);
  tree.run();
  return tree.result();
}

}  // namespace nte::search
