#include "nte/search.hpp"

namespace nte::search {

double exploration_exponent(int depth) {
  const double denom = 100.0 - 10.0 * depth;
  if (denom == 0.0) return 0.01;
  return std::clamp((1.0 - 3.0 / denom) / 20.0, 0.01, 0.5);
}

void SearchConfig::validate() const {
  if (budget < 1) throw ContractViolation("search budget must be >= 1");
  if (!(beta_policy >= 0.0 && beta_policy <= 1.0)) throw ContractViolation("beta_policy must lie in [0, 1]");
  if (!(beta_value >= 0.0 && beta_value <= 1.0)) throw ContractViolation("beta_value must lie in [0, 1]");
  if (!(c_pw > 0.0)) throw ContractViolation("c_pw must be positive");
  if (!(c_p >= 0.0)) throw ContractViolation("c_p must be non-negative");
}

int widening_limit(int visits, const SearchConfig& cfg) {
  const double k = std::ceil(cfg.c_pw * std::pow(static_cast<double>(visits), cfg.alpha_pw));
  return std::max(1, static_cast<int>(k));
}

double selection_score(double mean_a, int child_visits, int parent_visits, int parent_depth, Team acting,
                       const SearchConfig& cfg) {
  const double q = acting == Team::A ? mean_a : 1.0 - mean_a;
  const double explore = std::sqrt(std::pow(static_cast<double>(parent_visits), exploration_exponent(parent_depth)) /
                                   static_cast<double>(child_visits));
  return q + cfg.c_p * explore;
}

}  // namespace nte::search
