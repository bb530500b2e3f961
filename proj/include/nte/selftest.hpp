#pragma once

// Invariant fuzz suite run by `nte selftest`.

#include <cstdint>
#include <string>
#include <vector>

namespace nte {

struct SelftestCheck {
  std::string name;
  int cases = 0;
  int failures = 0;
  std::string first_failure;
};

struct SelftestReport {
  std::vector<SelftestCheck> checks;

  bool passed() const {
    for (const auto& c : checks) {
      if (c.failures > 0) return false;
    }
    return true;
  }
};

// `scale` multiplies the number of fuzz cases per check (1 is a few seconds).
SelftestReport run_selftest(std::uint64_t seed, int scale = 1);

}  // namespace nte
