#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gvc {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // failure reason, empty on pass
};

struct NamedCheck {
  std::string name;
  std::string summary;
  std::function<void()> body;  // throws on failure
};

// The cross-module invariant suite: every documented library invariant as a
// named, independently runnable check.
const std::vector<NamedCheck>& invariant_checks();

// Runs every check whose name contains `pattern` as a substring (all checks
// for the empty pattern), sequentially, in declaration order.
std::vector<CheckResult> run_invariant_checks(const std::string& pattern = {});

// Deterministic pseudo-random expression texts (fully parenthesized) for
// parser round-trip exercises.
std::vector<std::string> sample_expressions(int count, std::uint64_t seed);

}  // namespace gvc
