#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gvc/types.hpp"

namespace gvc {

// Declarative problem description: flat key = value lines grouped under
// optional [section] headers, '#' comments, whitespace-separated numbers for
// vector values, and expression strings for scalar data. Top-level keys live
// in the section with the empty name.
struct ProblemSpec {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const;
  // Throws SpecError when absent.
  const std::string& get(const std::string& section, const std::string& key) const;
  std::string kind() const { return get("", "kind"); }
};

// Throws SpecError on malformed lines, duplicate keys, or missing kind.
ProblemSpec parse_problem(const std::string& text);
ProblemSpec parse_problem_file(const std::string& path);

// Command-line adjustments: dt/t1 apply to flow kinds, steps to stepper
// kinds; supplying one to the wrong family is a spec error.
struct RunOverrides {
  std::optional<double> dt;
  std::optional<double> t1;
  std::optional<int> steps;
};

struct RunResult {
  Trajectory trajectory;
  std::string index_label;  // "t" for flows, "k" for steppers
  // Conserved-quantity drifts and solution diagnostics, in report order.
  std::vector<std::pair<std::string, double>> summary;
};

// Dispatches on kind: lagrangian, hamiltonian, vakonomic, pontryagin,
// discrete_el, discrete_constrained, discrete_ocp, groupoid_del,
// euler_poincare, lie_poisson. Structural problems throw SpecError or
// ParseError; solver breakdowns propagate ConvergenceError,
// SingularMatrixError, or ChartError.
RunResult run_problem(const ProblemSpec& spec, const RunOverrides& overrides = {});

}  // namespace gvc
