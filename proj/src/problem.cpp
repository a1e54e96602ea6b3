#include "gvc/problem.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "gvc/catalog.hpp"
#include "gvc/continuous.hpp"
#include "gvc/discrete.hpp"
#include "gvc/expr.hpp"
#include "gvc/groupoid.hpp"

namespace gvc {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(key[0])) && key[0] != '_') return false;
  for (char c : key) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

std::string section_name(const std::string& section) {
  return section.empty() ? "top level" : "section [" + section + "]";
}

double parse_double_value(const std::string& value, const std::string& where) {
  const char* begin = value.c_str();
  char* end = nullptr;
  double out = std::strtod(begin, &end);
  if (end == begin || !trim(end).empty()) {
    throw SpecError(where + ": '" + value + "' is not a number");
  }
  return out;
}

// Tracks which keys the active kind consumed so leftovers (typos, keys from a
// different kind) are reported instead of silently ignored.
class SpecReader {
 public:
  explicit SpecReader(const ProblemSpec& spec) : spec_(spec) {}

  bool has(const std::string& section, const std::string& key) const {
    return spec_.has(section, key);
  }

  std::string require_str(const std::string& section, const std::string& key) {
    if (!spec_.has(section, key)) {
      throw SpecError("missing required key '" + key + "' at " + section_name(section));
    }
    consumed_.insert({section, key});
    return spec_.get(section, key);
  }

  std::optional<std::string> take_str(const std::string& section, const std::string& key) {
    if (!spec_.has(section, key)) return std::nullopt;
    consumed_.insert({section, key});
    return spec_.get(section, key);
  }

  double require_double(const std::string& section, const std::string& key) {
    return parse_double_value(require_str(section, key), where(section, key));
  }

  std::optional<double> take_double(const std::string& section, const std::string& key) {
    auto raw = take_str(section, key);
    if (!raw) return std::nullopt;
    return parse_double_value(*raw, where(section, key));
  }

  int require_int(const std::string& section, const std::string& key) {
    double v = require_double(section, key);
    if (v != std::floor(v)) {
      throw SpecError(where(section, key) + ": expected an integer");
    }
    return static_cast<int>(v);
  }

  std::optional<int> take_int(const std::string& section, const std::string& key) {
    auto v = take_double(section, key);
    if (!v) return std::nullopt;
    if (*v != std::floor(*v)) {
      throw SpecError(where(section, key) + ": expected an integer");
    }
    return static_cast<int>(*v);
  }

  bool take_bool(const std::string& section, const std::string& key, bool fallback) {
    auto raw = take_str(section, key);
    if (!raw) return fallback;
    if (*raw == "true") return true;
    if (*raw == "false") return false;
    throw SpecError(where(section, key) + ": expected true or false");
  }

  Vec require_vec(const std::string& section, const std::string& key, int size) {
    return parse_vec(require_str(section, key), section, key, size);
  }

  Vec take_vec(const std::string& section, const std::string& key, int size,
               const Vec& fallback) {
    auto raw = take_str(section, key);
    if (!raw) return fallback;
    return parse_vec(*raw, section, key, size);
  }

  void forbid(const std::string& section, const std::string& key, const std::string& why) {
    if (spec_.has(section, key)) {
      throw SpecError(where(section, key) + " is not allowed: " + why);
    }
  }

  // Collects every c_A_B_C key of [structure] as (A, B, C, value), 1-based.
  std::vector<std::tuple<int, int, int, double>> take_constants() {
    std::vector<std::tuple<int, int, int, double>> out;
    auto it = spec_.sections.find("structure");
    if (it == spec_.sections.end()) return out;
    for (const auto& [key, value] : it->second) {
      if (key.rfind("c_", 0) != 0) continue;
      int idx[3] = {0, 0, 0};
      std::istringstream stream(key.substr(2));
      std::string part;
      int count = 0;
      bool ok = true;
      while (std::getline(stream, part, '_')) {
        if (count >= 3 || part.empty() ||
            part.find_first_not_of("0123456789") != std::string::npos) {
          ok = false;
          break;
        }
        idx[count++] = std::atoi(part.c_str());
      }
      if (!ok || count != 3) {
        throw SpecError("section [structure]: key '" + key +
                        "' is not of the form c_A_B_C");
      }
      consumed_.insert({"structure", key});
      out.emplace_back(idx[0], idx[1], idx[2],
                       parse_double_value(value, where("structure", key)));
    }
    return out;
  }

  void finish() const {
    for (const auto& [section, entries] : spec_.sections) {
      for (const auto& [key, value] : entries) {
        (void)value;
        if (!consumed_.count({section, key})) {
          throw SpecError("unrecognized key '" + key + "' at " + section_name(section) +
                          " for kind '" + spec_.kind() + "'");
        }
      }
    }
  }

 private:
  static std::string where(const std::string& section, const std::string& key) {
    return "key '" + key + "' at " + section_name(section);
  }

  Vec parse_vec(const std::string& raw, const std::string& section, const std::string& key,
                int size) {
    std::istringstream stream(raw);
    std::vector<double> values;
    std::string token;
    while (stream >> token) {
      values.push_back(parse_double_value(token, where(section, key)));
    }
    if (static_cast<int>(values.size()) != size) {
      throw SpecError(where(section, key) + ": expected " + std::to_string(size) +
                      " value(s), found " + std::to_string(values.size()));
    }
    Vec out(size);
    for (int i = 0; i < size; ++i) out(i) = values[static_cast<std::size_t>(i)];
    return out;
  }

  const ProblemSpec& spec_;
  std::set<std::pair<std::string, std::string>> consumed_;
};

std::vector<std::string> label_range(const std::string& stem, int count) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) {
    labels.push_back(stem + std::to_string(i));
  }
  return labels;
}

std::vector<std::string> concat_labels(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& part : parts) {
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

double drift_max(const std::vector<double>& series) {
  double out = 0;
  for (double v : series) {
    out = std::max(out, std::abs(v - series.front()));
  }
  return out;
}

// Dimensions plus algebroid for the flow kinds. `structure` selects among
// coordinate (n = m), algebra (n = 0, constants in [structure]), and the
// built-in martinet chart.
struct FlowSetup {
  AlgebroidStructure structure;
  int n = 0;
  int m = 0;
};

FlowSetup build_flow_structure(SpecReader& reader, const std::set<std::string>& allowed) {
  std::string which = reader.take_str("", "structure").value_or("coordinate");
  if (!allowed.count(which)) {
    std::string names;
    for (const auto& name : allowed) {
      names += names.empty() ? name : ", " + name;
    }
    throw SpecError("structure '" + which + "' is not supported by this kind; expected one of: " +
                    names);
  }
  FlowSetup setup;
  if (which == "coordinate") {
    setup.n = reader.require_int("", "n");
    if (setup.n < 1) {
      throw SpecError("coordinate structure requires n >= 1");
    }
    auto m = reader.take_int("", "m");
    if (m && *m != setup.n) {
      throw SpecError("coordinate structure requires m = n");
    }
    setup.m = setup.n;
    setup.structure = coordinate_frame(setup.n);
    return setup;
  }
  if (which == "algebra") {
    auto n = reader.take_int("", "n");
    if (n && *n != 0) {
      throw SpecError("algebra structure requires n = 0");
    }
    setup.n = 0;
    setup.m = reader.require_int("", "m");
    if (setup.m < 1) {
      throw SpecError("algebra structure requires m >= 1");
    }
    StructureTensor constants(static_cast<std::size_t>(setup.m), Mat::Zero(setup.m, setup.m));
    std::set<std::tuple<int, int, int>> assigned;
    for (const auto& [a, b, c, value] : reader.take_constants()) {
      if (a < 1 || a > setup.m || b < 1 || b > setup.m || c < 1 || c > setup.m) {
        throw SpecError("structure constant c_" + std::to_string(a) + "_" +
                        std::to_string(b) + "_" + std::to_string(c) +
                        " has an index outside 1.." + std::to_string(setup.m));
      }
      if (a == b) {
        throw SpecError("structure constant c_" + std::to_string(a) + "_" +
                        std::to_string(b) + "_" + std::to_string(c) +
                        " must vanish (skew lower indices)");
      }
      if (assigned.count({a, b, c}) || assigned.count({b, a, c})) {
        throw SpecError("structure constant C^" + std::to_string(c) + "_" +
                        std::to_string(a) + std::to_string(b) + " assigned twice");
      }
      assigned.insert({a, b, c});
      constants[static_cast<std::size_t>(c - 1)](a - 1, b - 1) = value;
      constants[static_cast<std::size_t>(c - 1)](b - 1, a - 1) = -value;
    }
    setup.structure = lie_algebra(setup.m, std::move(constants));
    return setup;
  }
  // martinet
  auto n = reader.take_int("", "n");
  auto m = reader.take_int("", "m");
  if ((n && *n != 3) || (m && *m != 3)) {
    throw SpecError("the martinet structure is fixed at n = 3, m = 3");
  }
  setup.n = 3;
  setup.m = 3;
  setup.structure = martinet_structure();
  return setup;
}

struct FlowWindow {
  double t1 = 0;
  double dt = 0;
};

FlowWindow read_flow_window(SpecReader& reader, const RunOverrides& overrides) {
  if (overrides.steps) {
    throw SpecError("steps override does not apply to a continuous-flow kind");
  }
  FlowWindow window;
  auto t1 = reader.take_double("run", "t1");
  if (overrides.t1) t1 = *overrides.t1;
  if (!t1) {
    throw SpecError("missing required key 't1' at section [run]");
  }
  window.t1 = *t1;
  window.dt = overrides.dt.value_or(reader.take_double("run", "dt").value_or(1e-3));
  if (window.t1 <= 0 || window.dt <= 0) {
    throw SpecError("[run] t1 and dt must be positive");
  }
  return window;
}

int read_steps(SpecReader& reader, const RunOverrides& overrides) {
  if (overrides.dt || overrides.t1) {
    throw SpecError("dt/t1 overrides do not apply to a discrete-stepper kind");
  }
  auto steps = reader.take_int("run", "steps");
  if (overrides.steps) steps = *overrides.steps;
  if (!steps) {
    throw SpecError("missing required key 'steps' at section [run]");
  }
  if (*steps < 1) {
    throw SpecError("[run] steps must be at least 1");
  }
  return *steps;
}

TerminalCondition read_terminal(SpecReader& reader, int n) {
  bool free_end = reader.take_bool("terminal", "free", false);
  bool has_q = reader.has("terminal", "q");
  if (free_end == has_q) {
    throw SpecError("section [terminal] must supply exactly one of 'free = true' or 'q'");
  }
  if (free_end) {
    return TerminalCondition::free_endpoint();
  }
  return TerminalCondition::fixed(reader.require_vec("terminal", "q", n));
}

Vec read_initial_base(SpecReader& reader, const std::string& key, int n) {
  if (n == 0) {
    reader.forbid("initial", key, "the base dimension is 0");
    return Vec(0);
  }
  return reader.require_vec("initial", key, n);
}

Trajectory integrate_flow(const StateRhs& field, const Vec& q0, const Vec& y0,
                          const FlowWindow& window, std::vector<std::string> labels) {
  const int n = static_cast<int>(q0.size());
  const int m = static_cast<int>(y0.size());
  Vec x0(n + m);
  x0.head(n) = q0;
  x0.tail(m) = y0;
  OdeRhs rhs = [&field, n, m](double t, const Vec& x) {
    auto [qdot, ydot] = field(t, x.head(n), x.tail(m));
    Vec dx(n + m);
    dx.head(n) = qdot;
    dx.tail(m) = ydot;
    return dx;
  };
  return rk4(rhs, x0, 0.0, window.t1, window.dt, std::move(labels));
}

std::vector<ScalarField> read_expr_fields(SpecReader& reader, const std::string& stem,
                                          int count, int dim_a, int dim_b, char fam_a,
                                          char fam_b) {
  std::vector<ScalarField> fields;
  fields.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) {
    fields.push_back(field_from_expr(reader.require_str("", stem + std::to_string(i)),
                                     dim_a, dim_b, fam_a, fam_b));
  }
  return fields;
}

ControlField control_from_fields(std::vector<ScalarField> components, int control_dim) {
  ControlField field;
  field.control_dim = control_dim;
  field.target_dim = static_cast<int>(components.size());
  field.gamma = [components = std::move(components)](const Vec& q, const Vec& u) {
    Vec out(static_cast<int>(components.size()));
    for (std::size_t i = 0; i < components.size(); ++i) {
      out(static_cast<int>(i)) = components[i](q, u);
    }
    return out;
  };
  return field;
}

RunResult run_lagrangian_like(SpecReader& reader, const RunOverrides& overrides,
                              bool algebra_only) {
  std::set<std::string> allowed = algebra_only
                                      ? std::set<std::string>{"algebra"}
                                      : std::set<std::string>{"coordinate", "algebra",
                                                              "martinet"};
  FlowSetup setup = build_flow_structure(reader, allowed);
  ScalarField L = field_from_expr(reader.require_str("", "lagrangian"), setup.n, setup.m,
                                  'q', 'y');
  Vec q0 = read_initial_base(reader, "q", setup.n);
  Vec y0 = reader.require_vec("initial", "y", setup.m);
  FlowWindow window = read_flow_window(reader, overrides);
  reader.finish();

  StateRhs field = hamel_vector_field(setup.structure, L);
  RunResult result;
  result.index_label = "t";
  result.trajectory = integrate_flow(
      field, q0, y0, window,
      concat_labels({label_range("q", setup.n), label_range("y", setup.m)}));

  std::vector<double> energy;
  std::vector<double> momentum_norm;
  for (const Vec& x : result.trajectory.states) {
    Vec q = x.head(setup.n);
    Vec y = x.tail(setup.m);
    Vec p = L.grad_b(q, y);
    energy.push_back(p.dot(y) - L(q, y));
    momentum_norm.push_back(p.norm());
  }
  result.summary.emplace_back("energy_drift", drift_max(energy));
  if (setup.n == 0) {
    result.summary.emplace_back("momentum_norm_drift", drift_max(momentum_norm));
  }
  return result;
}

RunResult run_hamiltonian_like(SpecReader& reader, const RunOverrides& overrides,
                               bool algebra_only) {
  std::set<std::string> allowed = algebra_only
                                      ? std::set<std::string>{"algebra"}
                                      : std::set<std::string>{"coordinate", "algebra",
                                                              "martinet"};
  FlowSetup setup = build_flow_structure(reader, allowed);
  ScalarField H = field_from_expr(reader.require_str("", "hamiltonian"), setup.n, setup.m,
                                  'q', 'p');
  Vec q0 = read_initial_base(reader, "q", setup.n);
  Vec p0 = reader.require_vec("initial", "p", setup.m);
  FlowWindow window = read_flow_window(reader, overrides);
  reader.finish();

  StateRhs field = hamilton_vector_field(setup.structure, H);
  RunResult result;
  result.index_label = "t";
  result.trajectory = integrate_flow(
      field, q0, p0, window,
      concat_labels({label_range("q", setup.n), label_range("p", setup.m)}));

  std::vector<double> hamiltonian;
  std::vector<double> momentum_norm;
  for (const Vec& x : result.trajectory.states) {
    hamiltonian.push_back(H(x.head(setup.n), x.tail(setup.m)));
    momentum_norm.push_back(x.tail(setup.m).norm());
  }
  result.summary.emplace_back("hamiltonian_drift", drift_max(hamiltonian));
  if (setup.n == 0) {
    result.summary.emplace_back("momentum_norm_drift", drift_max(momentum_norm));
  }
  return result;
}

RunResult run_vakonomic(SpecReader& reader, const RunOverrides& overrides) {
  FlowSetup setup = build_flow_structure(reader, {"coordinate", "algebra", "martinet"});
  int r = reader.require_int("", "r");
  if (r < 0 || r > setup.m) {
    throw SpecError("constraint count r must lie in 0.." + std::to_string(setup.m));
  }
  int s = setup.m - r;
  ScalarField l = field_from_expr(reader.require_str("", "lagrangian"), setup.n, s, 'q', 'y');
  std::vector<ScalarField> phis = read_expr_fields(reader, "phi", r, setup.n, s, 'q', 'y');
  Vec q0 = read_initial_base(reader, "q", setup.n);
  Vec y0 = reader.require_vec("initial", "y", s);
  Vec mu0 = reader.take_vec("initial", "mu", r, Vec::Zero(r));
  FlowWindow window = read_flow_window(reader, overrides);
  reader.finish();

  ConstraintMap phi = [phis, r](const Vec& q, const Vec& y_free) {
    Vec out(r);
    for (int i = 0; i < r; ++i) {
      out(i) = phis[static_cast<std::size_t>(i)](q, y_free);
    }
    return out;
  };
  VakonomicRhs field = vakonomic_vector_field(setup.structure, l, phi, r);

  const int n = setup.n;
  Vec x0(n + s + r);
  x0.head(n) = q0;
  x0.segment(n, s) = y0;
  x0.tail(r) = mu0;
  OdeRhs rhs = [&field, n, s, r](double t, const Vec& x) {
    VakonomicState state{x.head(n), x.segment(n, s), x.tail(r)};
    VakonomicDerivative d = field(t, state);
    Vec dx(n + s + r);
    dx.head(n) = d.qdot;
    dx.segment(n, s) = d.y_free_dot;
    dx.tail(r) = d.mu_con_dot;
    return dx;
  };

  RunResult result;
  result.index_label = "t";
  result.trajectory = rk4(rhs, x0, 0.0, window.t1, window.dt,
                          concat_labels({label_range("q", n), label_range("y", s),
                                         label_range("mu", r)}));

  double multiplier_drift = 0;
  for (const Vec& x : result.trajectory.states) {
    Vec mu = x.tail(r);
    multiplier_drift =
        std::max(multiplier_drift, (mu - mu0).lpNorm<Eigen::Infinity>());
  }
  result.summary.emplace_back("multiplier_drift", r > 0 ? multiplier_drift : 0.0);
  return result;
}

RunResult run_pontryagin(SpecReader& reader, const RunOverrides& overrides) {
  FlowSetup setup = build_flow_structure(reader, {"coordinate", "algebra"});
  int k = reader.require_int("", "k");
  if (k < 1) {
    throw SpecError("pontryagin requires k >= 1 controls");
  }
  ControlField gamma = control_from_fields(
      read_expr_fields(reader, "gamma", setup.m, setup.n, k, 'q', 'u'), k);
  ScalarField cost = field_from_expr(reader.require_str("", "cost"), setup.n, k, 'q', 'u');
  Vec q0 = read_initial_base(reader, "q", setup.n);
  TerminalCondition terminal = read_terminal(reader, setup.n);
  FlowWindow window = read_flow_window(reader, overrides);
  reader.finish();

  SolverConfig config;
  config.rk_dt = window.dt;
  RunResult result;
  result.index_label = "t";
  result.trajectory =
      pontryagin_shooting(setup.structure, gamma, cost, q0, terminal, window.t1, config);

  const int n = setup.n;
  const int m = setup.m;
  std::vector<double> hamiltonian;
  for (const Vec& x : result.trajectory.states) {
    PontryaginState state{x.head(n), x.segment(n, m), x.tail(k)};
    hamiltonian.push_back(pontryagin_hamiltonian(gamma, cost, state));
  }
  result.summary.emplace_back("hamiltonian_drift", drift_max(hamiltonian));
  const Vec& last = result.trajectory.states.back();
  double terminal_defect = terminal.fixed_q
                               ? (last.head(n) - *terminal.fixed_q).lpNorm<Eigen::Infinity>()
                               : last.segment(n, m).lpNorm<Eigen::Infinity>();
  result.summary.emplace_back("terminal_defect", terminal_defect);
  return result;
}

Trajectory configs_to_trajectory(const std::vector<Vec>& configs,
                                 std::vector<std::string> labels) {
  Trajectory trajectory;
  trajectory.labels = std::move(labels);
  trajectory.times.reserve(configs.size());
  trajectory.states = configs;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    trajectory.times.push_back(static_cast<double>(k));
  }
  return trajectory;
}

RunResult run_discrete_el(SpecReader& reader, const RunOverrides& overrides,
                          bool constrained) {
  int n = reader.require_int("", "n");
  if (n < 1) {
    throw SpecError("discrete kinds require n >= 1");
  }
  ScalarField field = field_from_expr(reader.require_str("", "lagrangian_d"), n, n, 'q', 'y');
  DiscreteLagrangian Ld(n, [field](const Vec& a, const Vec& b) { return field(a, b); });

  int r = 0;
  std::vector<ScalarField> phis;
  Vec lambda = Vec(0);
  if (constrained) {
    r = reader.require_int("", "r");
    if (r < 1 || r > n) {
      throw SpecError("discrete_constrained requires 1 <= r <= n");
    }
    phis = read_expr_fields(reader, "phi", r, n, n, 'q', 'y');
    lambda = reader.take_vec("initial", "lambda", r, Vec::Zero(r));
  }

  Vec prev = reader.require_vec("initial", "q0", n);
  Vec curr = reader.require_vec("initial", "q1", n);
  int steps = read_steps(reader, overrides);
  reader.finish();

  std::vector<Vec> configs = {prev, curr};
  configs.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 1; k < steps; ++k) {
    if (constrained) {
      ConstrainedStep step = discrete_constrained_step(Ld, phis, configs[k - 1], configs[k],
                                                       lambda);
      configs.push_back(step.q_next);
      lambda = step.lambda_next;
    } else {
      configs.push_back(del_step(Ld, configs[k - 1], configs[k]));
    }
  }

  RunResult result;
  result.index_label = "k";
  result.trajectory = configs_to_trajectory(configs, label_range("q", n));

  if (constrained) {
    double constraint_max = 0;
    for (std::size_t k = 0; k + 1 < configs.size(); ++k) {
      for (const ScalarField& phi : phis) {
        constraint_max = std::max(constraint_max, std::abs(phi(configs[k], configs[k + 1])));
      }
    }
    result.summary.emplace_back("constraint_max", constraint_max);
  } else {
    std::vector<Vec> momenta;
    for (std::size_t k = 1; k < configs.size(); ++k) {
      momenta.push_back(discrete_momentum(Ld, configs[k - 1], configs[k]));
    }
    double momentum_drift = 0;
    for (const Vec& p : momenta) {
      momentum_drift =
          std::max(momentum_drift, (p - momenta.front()).lpNorm<Eigen::Infinity>());
    }
    double residual_max = 0;
    for (std::size_t k = 1; k + 1 < configs.size(); ++k) {
      residual_max = std::max(residual_max,
                              del_residual(Ld, configs[k - 1], configs[k], configs[k + 1])
                                  .lpNorm<Eigen::Infinity>());
    }
    result.summary.emplace_back("momentum_drift", momentum_drift);
    result.summary.emplace_back("residual_max", residual_max);
  }
  return result;
}

RunResult run_discrete_ocp(SpecReader& reader, const RunOverrides& overrides) {
  int n = reader.require_int("", "n");
  int k = reader.require_int("", "k");
  if (n < 1 || k < 1) {
    throw SpecError("discrete_ocp requires n >= 1 and k >= 1");
  }
  std::vector<ScalarField> gamma_fields =
      read_expr_fields(reader, "gamma_d", n, n, k, 'q', 'u');
  ControlField gamma_d = control_from_fields(gamma_fields, k);
  ScalarField cost = field_from_expr(reader.require_str("", "cost"), n, k, 'q', 'u');
  Vec q0 = reader.require_vec("initial", "q0", n);
  TerminalCondition terminal = read_terminal(reader, n);
  int steps = read_steps(reader, overrides);
  reader.finish();

  DiscreteControlSystem sys{gamma_d.gamma, cost, k};
  DiscreteOcpSolution sol = discrete_ocp_solve(sys, q0, steps, terminal);

  RunResult result;
  result.index_label = "k";
  result.trajectory = configs_to_trajectory(sol.path.configs, label_range("q", n));

  double total_cost = 0;
  double stationarity_max = 0;
  for (int j = 0; j < steps; ++j) {
    const Vec& q = sol.path.configs[static_cast<std::size_t>(j)];
    const Vec& u = sol.controls[static_cast<std::size_t>(j)];
    total_cost += cost(q, u);
    Vec h_u = control_jac_u(gamma_d, q, u).transpose() * sol.costates[static_cast<std::size_t>(j)] +
              cost.grad_b(q, u);
    stationarity_max = std::max(stationarity_max, h_u.lpNorm<Eigen::Infinity>());
  }
  result.summary.emplace_back("cost_total", total_cost);
  result.summary.emplace_back("stationarity_max", stationarity_max);
  double terminal_defect =
      terminal.fixed_q
          ? (sol.path.configs.back() - *terminal.fixed_q).lpNorm<Eigen::Infinity>()
          : sol.costates.back().lpNorm<Eigen::Infinity>();
  result.summary.emplace_back("terminal_defect", terminal_defect);
  return result;
}

RunResult run_groupoid_del(SpecReader& reader, const RunOverrides& overrides) {
  std::string which = reader.require_str("", "structure");
  GroupoidModel model;
  int n = 0;
  int m = 0;
  if (which == "pair") {
    n = reader.require_int("", "n");
    if (n < 1) {
      throw SpecError("the pair groupoid requires n >= 1");
    }
    m = n;
    model = pair_groupoid(n);
  } else if (which == "so3") {
    model = so3_group().model;
    m = 3;
  } else {
    throw SpecError("kind groupoid_del expects structure = pair or so3");
  }

  ScalarField Ld = field_from_expr(reader.require_str("", "lagrangian_d"), n, m, 'q', 'y');
  Vec q0 = read_initial_base(reader, "q0", n);
  Vec v0 = reader.require_vec("initial", "v0", m);
  int steps = read_steps(reader, overrides);
  reader.finish();

  std::vector<GroupoidElement> elements = {{q0, v0}};
  elements.reserve(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j < steps; ++j) {
    elements.push_back(groupoid_del_step(model, Ld, elements.back()));
  }

  std::vector<Vec> rows;
  rows.reserve(elements.size());
  for (const GroupoidElement& g : elements) {
    Vec row(n + m);
    row.head(n) = g.q;
    row.tail(m) = g.v;
    rows.push_back(std::move(row));
  }

  RunResult result;
  result.index_label = "k";
  result.trajectory = configs_to_trajectory(
      rows, concat_labels({label_range("q", n), label_range("v", m)}));

  double residual_max = 0;
  for (std::size_t j = 1; j < elements.size(); ++j) {
    residual_max = std::max(residual_max,
                            groupoid_del_residual(model, Ld, elements[j - 1], elements[j])
                                .lpNorm<Eigen::Infinity>());
  }
  result.summary.emplace_back("residual_max", residual_max);
  return result;
}

RunResult run_euler_poincare(SpecReader& reader, const RunOverrides& overrides) {
  std::string which = reader.require_str("", "structure");
  if (which == "algebra") {
    return run_lagrangian_like(reader, overrides, /*algebra_only=*/true);
  }
  if (which != "so3") {
    throw SpecError("kind euler_poincare expects structure = algebra or so3");
  }

  LieGroupModel group = so3_group();
  ScalarField Ld = field_from_expr(reader.require_str("", "lagrangian_d"), 0, 3, 'q', 'y');
  Vec v0 = reader.require_vec("initial", "v0", 3);
  int steps = read_steps(reader, overrides);
  reader.finish();

  std::vector<Vec> sequence = discrete_euler_poincare_solve(group, Ld, v0, steps);

  RunResult result;
  result.index_label = "k";
  result.trajectory = configs_to_trajectory(sequence, label_range("v", 3));

  std::vector<Vec> momenta;
  for (const Vec& v : sequence) {
    momenta.push_back(euler_poincare_momentum(group, Ld, v));
  }
  std::vector<double> norms;
  double update_defect = 0;
  for (std::size_t j = 0; j < momenta.size(); ++j) {
    norms.push_back(momenta[j].norm());
    if (j + 1 < momenta.size()) {
      update_defect = std::max(
          update_defect,
          (momenta[j + 1] - lie_poisson_update(group, sequence[j], momenta[j]))
              .lpNorm<Eigen::Infinity>());
    }
  }
  result.summary.emplace_back("momentum_norm_drift", drift_max(norms));
  result.summary.emplace_back("update_defect_max", update_defect);
  return result;
}

RunResult run_lie_poisson(SpecReader& reader, const RunOverrides& overrides) {
  std::string which = reader.require_str("", "structure");
  if (which == "algebra") {
    return run_hamiltonian_like(reader, overrides, /*algebra_only=*/true);
  }
  if (which != "so3") {
    throw SpecError("kind lie_poisson expects structure = algebra or so3");
  }

  LieGroupModel group = so3_group();
  Vec v = reader.require_vec("initial", "v", 3);
  Vec mu = reader.require_vec("initial", "mu", 3);
  int steps = read_steps(reader, overrides);
  reader.finish();

  std::vector<Vec> momenta = {mu};
  momenta.reserve(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j < steps; ++j) {
    momenta.push_back(lie_poisson_update(group, v, momenta.back()));
  }

  RunResult result;
  result.index_label = "k";
  result.trajectory = configs_to_trajectory(momenta, label_range("mu", 3));

  std::vector<double> norms;
  for (const Vec& p : momenta) {
    norms.push_back(p.norm());
  }
  result.summary.emplace_back("momentum_norm_drift", drift_max(norms));
  return result;
}

}  // namespace

bool ProblemSpec::has(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  return it != sections.end() && it->second.count(key) > 0;
}

const std::string& ProblemSpec::get(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  if (it != sections.end()) {
    auto entry = it->second.find(key);
    if (entry != it->second.end()) {
      return entry->second;
    }
  }
  throw SpecError("missing required key '" + key + "' at " + section_name(section));
}

ProblemSpec parse_problem(const std::string& text) {
  ProblemSpec spec;
  std::istringstream stream(text);
  std::string line;
  std::string section;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    std::string where = "line " + std::to_string(line_number);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw SpecError(where + ": malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) {
        throw SpecError(where + ": invalid section name '" + section + "'");
      }
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw SpecError(where + ": expected 'key = value', found '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      throw SpecError(where + ": invalid key '" + key + "'");
    }
    if (value.empty()) {
      throw SpecError(where + ": key '" + key + "' has an empty value");
    }
    if (!spec.sections[section].emplace(key, value).second) {
      throw SpecError(where + ": duplicate key '" + key + "' in " + section_name(section));
    }
  }
  if (!spec.has("", "kind")) {
    throw SpecError("problem description is missing the top-level 'kind' key");
  }
  return spec;
}

ProblemSpec parse_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw SpecError("cannot open problem file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_problem(buffer.str());
}

RunResult run_problem(const ProblemSpec& spec, const RunOverrides& overrides) {
  SpecReader reader(spec);
  std::string kind = reader.require_str("", "kind");
  if (kind == "lagrangian") return run_lagrangian_like(reader, overrides, false);
  if (kind == "hamiltonian") return run_hamiltonian_like(reader, overrides, false);
  if (kind == "vakonomic") return run_vakonomic(reader, overrides);
  if (kind == "pontryagin") return run_pontryagin(reader, overrides);
  if (kind == "discrete_el") return run_discrete_el(reader, overrides, false);
  if (kind == "discrete_constrained") return run_discrete_el(reader, overrides, true);
  if (kind == "discrete_ocp") return run_discrete_ocp(reader, overrides);
  if (kind == "groupoid_del") return run_groupoid_del(reader, overrides);
  if (kind == "euler_poincare") return run_euler_poincare(reader, overrides);
  if (kind == "lie_poisson") return run_lie_poisson(reader, overrides);
  throw SpecError(
      "unknown kind '" + kind +
      "'; expected one of: lagrangian, hamiltonian, vakonomic, pontryagin, discrete_el, "
      "discrete_constrained, discrete_ocp, groupoid_del, euler_poincare, lie_poisson");
}

}  // namespace gvc
