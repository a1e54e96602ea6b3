#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gvc/catalog.hpp"
#include "gvc/checks.hpp"
#include "gvc/csv.hpp"
#include "gvc/problem.hpp"
#include "gvc/types.hpp"

namespace {

int run_command(const std::string& spec_path, const std::string& catalog_name,
                std::string out_path, const gvc::RunOverrides& overrides) {
  gvc::ProblemSpec spec;
  std::string name;
  if (!catalog_name.empty()) {
    const gvc::CatalogEntry* entry = gvc::find_catalog(catalog_name);
    if (entry == nullptr) {
      throw gvc::SpecError("unknown catalog problem '" + catalog_name +
                           "'; run `gvc list` for the available names");
    }
    spec = gvc::parse_problem(entry->text);
    name = entry->name;
  } else {
    spec = gvc::parse_problem_file(spec_path);
    name = std::filesystem::path(spec_path).stem().string();
  }
  if (out_path.empty()) {
    out_path = name + ".csv";
  }

  const gvc::RunResult result = gvc::run_problem(spec, overrides);
  gvc::write_csv(out_path, result.trajectory, result.index_label);
  std::printf("wrote %s (%zu rows)\n", out_path.c_str(), result.trajectory.times.size());
  for (const auto& [key, value] : result.summary) {
    std::printf("%s = %s\n", key.c_str(), gvc::format_full(value).c_str());
  }
  return 0;
}

int check_command(const std::string& pattern) {
  const std::vector<gvc::CheckResult> results = gvc::run_invariant_checks(pattern);
  if (results.empty()) {
    std::printf("no checks match '%s'\n", pattern.c_str());
    return 0;
  }
  int failures = 0;
  for (const gvc::CheckResult& result : results) {
    if (result.passed) {
      std::printf("   ok  %s\n", result.name.c_str());
    } else {
      ++failures;
      std::printf(" FAIL  %s: %s\n", result.name.c_str(), result.detail.c_str());
    }
  }
  std::printf("%zu checks, %d failed\n", results.size(), failures);
  return failures == 0 ? 0 : 1;
}

int list_command() {
  for (const gvc::CatalogEntry& entry : gvc::catalog()) {
    std::printf("%-26s %s\n", entry.name.c_str(), entry.description.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational flows and steppers on skew-symmetric algebroids"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string catalog_name;
  std::string out_path;
  std::optional<double> dt_override;
  std::optional<double> t1_override;
  std::optional<int> steps_override;

  CLI::App* run =
      app.add_subcommand("run", "integrate one problem and write its trajectory as CSV");
  run->add_option("spec", spec_path, "problem description file");
  run->add_option("--catalog", catalog_name, "use a named catalog problem instead of a file");
  run->add_option("--out", out_path, "output CSV path (default: <problem>.csv)");
  run->add_option("--dt", dt_override, "time-step override for continuous problems");
  run->add_option("--t1", t1_override, "final-time override for continuous problems");
  run->add_option("--steps", steps_override, "step-count override for discrete problems");

  std::string only_pattern;
  CLI::App* check = app.add_subcommand("check", "run the invariant suite");
  check->add_option("--only", only_pattern,
                    "run only checks whose name contains this substring");

  app.add_subcommand("list", "list the catalog problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      if (spec_path.empty() == catalog_name.empty()) {
        std::fprintf(stderr, "error: pass exactly one of a spec file or --catalog NAME\n");
        return 2;
      }
      gvc::RunOverrides overrides;
      overrides.dt = dt_override;
      overrides.t1 = t1_override;
      overrides.steps = steps_override;
      return run_command(spec_path, catalog_name, out_path, overrides);
    }
    if (check->parsed()) {
      return check_command(only_pattern);
    }
    return list_command();
  } catch (const gvc::SpecError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const gvc::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const gvc::InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const gvc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
