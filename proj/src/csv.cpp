#include "gvc/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace gvc {
namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) {
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw SpecError("csv row " + std::to_string(row) + ", column " + std::to_string(col) +
                    ": '" + cell + "' is not a number");
  }
  return value;
}

}  // namespace

std::string format_full(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_csv(const std::string& path, const Trajectory& trajectory,
               const std::string& index_label) {
  validate(trajectory);
  std::ofstream out(path);
  if (!out) {
    throw SpecError("cannot open '" + path + "' for writing");
  }
  out << index_label;
  for (const std::string& label : trajectory.labels) {
    out << ',' << label;
  }
  out << '\n';
  for (std::size_t i = 0; i < trajectory.times.size(); ++i) {
    out << format_full(trajectory.times[i]);
    const Vec& state = trajectory.states[i];
    for (int j = 0; j < state.size(); ++j) {
      out << ',' << format_full(state(j));
    }
    out << '\n';
  }
  if (!out) {
    throw SpecError("write to '" + path + "' failed");
  }
}

Trajectory read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw SpecError("cannot open '" + path + "' for reading");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw SpecError("'" + path + "' is empty");
  }
  std::vector<std::string> header = split_row(line);
  if (header.empty()) {
    throw SpecError("'" + path + "' has an empty header row");
  }
  Trajectory trajectory;
  trajectory.labels.assign(header.begin() + 1, header.end());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size()) {
      throw SpecError("csv row " + std::to_string(row) + ": expected " +
                      std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    trajectory.times.push_back(parse_cell(cells[0], row, 0));
    Vec state(static_cast<int>(cells.size()) - 1);
    for (std::size_t j = 1; j < cells.size(); ++j) {
      state(static_cast<int>(j) - 1) = parse_cell(cells[j], row, j);
    }
    trajectory.states.push_back(std::move(state));
    ++row;
  }
  validate(trajectory);
  return trajectory;
}

}  // namespace gvc
