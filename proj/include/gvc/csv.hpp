#pragma once

#include <string>

#include "gvc/types.hpp"

namespace gvc {

// Shortest decimal form that round-trips to the same double.
std::string format_full(double value);

// Writes "index_label,label1,...\n" then one row per sample, every number in
// full round-trip precision. Throws SpecError when the file cannot be opened
// or the trajectory fails validate().
void write_csv(const std::string& path, const Trajectory& trajectory,
               const std::string& index_label = "t");

// Inverse of write_csv: first header cell is discarded, remaining cells become
// labels, first column becomes times. Throws SpecError on malformed content.
Trajectory read_csv(const std::string& path);

}  // namespace gvc
