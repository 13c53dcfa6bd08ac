#pragma once

#include <string>
#include <vector>

namespace peat::harness {

// Renders one metric of one or more training logs as a self-contained SVG
// line chart (x = environment steps, one polyline per log, legend, labeled
// axes). Throws std::invalid_argument for an unknown metric (the message
// lists valid names) and std::runtime_error for empty logs; nothing is
// written on error.
void write_line_chart(const std::string& out_path, const std::vector<std::string>& log_files,
                      const std::string& metric);

// The chart body, exposed for tests.
std::string render_line_chart(const std::vector<std::string>& log_files,
                              const std::string& metric);

}  // namespace peat::harness
