#pragma once

// Standalone SVG renderings of experiment CSVs. Figures are a pure function of
// the raw per-seed files, so re-running overwrites them with identical bytes.

#include <filesystem>
#include <string>
#include <vector>

namespace homeo {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> low;
  std::vector<double> high;
};

struct Bar {
  std::string label;
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<Series>& series);
std::string render_bar_chart(const std::string& title, const std::string& y_label,
                             const std::vector<Bar>& bars);

/// Reads <input>/<condition>/seed_*/{train,eval}.csv and writes
/// learning_curve.svg plus one bars_<metric>.svg per evaluation metric into
/// output (defaults to input). Throws std::runtime_error when no metrics exist.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& input,
                                              const std::filesystem::path& output = {});

}  // namespace homeo
