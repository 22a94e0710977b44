#pragma once

// CSV I/O and cross-seed statistics.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace homeo {

/// Version tag written as the first comment line of every CSV this project emits.
inline constexpr const char* kCsvSchema = "# homeo-csv v1";

struct MeanCI {
  int n = 0;
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// Mean and two-sided 95% Student-t interval; NaNs are skipped. With fewer
/// than two values the interval collapses to the mean.
MeanCI mean_ci95(std::span<const double> values);

double sample_variance(std::span<const double> values);

/// Shortest round-trip decimal form; "nan" for NaN.
std::string format_number(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws std::out_of_range if the column does not exist.
  int column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

/// Skips '#' comment lines. Throws std::runtime_error for a missing file, an
/// empty table or ragged rows.
CsvTable read_csv(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace homeo
