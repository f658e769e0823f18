#pragma once

// Output plumbing: RFC-4180 CSV, two-column plot files and JSON numbers that
// survive infinities.

#include <string>
#include <vector>

#include <json.hpp>

#include "smdp/trajectory.hpp"

namespace smdp {

/// Shortest text that reads back to the same double ("%.17g"), with "inf",
/// "-inf" and "nan" for the special values.
std::string format_number(double x);

/// Finite values as numbers, +-inf as the strings "inf"/"-inf", NaN as null.
nlohmann::json json_number(double x);

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  CsvWriter& field(const std::string& text);
  CsvWriter& field(double x);
  CsvWriter& field(std::size_t n);
  CsvWriter& field(int n);
  CsvWriter& field(bool b);
  void end_row();
  const std::string& str() const noexcept { return text_; }

 private:
  void separator();
  std::string text_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

/// Whitespace-separated "x y" lines under a '#' comment naming the columns.
std::string plot_data(const std::string& x_name, const std::string& y_name,
                      const std::vector<double>& x, const std::vector<double>& y);

/// Table t, re_1, im_1, ..., re_J, im_J.
std::string trajectory_csv(const Trajectory& trajectory);

}  // namespace smdp
