#include "smdp/io.hpp"

#include <cmath>
#include <cstdio>

#include "smdp/errors.hpp"

namespace smdp {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json json_number(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
  for (const auto& h : header) field(h);
  end_row();
}

void CsvWriter::separator() {
  if (in_row_ > 0) text_ += ',';
  ++in_row_;
}

CsvWriter& CsvWriter::field(const std::string& text) {
  separator();
  if (text.find_first_of(",\"\r\n") == std::string::npos) {
    text_ += text;
    return *this;
  }
  text_ += '"';
  for (char ch : text) {
    if (ch == '"') text_ += '"';
    text_ += ch;
  }
  text_ += '"';
  return *this;
}

CsvWriter& CsvWriter::field(double x) { return field(format_number(x)); }
CsvWriter& CsvWriter::field(std::size_t n) { return field(std::to_string(n)); }
CsvWriter& CsvWriter::field(int n) { return field(std::to_string(n)); }
CsvWriter& CsvWriter::field(bool b) { return field(std::string(b ? "true" : "false")); }

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw ShapeError("CSV row has the wrong number of fields");
  text_ += "\r\n";
  in_row_ = 0;
}

std::string plot_data(const std::string& x_name, const std::string& y_name,
                      const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ShapeError("plot columns differ in length");
  std::string out = "# " + x_name + " " + y_name + "\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    out += format_number(x[i]) + " " + format_number(y[i]) + "\n";
  }
  return out;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::vector<std::string> header{"t"};
  for (Eigen::Index j = 1; j <= trajectory.modes(); ++j) {
    header.push_back("re_" + std::to_string(j));
    header.push_back("im_" + std::to_string(j));
  }
  CsvWriter csv(header);
  for (std::size_t k = 0; k <= trajectory.steps(); ++k) {
    csv.field(trajectory.time(k));
    const auto state = trajectory.state(k);
    for (Eigen::Index j = 0; j < trajectory.modes(); ++j) {
      csv.field(state[j].real()).field(state[j].imag());
    }
    csv.end_row();
  }
  return csv.str();
}

}  // namespace smdp
