#pragma once

// Report documents and their emitters: CSV rows, json-lines records and
// two-column plot data. Also the gridded-data file format.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "harnack_lab/estimators.hpp"
#include "harnack_lab/geometry.hpp"

namespace hlab {

struct ReportRow {
  std::string experiment;
  int instance_id = 0;
  std::uint64_t seed = 0;
  int n = 1;
  double nu = 0.0;
  double S = 0.0;
  double resolution_h = 0.0;
  double resolution_tau = 0.0;
  std::string name;
  double value = 0.0;
  std::string flag;
};

struct Curve {
  std::string name;
  std::vector<double> x, y;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ReportDocument {
  std::string experiment;
  nlohmann::json config = nlohmann::json::object();
  std::vector<ReportRow> rows;
  std::vector<ConstantEstimate> estimates;
  std::vector<Curve> curves;
  std::vector<Check> checks;
  /// version, timestamp, seed
  nlohmann::json provenance = nlohmann::json::object();

  bool failed() const;
};

enum class Format { csv, json_lines, plotdata };
Format parse_format(const std::string& s);
const char* extension(Format f);

void write_csv(std::ostream& out, const ReportDocument& r);
void write_json_lines(std::ostream& out, const ReportDocument& r);
void write_plotdata(std::ostream& out, const ReportDocument& r);
/// Inverse of write_json_lines.
ReportDocument read_json_lines(std::istream& in);

/// Writes <dir>/<experiment>.<ext>; throws std::runtime_error when the path is unwritable.
std::string emit(const ReportDocument& r, Format f, const std::string& dir);

/// Non-finite values travel as the strings "inf", "-inf", "nan".
nlohmann::json number_to_json(double v);
double number_from_json(const nlohmann::json& v);

/// Gridded data: one JSON header line (bounds, h, tau, active mask as run lengths) then one
/// value per line in node order.
void write_grid_function(std::ostream& out, const GridFunction& u);
GridFunction read_grid_function(std::istream& in);

}  // namespace hlab
