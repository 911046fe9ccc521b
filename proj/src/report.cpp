#include "harnack_lab/report.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace hlab {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::json numbers_to_json(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(number_to_json(x));
  return a;
}

std::vector<double> numbers_from_json(const nlohmann::json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(number_from_json(x));
  return v;
}

}  // namespace

bool ReportDocument::failed() const {
  for (const auto& c : checks) {
    if (!c.pass) return true;
  }
  return false;
}

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json-lines" || s == "jsonl") return Format::json_lines;
  if (s == "plotdata") return Format::plotdata;
  throw std::invalid_argument("unknown format '" + s + "' (csv, json-lines, plotdata)");
}

const char* extension(Format f) {
  switch (f) {
    case Format::csv: return "csv";
    case Format::json_lines: return "jsonl";
    case Format::plotdata: return "plot";
  }
  return "out";
}

nlohmann::json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw std::invalid_argument("expected a number, got " + v.dump());
}

void write_csv(std::ostream& out, const ReportDocument& r) {
  out << "experiment,instance_id,seed,n,nu,S,resolution_h,resolution_tau,name,value,flag\n";
  for (const auto& row : r.rows) {
    out << csv_field(row.experiment) << ',' << row.instance_id << ',' << row.seed << ',' << row.n << ','
        << fmt(row.nu) << ',' << fmt(row.S) << ',' << fmt(row.resolution_h) << ',' << fmt(row.resolution_tau) << ','
        << csv_field(row.name) << ',' << fmt(row.value) << ',' << csv_field(row.flag) << '\n';
  }
}

void write_json_lines(std::ostream& out, const ReportDocument& r) {
  out << nlohmann::json{{"kind", "config"}, {"experiment", r.experiment}, {"config", r.config}}.dump() << '\n';
  for (const auto& row : r.rows) {
    nlohmann::json j{{"kind", "row"},
                     {"experiment", row.experiment},
                     {"instance_id", row.instance_id},
                     {"seed", row.seed},
                     {"n", row.n},
                     {"nu", number_to_json(row.nu)},
                     {"S", number_to_json(row.S)},
                     {"resolution_h", number_to_json(row.resolution_h)},
                     {"resolution_tau", number_to_json(row.resolution_tau)},
                     {"name", row.name},
                     {"value", number_to_json(row.value)},
                     {"flag", row.flag}};
    out << j.dump() << '\n';
  }
  for (const auto& e : r.estimates) {
    nlohmann::json j{{"kind", "estimate"},
                     {"name", e.name},
                     {"value", number_to_json(e.value)},
                     {"min", number_to_json(e.min)},
                     {"median", number_to_json(e.median)},
                     {"max", number_to_json(e.max)},
                     {"count", e.count},
                     {"skipped", e.skipped},
                     {"n", e.n},
                     {"nu", number_to_json(e.nu)},
                     {"S", number_to_json(e.S)},
                     {"mu", number_to_json(e.mu)},
                     {"h", number_to_json(e.h)},
                     {"tau", number_to_json(e.tau)},
                     {"flags", e.flags}};
    out << j.dump() << '\n';
  }
  for (const auto& c : r.curves) {
    out << nlohmann::json{{"kind", "curve"}, {"name", c.name}, {"x", numbers_to_json(c.x)}, {"y", numbers_to_json(c.y)}}
               .dump()
        << '\n';
  }
  for (const auto& c : r.checks) {
    out << nlohmann::json{{"kind", "check"}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}}.dump() << '\n';
  }
  out << nlohmann::json{{"kind", "provenance"}, {"provenance", r.provenance}}.dump() << '\n';
}

ReportDocument read_json_lines(std::istream& in) {
  ReportDocument r;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument("json-lines line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "config") {
      r.experiment = j.at("experiment").get<std::string>();
      r.config = j.at("config");
    } else if (kind == "row") {
      ReportRow row;
      row.experiment = j.at("experiment").get<std::string>();
      row.instance_id = j.at("instance_id").get<int>();
      row.seed = j.at("seed").get<std::uint64_t>();
      row.n = j.at("n").get<int>();
      row.nu = number_from_json(j.at("nu"));
      row.S = number_from_json(j.at("S"));
      row.resolution_h = number_from_json(j.at("resolution_h"));
      row.resolution_tau = number_from_json(j.at("resolution_tau"));
      row.name = j.at("name").get<std::string>();
      row.value = number_from_json(j.at("value"));
      row.flag = j.at("flag").get<std::string>();
      r.rows.push_back(row);
    } else if (kind == "estimate") {
      ConstantEstimate e;
      e.name = j.at("name").get<std::string>();
      e.value = number_from_json(j.at("value"));
      e.min = number_from_json(j.at("min"));
      e.median = number_from_json(j.at("median"));
      e.max = number_from_json(j.at("max"));
      e.count = j.at("count").get<int>();
      e.skipped = j.at("skipped").get<int>();
      e.n = j.at("n").get<int>();
      e.nu = number_from_json(j.at("nu"));
      e.S = number_from_json(j.at("S"));
      e.mu = number_from_json(j.at("mu"));
      e.h = number_from_json(j.at("h"));
      e.tau = number_from_json(j.at("tau"));
      e.flags = j.at("flags").get<std::vector<std::string>>();
      r.estimates.push_back(e);
    } else if (kind == "curve") {
      r.curves.push_back({j.at("name").get<std::string>(), numbers_from_json(j.at("x")), numbers_from_json(j.at("y"))});
    } else if (kind == "check") {
      r.checks.push_back({j.at("name").get<std::string>(), j.at("pass").get<bool>(), j.at("detail").get<std::string>()});
    } else if (kind == "provenance") {
      r.provenance = j.at("provenance");
    } else {
      throw std::invalid_argument("json-lines line " + std::to_string(lineno) + ": unknown kind '" + kind + "'");
    }
  }
  return r;
}

void write_plotdata(std::ostream& out, const ReportDocument& r) {
  for (const auto& c : r.curves) {
    out << "# curve " << c.name << '\n';
    for (std::size_t i = 0; i < c.x.size() && i < c.y.size(); ++i) out << fmt(c.x[i]) << ' ' << fmt(c.y[i]) << '\n';
    out << '\n';
  }
}

std::string emit(const ReportDocument& r, Format f, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::string path = (std::filesystem::path(dir) / (r.experiment + "." + extension(f))).string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  switch (f) {
    case Format::csv: write_csv(out, r); break;
    case Format::json_lines: write_json_lines(out, r); break;
    case Format::plotdata: write_plotdata(out, r); break;
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
  return path;
}

void write_grid_function(std::ostream& out, const GridFunction& u) {
  const SpaceTimeGrid& g = *u.grid;
  const auto& b = g.bounds();
  // run lengths of the active mask, starting with an active run
  std::vector<std::size_t> runs;
  std::uint8_t cur = 1;
  std::size_t len = 0;
  for (auto a : g.active_mask()) {
    if ((a != 0) == (cur != 0)) {
      ++len;
    } else {
      runs.push_back(len);
      cur = a ? 1 : 0;
      len = 1;
    }
  }
  runs.push_back(len);
  nlohmann::json head{{"dim", b.dim},
                      {"lo", {b.lo[0], b.lo[1]}},
                      {"hi", {b.hi[0], b.hi[1]}},
                      {"t0", b.t0},
                      {"t1", b.t1},
                      {"h", g.h()},
                      {"tau", g.tau()},
                      {"nodes", g.size()},
                      {"active_runs", runs}};
  out << head.dump() << '\n';
  for (double v : u.values) out << fmt(v) << '\n';
}

GridFunction read_grid_function(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("grid file: missing header");
  const auto head = nlohmann::json::parse(line);
  SpaceTimeBox b;
  b.dim = head.at("dim").get<int>();
  b.lo = {head.at("lo")[0].get<double>(), head.at("lo")[1].get<double>()};
  b.hi = {head.at("hi")[0].get<double>(), head.at("hi")[1].get<double>()};
  b.t0 = head.at("t0").get<double>();
  b.t1 = head.at("t1").get<double>();
  const auto nodes = head.at("nodes").get<std::size_t>();
  std::vector<std::uint8_t> active;
  active.reserve(nodes);
  std::uint8_t cur = 1;
  for (auto len : head.at("active_runs").get<std::vector<std::size_t>>()) {
    active.insert(active.end(), len, cur);
    cur ^= 1;
  }
  if (active.size() != nodes) throw std::invalid_argument("grid file: active mask length mismatch");
  auto grid = std::make_shared<const SpaceTimeGrid>(classify_nodes(
      SpaceTimeGrid::unclassified(b, head.at("h").get<double>(), head.at("tau").get<double>(), std::move(active))));
  if (grid->size() != nodes) throw std::invalid_argument("grid file: node count mismatch");
  GridFunction u(grid, 0.0);
  for (std::size_t i = 0; i < nodes; ++i) {
    if (!std::getline(in, line)) throw std::invalid_argument("grid file: truncated values");
    u[i] = number_from_json(nlohmann::json(line == "nan" || line == "inf" || line == "-inf"
                                               ? nlohmann::json(line)
                                               : nlohmann::json::parse(line)));
  }
  return u;
}

}  // namespace hlab
