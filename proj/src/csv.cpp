#include "expint/error.hpp"
#include "expint/study.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace expint {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

long parse_long(const std::string& s) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw IoError("csv: bad integer '" + s + "'");
  }
  return v;
}

std::ifstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw IoError(path.string() + ": unexpected header");
  }
  return in;
}

std::ofstream create(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw IoError("csv: bad number '" + s + "'");
  }
  return v;
}

void emit_csv(const StudyReport& report, const std::string& prefix) {
  const std::filesystem::path rows_path = prefix + ".csv";
  const std::filesystem::path orders_path = prefix + "_orders.csv";
  {
    auto out = create(rows_path);
    out << kStudyCsvHeader << '\n';
    for (const StudyRow& r : report.rows) {
      out << method_name(r.method) << ',' << format_double(r.h) << ','
          << format_double(r.error) << ',' << format_double(r.wall_time) << ',' << r.steps
          << ',' << r.matvecs << ',' << r.rhs_evals << ',' << r.newton_iters << ','
          << r.krylov_projections << ',' << (r.diverged ? "true" : "false") << '\n';
    }
    if (!out) throw IoError("write failed: " + rows_path.string());
  }
  {
    auto out = create(orders_path);
    out << kOrdersCsvHeader << '\n';
    for (const OrderFit& o : report.orders) {
      out << method_name(o.method) << ',';
      if (o.flat) out << "flat";
      else if (o.order) out << format_double(*o.order);
      else out << "na";
      out << ',' << o.points_used << '\n';
    }
    if (!out) throw IoError("write failed: " + orders_path.string());
  }
}

std::vector<StudyRow> read_study_csv(const std::filesystem::path& path) {
  auto in = open_csv(path, kStudyCsvHeader);
  std::vector<StudyRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 10) throw IoError(path.string() + ": expected 10 fields");
    StudyRow r;
    try {
      r.method = parse_method(f[0]);
    } catch (const ConfigError& e) {
      throw IoError(path.string() + ": " + e.what());
    }
    r.h = parse_double(f[1]);
    r.error = parse_double(f[2]);
    r.wall_time = parse_double(f[3]);
    r.steps = parse_long(f[4]);
    r.matvecs = parse_long(f[5]);
    r.rhs_evals = parse_long(f[6]);
    r.newton_iters = parse_long(f[7]);
    r.krylov_projections = parse_long(f[8]);
    if (f[9] == "true") r.diverged = true;
    else if (f[9] != "false") throw IoError(path.string() + ": bad diverged flag");
    rows.push_back(r);
  }
  return rows;
}

std::vector<OrderFit> read_orders_csv(const std::filesystem::path& path) {
  auto in = open_csv(path, kOrdersCsvHeader);
  std::vector<OrderFit> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 3) throw IoError(path.string() + ": expected 3 fields");
    OrderFit o;
    try {
      o.method = parse_method(f[0]);
    } catch (const ConfigError& e) {
      throw IoError(path.string() + ": " + e.what());
    }
    if (f[1] == "flat") o.flat = true;
    else if (f[1] != "na") o.order = parse_double(f[1]);
    o.points_used = static_cast<int>(parse_long(f[2]));
    out.push_back(o);
  }
  return out;
}

}  // namespace expint
