#include "expint/study_config.hpp"

#include "expint/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace expint {

namespace {

struct Entry {
  std::string value;
  std::string where;  // "file:line" or "--set"
  bool used = false;
};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class EntryMap {
 public:
  void set(const std::string& key, std::string value, std::string where) {
    entries_[key] = Entry{std::move(value), std::move(where)};
  }

  const Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  std::vector<std::pair<std::string, Entry*>> with_prefix(const std::string& prefix) {
    std::vector<std::pair<std::string, Entry*>> out;
    for (auto& [k, e] : entries_) {
      if (k.rfind(prefix, 0) == 0) {
        e.used = true;
        out.emplace_back(k.substr(prefix.size()), &e);
      }
    }
    return out;
  }

  void reject_unused() const {
    for (const auto& [k, e] : entries_) {
      if (!e.used) throw ConfigError(e.where + ": unknown key '" + k + "'");
    }
  }

 private:
  std::map<std::string, Entry> entries_;
};

double to_double(const Entry& e, const std::string& key) {
  const std::string v = trim(e.value);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(e.where + ": '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

int to_int(const Entry& e, const std::string& key) {
  const std::string v = trim(e.value);
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(e.where + ": '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const Entry& e, const std::string& key) {
  const std::string v = lower(trim(e.value));
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(e.where + ": '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<double> to_doubles(const Entry& e, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(e.value)) {
    out.push_back(to_double(Entry{item, e.where}, key));
  }
  return out;
}

std::vector<Method> to_methods(const Entry& e, const std::string& key) {
  std::vector<Method> out;
  for (const auto& item : split_list(e.value)) {
    try {
      out.push_back(parse_method(item));
    } catch (const ConfigError& err) {
      throw ConfigError(e.where + ": '" + key + "': " + err.what());
    }
  }
  return out;
}

Vec2 to_point(const Entry& e, const std::string& key) {
  const auto v = to_doubles(e, key);
  if (v.size() != 2) throw ConfigError(e.where + ": '" + key + "' expects two numbers");
  return {v[0], v[1]};
}

template <typename T, typename Fn>
void read(EntryMap& map, const std::string& key, T& target, Fn convert) {
  if (const Entry* e = map.find(key)) target = convert(*e, key);
}

StudyCheck parse_check(const std::string& key, const Entry& e) {
  StudyCheck check;
  check.source = e.where;
  const auto dot = key.find('.');
  const std::string head = key.substr(0, dot);
  const std::string tail = dot == std::string::npos ? "" : key.substr(dot + 1);
  auto single_method = [&] {
    if (tail.empty()) throw ConfigError(e.where + ": '" + key + "' needs a method suffix");
    return std::vector<Method>{parse_method(tail)};
  };
  if (head == "order") {
    check.kind = StudyCheck::Kind::Order;
    check.methods = single_method();
    const std::string v = e.value;
    const auto pm = v.find("+-");
    if (pm == std::string::npos) {
      throw ConfigError(e.where + ": order check expects '<order> +- <tolerance>'");
    }
    check.value = to_double(Entry{v.substr(0, pm), e.where}, key);
    check.tolerance = to_double(Entry{v.substr(pm + 2), e.where}, key);
  } else if (head == "max_error") {
    check.kind = StudyCheck::Kind::MaxError;
    check.methods = single_method();
    check.value = to_double(e, key);
  } else if (head == "diverged_at_largest_h") {
    check.kind = StudyCheck::Kind::DivergedAtLargestH;
    check.methods = to_methods(e, key);
  } else if (head == "finite") {
    check.kind = StudyCheck::Kind::Finite;
    check.methods = to_methods(e, key);
  } else if (head == "error_increasing") {
    check.kind = StudyCheck::Kind::ErrorIncreasing;
    check.methods = to_methods(e, key);
  } else if (head == "flat") {
    check.kind = StudyCheck::Kind::Flat;
    check.methods = to_methods(e, key);
  } else {
    throw ConfigError(e.where + ": unknown verify key '" + key + "'");
  }
  return check;
}

}  // namespace

std::string_view check_kind_name(StudyCheck::Kind kind) {
  switch (kind) {
    case StudyCheck::Kind::Order: return "order";
    case StudyCheck::Kind::DivergedAtLargestH: return "diverged_at_largest_h";
    case StudyCheck::Kind::Finite: return "finite";
    case StudyCheck::Kind::MaxError: return "max_error";
    case StudyCheck::Kind::ErrorIncreasing: return "error_increasing";
    case StudyCheck::Kind::Flat: return "flat";
  }
  return "?";
}

bool step_tiles_interval(double span, double h) {
  const double q = span / h;
  const double nearest = std::round(q);
  return nearest >= 1.0 &&
         std::abs(q - nearest) <= 8.0 * std::numeric_limits<double>::epsilon() * nearest;
}

void StudyConfig::validate() const {
  if (!(tf > t0)) throw ConfigError("study: need tf > t0");
  if (methods.empty() && checks.empty() && h_values.empty()) {
    // A header-only study is allowed but must still be well-formed below.
  }
  if (h_values.empty()) throw ConfigError("study: no step sizes given");
  for (std::size_t i = 0; i < h_values.size(); ++i) {
    if (!(h_values[i] > 0.0)) throw ConfigError("study: step sizes must be positive");
    if (i > 0 && !(h_values[i] < h_values[i - 1])) {
      throw ConfigError("study: h_values must be strictly decreasing");
    }
    if (!step_tiles_interval(tf - t0, h_values[i])) {
      throw ConfigError("study: h = " + std::to_string(h_values[i]) +
                        " does not divide tf - t0");
    }
  }
  if (!reference.dense) {
    if (!(reference.h_ref > 0.0)) throw ConfigError("reference: h_ref must be positive");
    if (reference.h_ref > h_values.back() / 20.0 * (1.0 + 1e-12)) {
      throw ConfigError("reference: h_ref must be <= min(h_values) / 20");
    }
    if (!step_tiles_interval(tf - t0, reference.h_ref)) {
      throw ConfigError("reference: h_ref does not divide tf - t0");
    }
  } else if (problem == ProblemKind::Diff1D ? diff1d.beta2 != 0.0 : diff2d.beta2 != 0.0) {
    throw ConfigError("reference: dense reference requires a linear problem (beta2 = 0)");
  }
  if (repetitions < 1) throw ConfigError("study: repetitions must be >= 1");
  if (problem == ProblemKind::Diff1D) diff1d.validate();
  else diff2d.validate();
}

StudyConfig parse_study(std::istream& in, const std::string& source_name,
                        const std::vector<std::string>& overrides) {
  EntryMap map;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source_name + ":" + std::to_string(line_no);
    const auto hash = line.find('#');
    std::string text = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where + ": malformed section header");
      section = lower(trim(text.substr(1, text.size() - 2)));
      static const std::set<std::string> known = {"study", "problem", "reference",
                                                  "solver", "verify"};
      if (!known.count(section)) {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const std::string key = trim(text.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    map.set(section + "." + key, trim(text.substr(eq + 1)), where);
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || ov.find('.') > eq) {
      throw ConfigError("--set " + ov + ": expected section.key=value");
    }
    map.set(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)), "--set " + ov);
  }

  StudyConfig cfg;
  read(map, "study.name", cfg.name, [](const Entry& e, const std::string&) { return e.value; });
  if (const Entry* e = map.find("study.kind")) {
    const std::string v = lower(e->value);
    if (v == "convergence") cfg.kind = StudyKind::Convergence;
    else if (v == "precision") cfg.kind = StudyKind::Precision;
    else throw ConfigError(e->where + ": kind must be convergence or precision");
  }
  const Entry* type = map.find("problem.type");
  if (!type) throw ConfigError(source_name + ": missing problem.type");
  {
    const std::string v = lower(type->value);
    if (v == "diff1d") cfg.problem = ProblemKind::Diff1D;
    else if (v == "diff2d") cfg.problem = ProblemKind::Diff2D;
    else throw ConfigError(type->where + ": problem.type must be diff1d or diff2d");
  }
  cfg.tf = cfg.problem == ProblemKind::Diff1D ? 0.1 : 0.05;
  read(map, "study.t0", cfg.t0, to_double);
  read(map, "study.tf", cfg.tf, to_double);
  read(map, "study.methods", cfg.methods, to_methods);
  read(map, "study.repetitions", cfg.repetitions, to_int);
  read(map, "study.output", cfg.output_prefix,
       [](const Entry& e, const std::string&) { return e.value; });
  read(map, "study.flat_error", cfg.flat_error, to_double);

  const Entry* h_entry = map.find("study.h_values");
  const Entry* steps_entry = map.find("study.steps");
  if (h_entry && steps_entry) {
    throw ConfigError(steps_entry->where + ": give either h_values or steps, not both");
  }
  if (h_entry) cfg.h_values = to_doubles(*h_entry, "study.h_values");
  if (steps_entry) {
    for (double n : to_doubles(*steps_entry, "study.steps")) {
      if (!(n >= 1.0) || n != std::floor(n)) {
        throw ConfigError(steps_entry->where + ": steps must be positive integers");
      }
      cfg.h_values.push_back((cfg.tf - cfg.t0) / n);
    }
  }

  if (cfg.problem == ProblemKind::Diff1D) {
    auto& p = cfg.diff1d;
    read(map, "problem.beta1", p.beta1, to_double);
    read(map, "problem.beta2", p.beta2, to_double);
    read(map, "problem.sigma", p.sigma, to_double);
    read(map, "problem.n_elem", p.n_elem, to_int);
    read(map, "problem.initial_scale", p.initial_scale, to_double);
  } else {
    auto& p = cfg.diff2d;
    read(map, "problem.kappa", p.kappa, to_double);
    read(map, "problem.eps_perp", p.eps_perp, to_double);
    read(map, "problem.beta1", p.beta1, to_double);
    read(map, "problem.beta2", p.beta2, to_double);
    read(map, "problem.sigma", p.sigma, to_double);
    read(map, "problem.n_side", p.n_side, to_int);
    read(map, "problem.initial_scale", p.initial_scale, to_double);
    read(map, "problem.wire1", p.field.positions[0], to_point);
    read(map, "problem.wire2", p.field.positions[1], to_point);
    read(map, "problem.strength1", p.field.strengths[0], to_double);
    read(map, "problem.strength2", p.field.strengths[1], to_double);
    if (const Entry* e = map.find("problem.uniform_field")) {
      p.uniform_field = to_point(*e, "problem.uniform_field");
    }
  }

  if (const Entry* e = map.find("reference.method")) {
    const std::string v = lower(e->value);
    if (v == "dense") cfg.reference.dense = true;
    else if (v != "epirk4") {
      throw ConfigError(e->where + ": reference.method must be EPIRK4 or dense");
    }
  }
  read(map, "reference.h_ref", cfg.reference.h_ref, to_double);
  if (const Entry* e = map.find("reference.steps")) {
    cfg.reference.h_ref = (cfg.tf - cfg.t0) / to_int(*e, "reference.steps");
  }
  read(map, "reference.krylov_tol", cfg.reference.krylov_tol, to_double);

  auto& s = cfg.solver;
  read(map, "solver.krylov_tol", s.krylov_tol, to_double);
  read(map, "solver.krylov_m_init", s.krylov_m_init, to_int);
  read(map, "solver.krylov_m_max", s.krylov_m_max, to_int);
  read(map, "solver.newton_tol", s.newton_tol, to_double);
  read(map, "solver.newton_max_iter", s.newton_max_iter, to_int);
  read(map, "solver.gmres_tol", s.gmres_tol, to_double);
  read(map, "solver.gmres_max_iter", s.gmres_max_iter, to_int);
  read(map, "solver.analytic_jacobian", s.analytic_jacobian, to_bool);

  for (auto& [key, entry] : map.with_prefix("verify.")) {
    cfg.checks.push_back(parse_check(key, *entry));
  }

  map.reject_unused();
  cfg.validate();
  return cfg;
}

StudyConfig load_study(const std::filesystem::path& path,
                       const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open study file " + path.string());
  return parse_study(in, path.string(), overrides);
}

}  // namespace expint
