#include "expint/study.hpp"

#include "expint/densephi.hpp"
#include "expint/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace expint {

namespace {

double grid_cell_volume(const StudyConfig& cfg) {
  if (cfg.problem == ProblemKind::Diff1D) return cfg.diff1d.dx();
  const double dx = cfg.diff2d.dx();
  return dx * dx;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int method_rank(Method m) {
  const auto all = all_methods();
  return static_cast<int>(std::find(all.begin(), all.end(), m) - all.begin());
}

void sort_rows(std::vector<StudyRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const StudyRow& a, const StudyRow& b) {
    if (a.method != b.method) return method_rank(a.method) < method_rank(b.method);
    return a.h < b.h;
  });
}

constexpr char kCacheMagic[8] = {'E', 'X', 'P', 'R', 'E', 'F', '1', '\0'};

std::optional<StateVector> read_cache(const std::filesystem::path& file, Eigen::Index n) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  std::uint64_t len = 0;
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kCacheMagic)) return std::nullopt;
  if (!in.read(reinterpret_cast<char*>(&len), sizeof len) ||
      len != static_cast<std::uint64_t>(n)) {
    return std::nullopt;
  }
  StateVector v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(n * sizeof(double)))) {
    return std::nullopt;
  }
  return v;
}

void write_cache(const std::filesystem::path& file, const StateVector& v) {
  std::error_code ec;
  std::filesystem::create_directories(file.parent_path(), ec);
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return;  // an unwritable cache only costs recomputation
    const std::uint64_t len = static_cast<std::uint64_t>(v.size());
    out.write(kCacheMagic, 8);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!out) return;
  }
  std::filesystem::rename(tmp, file, ec);
}

struct CellRun {
  StudyRow row;
  StateVector y;
};

CellRun run_cell(const StudyConfig& cfg, const OdeSystem& system, const StateVector& y0,
                 const StateVector& reference, Method method, double h, int repetitions) {
  const StepperConfig sc = study_stepper(cfg, method, h);
  std::vector<double> times;
  IntegrationResult res;
  for (int r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    res = integrate(system, sc, cfg.t0, cfg.tf, y0);
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  const double median =
      times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);

  CellRun out;
  StudyRow& row = out.row;
  row.method = method;
  row.h = h;
  row.wall_time = median;
  row.report = res.report;
  row.steps = res.report.steps;
  row.matvecs = res.report.matvecs;
  row.rhs_evals = res.report.rhs_evals;
  row.newton_iters = res.report.newton_iters;
  row.krylov_projections = res.report.krylov_projections;
  row.diverged = res.diverged || res.failed;
  row.failure = res.failure;
  if (row.diverged) {
    row.error = std::numeric_limits<double>::infinity();
  } else {
    row.error = grid_l2_norm(res.y - reference, grid_cell_volume(cfg));
    if (!std::isfinite(row.error)) {
      row.diverged = true;
      row.error = std::numeric_limits<double>::infinity();
    }
  }
  out.y = std::move(res.y);
  return out;
}

StudyReport sweep(const StudyConfig& cfg, const StateVector& reference, int repetitions) {
  cfg.validate();
  const OdeSystem system = study_system(cfg);
  const StateVector y0 = study_initial_state(cfg);
  if (reference.size() != system.dim) {
    throw DimensionError("study: reference has the wrong dimension");
  }
  StudyReport report;
  report.name = cfg.name;
  for (Method m : cfg.methods) {
    for (double h : cfg.h_values) {
      report.rows.push_back(run_cell(cfg, system, y0, reference, m, h, repetitions).row);
    }
  }
  sort_rows(report.rows);
  for (Method m : all_methods()) {
    if (std::find(cfg.methods.begin(), cfg.methods.end(), m) == cfg.methods.end()) continue;
    report.orders.push_back(fit_order(m, report.rows_of(m), cfg.flat_error));
  }
  return report;
}

std::string join_methods(const std::vector<Method>& ms) {
  std::string s;
  for (Method m : ms) {
    if (!s.empty()) s += ",";
    s += method_name(m);
  }
  return s;
}

}  // namespace

bool StudyRow::operator==(const StudyRow& o) const {
  auto same = [](double a, double b) {
    return a == b || (std::isnan(a) && std::isnan(b));
  };
  return method == o.method && same(h, o.h) && same(error, o.error) &&
         same(wall_time, o.wall_time) && steps == o.steps && matvecs == o.matvecs &&
         rhs_evals == o.rhs_evals && newton_iters == o.newton_iters &&
         krylov_projections == o.krylov_projections && diverged == o.diverged;
}

const OrderFit* StudyReport::order_of(Method m) const {
  for (const auto& o : orders) {
    if (o.method == m) return &o;
  }
  return nullptr;
}

std::vector<const StudyRow*> StudyReport::rows_of(Method m) const {
  std::vector<const StudyRow*> out;
  for (const auto& r : rows) {
    if (r.method == m) out.push_back(&r);
  }
  return out;
}

OdeSystem study_system(const StudyConfig& cfg) {
  return cfg.problem == ProblemKind::Diff1D ? make_diffusion_1d(cfg.diff1d)
                                            : make_diffusion_2d(cfg.diff2d);
}

StateVector study_initial_state(const StudyConfig& cfg) {
  return cfg.problem == ProblemKind::Diff1D ? initial_state_1d(cfg.diff1d)
                                            : Diffusion2D(cfg.diff2d).initial_state();
}

StepperConfig study_stepper(const StudyConfig& cfg, Method method, double h) {
  StepperConfig sc;
  sc.method = method;
  sc.h = h;
  sc.krylov_tol = cfg.solver.krylov_tol;
  sc.krylov_m_init = cfg.solver.krylov_m_init;
  sc.krylov_m_max = cfg.solver.krylov_m_max;
  sc.newton_tol = cfg.solver.newton_tol;
  sc.newton_max_iter = cfg.solver.newton_max_iter;
  sc.gmres_tol = cfg.solver.gmres_tol;
  sc.gmres_max_iter = cfg.solver.gmres_max_iter;
  sc.use_analytic_jacobian = cfg.solver.analytic_jacobian;
  return sc;
}

std::string reference_cache_key(const StudyConfig& cfg) {
  std::ostringstream s;
  s.precision(17);
  if (cfg.problem == ProblemKind::Diff1D) {
    const auto& p = cfg.diff1d;
    s << "diff1d " << p.beta1 << ' ' << p.beta2 << ' ' << p.sigma << ' ' << p.n_elem << ' '
      << p.initial_scale;
  } else {
    const auto& p = cfg.diff2d;
    s << "diff2d " << p.kappa << ' ' << p.eps_perp << ' ' << p.beta1 << ' ' << p.beta2 << ' '
      << p.sigma << ' ' << p.n_side << ' ' << p.initial_scale;
    if (p.uniform_field) {
      s << " uniform " << (*p.uniform_field)[0] << ' ' << (*p.uniform_field)[1];
    } else {
      for (int w = 0; w < 2; ++w) {
        s << " wire " << p.field.positions[w][0] << ' ' << p.field.positions[w][1] << ' '
          << p.field.strengths[w];
      }
    }
  }
  s << " t " << cfg.t0 << ' ' << cfg.tf;
  if (cfg.reference.dense) {
    s << " dense";
  } else {
    s << " epirk4 " << cfg.reference.h_ref << ' ' << cfg.reference.krylov_tol << ' '
      << cfg.solver.krylov_m_init << ' ' << cfg.solver.krylov_m_max << ' '
      << cfg.solver.analytic_jacobian;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(s.str())));
  return buf;
}

std::filesystem::path reference_cache_dir() {
  if (const char* env = std::getenv("BENCH_CACHE_DIR"); env && *env) return env;
  return std::filesystem::current_path() / ".bench_cache";
}

StateVector dense_linear_solution(const StudyConfig& cfg) {
  const OdeSystem sys = study_system(cfg);
  const Eigen::Index n = sys.dim;
  const StateVector zero = StateVector::Zero(n);
  const StateVector b = sys.rhs(cfg.t0, zero);
  DenseMatrix a(n, n);
  StateVector e = StateVector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    a.col(j) = sys.rhs(cfg.t0, e) - b;
    e[j] = 0.0;
  }
  const double span = cfg.tf - cfg.t0;
  const std::vector<StateVector> vs = {study_initial_state(cfg), span * b};
  return phi_combination_dense(span * a, vs);
}

StateVector reference_solution(const StudyConfig& cfg, bool use_cache) {
  cfg.validate();
  const auto file = reference_cache_dir() / ("ref_" + reference_cache_key(cfg) + ".bin");
  const OdeSystem sys = study_system(cfg);
  if (use_cache) {
    if (auto cached = read_cache(file, sys.dim)) return *cached;
  }
  StateVector ref;
  if (cfg.reference.dense) {
    if (sys.dim > 1000) throw ConfigError("reference: dense reference limited to 1000 unknowns");
    ref = dense_linear_solution(cfg);
  } else {
    StepperConfig sc = study_stepper(cfg, Method::EPIRK4, cfg.reference.h_ref);
    sc.krylov_tol = cfg.reference.krylov_tol;
    const IntegrationResult res = integrate(sys, sc, cfg.t0, cfg.tf, study_initial_state(cfg));
    if (res.diverged || res.failed) {
      throw ReferenceError("reference integration diverged: " + res.failure);
    }
    ref = res.y;
  }
  if (!ref.allFinite()) throw ReferenceError("reference solution is not finite");
  if (use_cache) write_cache(file, ref);
  return ref;
}

OrderFit fit_order(Method method, const std::vector<const StudyRow*>& rows,
                   double flat_error) {
  OrderFit fit;
  fit.method = method;
  std::vector<double> lx, ly;
  bool all_small = true;
  int finite = 0;
  for (const StudyRow* r : rows) {
    if (r->diverged || !std::isfinite(r->error)) continue;
    ++finite;
    if (r->error > flat_error) all_small = false;
    if (r->error > 0.0) {
      lx.push_back(std::log(r->h));
      ly.push_back(std::log(r->error));
    }
  }
  if (finite >= 3 && all_small) {
    fit.flat = true;
    fit.points_used = finite;
    return fit;
  }
  fit.points_used = static_cast<int>(lx.size());
  if (lx.size() < 3) return fit;
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx > 0.0) fit.order = sxy / sxx;
  return fit;
}

StudyReport run_convergence(const StudyConfig& cfg, const StateVector& reference) {
  return sweep(cfg, reference, 1);
}

StudyReport run_convergence(const StudyConfig& cfg) {
  return run_convergence(cfg, reference_solution(cfg));
}

StudyReport run_precision(const StudyConfig& cfg, const StateVector& reference) {
  return sweep(cfg, reference, cfg.repetitions);
}

StudyReport run_precision(const StudyConfig& cfg) {
  return run_precision(cfg, reference_solution(cfg));
}

StudyReport run_study(const StudyConfig& cfg) {
  return cfg.kind == StudyKind::Precision ? run_precision(cfg) : run_convergence(cfg);
}

std::vector<CheckResult> evaluate_checks(const StudyConfig& cfg, const StudyReport& report) {
  std::vector<CheckResult> out;
  for (const StudyCheck& c : cfg.checks) {
    CheckResult r;
    r.description = std::string(check_kind_name(c.kind)) + " " + join_methods(c.methods);
    r.passed = true;
    std::ostringstream detail;
    for (Method m : c.methods) {
      const auto rows = report.rows_of(m);
      const std::string name(method_name(m));
      if (rows.empty()) {
        r.passed = false;
        detail << name << ": not in report; ";
        continue;
      }
      switch (c.kind) {
        case StudyCheck::Kind::Order: {
          std::ostringstream d;
          d << c.value << " +- " << c.tolerance;
          r.description += " " + d.str();
          const OrderFit* fit = report.order_of(m);
          if (!fit || !fit->order) {
            r.passed = false;
            detail << name << ": no fitted order; ";
          } else {
            detail << name << " fitted " << *fit->order << " over " << fit->points_used
                   << " points; ";
            if (std::abs(*fit->order - c.value) > c.tolerance) r.passed = false;
          }
          break;
        }
        case StudyCheck::Kind::DivergedAtLargestH: {
          // rows are sorted by ascending h
          const StudyRow* largest = rows.back();
          detail << name << (largest->diverged ? " diverged" : " finite") << " at h="
                 << largest->h << "; ";
          if (!largest->diverged) r.passed = false;
          break;
        }
        case StudyCheck::Kind::Finite: {
          for (const StudyRow* row : rows) {
            if (row->diverged) {
              r.passed = false;
              detail << name << " diverged at h=" << row->h << "; ";
            }
          }
          break;
        }
        case StudyCheck::Kind::MaxError: {
          double worst = 0.0;
          for (const StudyRow* row : rows) worst = std::max(worst, row->error);
          r.description += " <= " + format_double(c.value);
          detail << name << " max error " << worst << "; ";
          if (!(worst <= c.value)) r.passed = false;
          break;
        }
        case StudyCheck::Kind::ErrorIncreasing: {
          for (std::size_t i = 1; i < rows.size(); ++i) {
            if (!(rows[i]->error > rows[i - 1]->error)) {
              r.passed = false;
              detail << name << " error not increasing at h=" << rows[i]->h << "; ";
            }
          }
          break;
        }
        case StudyCheck::Kind::Flat: {
          const OrderFit* fit = report.order_of(m);
          if (!fit || !fit->flat) {
            r.passed = false;
            detail << name << " not flat; ";
          }
          break;
        }
      }
    }
    r.detail = detail.str();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace expint
