#pragma once

#include "expint/steppers.hpp"
#include "expint/study_config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace expint {

struct StudyRow {
  Method method = Method::EPIRK4;
  double h = 0.0;
  double error = 0.0;      ///< grid-L2 distance to the reference; inf if diverged
  double wall_time = 0.0;  ///< median over repetitions, seconds
  long steps = 0;
  long matvecs = 0;
  long rhs_evals = 0;
  long newton_iters = 0;
  long krylov_projections = 0;
  bool diverged = false;
  StepReport report;  ///< full counters; not serialized
  std::string failure;

  bool operator==(const StudyRow& o) const;
};

struct OrderFit {
  Method method = Method::EPIRK4;
  std::optional<double> order;  ///< set when >= 3 usable points and not flat
  bool flat = false;            ///< every finite error below the flat threshold
  int points_used = 0;

  bool operator==(const OrderFit& o) const = default;
};

struct StudyReport {
  std::string name;
  std::vector<StudyRow> rows;  ///< sorted by method, then h ascending
  std::vector<OrderFit> orders;

  const OrderFit* order_of(Method m) const;
  std::vector<const StudyRow*> rows_of(Method m) const;
};

/// Thrown when the reference integration diverges or fails.
class ReferenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// The semi-discrete system, initial state and stepper settings of a study.
OdeSystem study_system(const StudyConfig& cfg);
StateVector study_initial_state(const StudyConfig& cfg);
StepperConfig study_stepper(const StudyConfig& cfg, Method method, double h);

/// Content hash of everything the reference depends on.
std::string reference_cache_key(const StudyConfig& cfg);

/// $BENCH_CACHE_DIR, or .bench_cache in the working directory.
std::filesystem::path reference_cache_dir();

/// EPIRK4 at h_ref (or the dense exponential for linear problems),
/// cached on disk under reference_cache_dir().
StateVector reference_solution(const StudyConfig& cfg, bool use_cache = true);

/// Exact solution y0 + T phi_1(T A)(A y0 + b) of a linear study, with A and
/// b assembled from the right-hand side.
StateVector dense_linear_solution(const StudyConfig& cfg);

/// Least-squares slope of log(error) over log(h) across non-diverged rows.
OrderFit fit_order(Method method, const std::vector<const StudyRow*>& rows,
                   double flat_error);

StudyReport run_convergence(const StudyConfig& cfg);
StudyReport run_convergence(const StudyConfig& cfg, const StateVector& reference);

/// Same sweep as run_convergence but every cell runs cfg.repetitions times
/// on the calling thread; wall_time is the median.
StudyReport run_precision(const StudyConfig& cfg);
StudyReport run_precision(const StudyConfig& cfg, const StateVector& reference);

/// Dispatches on cfg.kind.
StudyReport run_study(const StudyConfig& cfg);

struct CheckResult {
  std::string description;
  bool passed = false;
  std::string detail;
};

/// Evaluates the [verify] assertions of cfg against a report.
std::vector<CheckResult> evaluate_checks(const StudyConfig& cfg, const StudyReport& report);

// CSV ----------------------------------------------------------------------

inline constexpr const char* kStudyCsvHeader =
    "method,h,error,wall_time_s,steps,matvecs,rhs_evals,newton_iters,krylov_projections,"
    "diverged";
inline constexpr const char* kOrdersCsvHeader = "method,fitted_order,points_used";

/// Shortest decimal string that parses back to the same double; "inf"/"nan"
/// for non-finite values.
std::string format_double(double x);
double parse_double(const std::string& s);

/// Writes `<prefix>.csv` and `<prefix>_orders.csv`. Throws IoError.
void emit_csv(const StudyReport& report, const std::string& prefix);

/// Reads files written by emit_csv. Throws IoError on malformed input.
std::vector<StudyRow> read_study_csv(const std::filesystem::path& path);
std::vector<OrderFit> read_orders_csv(const std::filesystem::path& path);

}  // namespace expint
