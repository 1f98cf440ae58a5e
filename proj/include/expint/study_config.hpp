#pragma once

#include "expint/problems.hpp"
#include "expint/tableau.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace expint {

enum class ProblemKind { Diff1D, Diff2D };
enum class StudyKind { Convergence, Precision };

struct ReferenceSpec {
  bool dense = false;  ///< dense matrix exponential (linear problems only)
  double h_ref = 0.0;
  double krylov_tol = 1e-12;
};

struct SolverTolerances {
  double krylov_tol = 1e-10;
  int krylov_m_init = 10;
  int krylov_m_max = 128;
  double newton_tol = 1e-10;
  int newton_max_iter = 20;
  double gmres_tol = 1e-8;
  int gmres_max_iter = 200;
  bool analytic_jacobian = true;
};

/// One assertion from the [verify] section.
struct StudyCheck {
  enum class Kind { Order, DivergedAtLargestH, Finite, MaxError, ErrorIncreasing, Flat };
  Kind kind;
  std::vector<Method> methods;
  double value = 0.0;
  double tolerance = 0.0;
  std::string source;  ///< "file:line" for messages
};

struct StudyConfig {
  std::string name = "study";
  StudyKind kind = StudyKind::Convergence;
  ProblemKind problem = ProblemKind::Diff1D;
  Diffusion1DParams diff1d;
  Diffusion2DParams diff2d;
  double t0 = 0.0;
  double tf = 0.1;
  std::vector<Method> methods;
  std::vector<double> h_values;  ///< strictly decreasing
  ReferenceSpec reference;
  SolverTolerances solver;
  std::string output_prefix;
  int repetitions = 1;
  double flat_error = 1e-8;
  std::vector<StudyCheck> checks;

  /// Enforces the sweep invariants. Throws ConfigError.
  void validate() const;
};

/// Parses the `[section]` / `key = value` study format. `overrides` are
/// "section.key=value" strings applied on top of the file contents.
StudyConfig parse_study(std::istream& in, const std::string& source_name,
                        const std::vector<std::string>& overrides = {});

/// Reads and parses a study file. Throws IoError if it cannot be opened.
StudyConfig load_study(const std::filesystem::path& path,
                       const std::vector<std::string>& overrides = {});

/// True when (tf - t0) / h is an integer up to a few ulps.
bool step_tiles_interval(double span, double h);

std::string_view check_kind_name(StudyCheck::Kind kind);

}  // namespace expint
