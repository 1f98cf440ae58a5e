#pragma once

#include "expint/numcore.hpp"

#include <span>
#include <string>
#include <string_view>

namespace expint {

enum class Method { EPI2, EPIRK4, FE, RK2, RK3SSP, RK4, BE, SDIRK2, SDIRK3 };

enum class MethodFamily { Exponential, Explicit, Implicit };

std::string_view method_name(Method m);

/// Parses a method name (case-insensitive). Throws ConfigError.
Method parse_method(std::string_view name);

std::span<const Method> all_methods();

MethodFamily method_family(Method m);

/// Classical order of accuracy.
int nominal_order(Method m);

struct ButcherTableau {
  std::string name;
  DenseMatrix a;
  StateVector b;
  StateVector c;
  int order = 0;

  int stages() const { return static_cast<int>(b.size()); }
  bool is_explicit() const;
  /// Lower triangular with a constant nonzero diagonal.
  bool is_diagonally_implicit() const;
  double gamma() const { return a(0, 0); }

  /// Checks sum(b) = 1 and c_i = sum_j a_ij. Throws ConfigError.
  void validate() const;
};

/// Tableau of a Runge-Kutta method; throws ConfigError for exponential ones.
ButcherTableau tableau_for(Method m);

}  // namespace expint
