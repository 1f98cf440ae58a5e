#include "expint/tableau.hpp"

#include "expint/error.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <string>

namespace expint {

namespace {

constexpr std::array<Method, 9> kMethods = {
    Method::FE,  Method::RK2,    Method::RK3SSP, Method::RK4,   Method::BE,
    Method::SDIRK2, Method::SDIRK3, Method::EPI2, Method::EPIRK4};

ButcherTableau make(std::string name, std::initializer_list<double> a,
                    std::initializer_list<double> b, int order) {
  ButcherTableau t;
  t.name = std::move(name);
  const auto s = static_cast<Eigen::Index>(b.size());
  t.a.resize(s, s);
  auto it = a.begin();
  for (Eigen::Index i = 0; i < s; ++i)
    for (Eigen::Index j = 0; j < s; ++j) t.a(i, j) = *it++;
  t.b.resize(s);
  std::copy(b.begin(), b.end(), t.b.data());
  t.c = t.a.rowwise().sum();
  t.order = order;
  t.validate();
  return t;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::EPI2: return "EPI2";
    case Method::EPIRK4: return "EPIRK4";
    case Method::FE: return "FE";
    case Method::RK2: return "RK2";
    case Method::RK3SSP: return "RK3SSP";
    case Method::RK4: return "RK4";
    case Method::BE: return "BE";
    case Method::SDIRK2: return "SDIRK2";
    case Method::SDIRK3: return "SDIRK3";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string upper;
  for (char ch : name) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  for (Method m : kMethods) {
    if (method_name(m) == upper) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::span<const Method> all_methods() { return kMethods; }

MethodFamily method_family(Method m) {
  switch (m) {
    case Method::EPI2:
    case Method::EPIRK4: return MethodFamily::Exponential;
    case Method::FE:
    case Method::RK2:
    case Method::RK3SSP:
    case Method::RK4: return MethodFamily::Explicit;
    default: return MethodFamily::Implicit;
  }
}

int nominal_order(Method m) {
  switch (m) {
    case Method::FE:
    case Method::BE: return 1;
    case Method::RK2:
    case Method::SDIRK2:
    case Method::EPI2: return 2;
    case Method::RK3SSP:
    case Method::SDIRK3: return 3;
    case Method::RK4:
    case Method::EPIRK4: return 4;
  }
  return 0;
}

bool ButcherTableau::is_explicit() const {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i; j < a.cols(); ++j)
      if (a(i, j) != 0.0) return false;
  return true;
}

bool ButcherTableau::is_diagonally_implicit() const {
  if (a.rows() == 0 || a(0, 0) == 0.0) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a(i, i) != a(0, 0)) return false;
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      if (a(i, j) != 0.0) return false;
  }
  return true;
}

void ButcherTableau::validate() const {
  if (a.rows() != a.cols() || a.rows() != b.size() || b.size() != c.size()) {
    throw ConfigError(name + ": inconsistent tableau shapes");
  }
  if (std::abs(b.sum() - 1.0) > 1e-14) {
    throw ConfigError(name + ": weights do not sum to one");
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (std::abs(a.row(i).sum() - c(i)) > 1e-14) {
      throw ConfigError(name + ": abscissa " + std::to_string(i) +
                        " violates row-sum condition");
    }
  }
}

ButcherTableau tableau_for(Method m) {
  switch (m) {
    case Method::FE:
      return make("FE", {0.0}, {1.0}, 1);
    case Method::RK2:  // explicit midpoint
      return make("RK2", {0.0, 0.0, 0.5, 0.0}, {0.0, 1.0}, 2);
    case Method::RK3SSP:  // Shu-Osher
      return make("RK3SSP", {0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.25, 0.25, 0.0},
                  {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}, 3);
    case Method::RK4:
      return make("RK4",
                  {0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0,
                   0.0, 0.0, 1.0, 0.0},
                  {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0}, 4);
    case Method::BE:
      return make("BE", {1.0}, {1.0}, 1);
    case Method::SDIRK2: {  // L-stable, stiffly accurate
      const double g = 1.0 - 1.0 / std::sqrt(2.0);
      return make("SDIRK2", {g, 0.0, 1.0 - g, g}, {1.0 - g, g}, 2);
    }
    case Method::SDIRK3: {  // A-stable, order 3
      const double g = (3.0 + std::sqrt(3.0)) / 6.0;
      return make("SDIRK3", {g, 0.0, 1.0 - 2.0 * g, g}, {0.5, 0.5}, 3);
    }
    case Method::EPI2:
    case Method::EPIRK4:
      break;
  }
  throw ConfigError(std::string(method_name(m)) +
                    " is an exponential method without a Butcher tableau");
}

}  // namespace expint
