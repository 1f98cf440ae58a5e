// bench: convergence and precision sweeps over the diffusion test problems.

#include "expint/error.hpp"
#include "expint/study.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

enum Exit { kOk = 0, kConfig = 1, kIo = 2, kNumeric = 3 };

void print_summary(const expint::StudyReport& report) {
  std::printf("%-8s %12s %14s %10s %8s %9s\n", "method", "h", "error", "wall[s]", "steps",
              "matvecs");
  for (const auto& r : report.rows) {
    std::printf("%-8s %12.5g %14.6g %10.4f %8ld %9ld%s\n",
                std::string(expint::method_name(r.method)).c_str(), r.h, r.error, r.wall_time,
                r.steps, r.matvecs, r.diverged ? "  diverged" : "");
  }
  for (const auto& o : report.orders) {
    const std::string name(expint::method_name(o.method));
    if (o.flat) std::printf("order %-8s flat (%d points)\n", name.c_str(), o.points_used);
    else if (o.order) std::printf("order %-8s %.3f (%d points)\n", name.c_str(), *o.order, o.points_used);
    else std::printf("order %-8s n/a (%d points)\n", name.c_str(), o.points_used);
  }
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const expint::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const expint::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const expint::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential integrator benchmark harness"};
  app.require_subcommand(1);

  std::string study_file;
  std::string out_prefix;
  std::vector<std::string> overrides;

  auto* run = app.add_subcommand("run", "Run a study and write CSV output");
  run->add_option("study", study_file, "Study file")->required();
  run->add_option("--out", out_prefix, "Output prefix (default: study output key)");
  run->add_option("--set", overrides, "Override as section.key=value");

  auto* list = app.add_subcommand("list-methods", "List available integrators");

  auto* verify = app.add_subcommand("verify", "Run a study and check its [verify] section");
  verify->add_option("study", study_file, "Study file")->required();
  verify->add_option("--set", overrides, "Override as section.key=value");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (auto m : expint::all_methods()) {
      std::printf("%-8s order %d\n", std::string(expint::method_name(m)).c_str(),
                  expint::nominal_order(m));
    }
    return kOk;
  }

  if (run->parsed()) {
    return guarded([&] {
      const auto cfg = expint::load_study(study_file, overrides);
      const auto report = expint::run_study(cfg);
      print_summary(report);
      std::string prefix = out_prefix.empty() ? cfg.output_prefix : out_prefix;
      if (prefix.empty()) prefix = cfg.name;
      expint::emit_csv(report, prefix);
      std::printf("wrote %s.csv and %s_orders.csv\n", prefix.c_str(), prefix.c_str());
      return static_cast<int>(kOk);
    });
  }

  return guarded([&] {
    const auto cfg = expint::load_study(study_file, overrides);
    const auto report = expint::run_study(cfg);
    print_summary(report);
    bool ok = true;
    for (const auto& c : expint::evaluate_checks(cfg, report)) {
      std::printf("%s  %s  %s\n", c.passed ? "PASS" : "FAIL", c.description.c_str(),
                  c.detail.c_str());
      ok = ok && c.passed;
    }
    return static_cast<int>(ok ? kOk : kNumeric);
  });
}
