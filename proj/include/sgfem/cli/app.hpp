#pragma once

#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgfem/cli/commands.hpp"
#include "sgfem/cli/config.hpp"

namespace sgfem::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

inline int exit_code_for(ErrorCode code) {
  return is_configuration_error(code) ? kExitConfig : kExitNumerical;
}

inline void print_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << "error: code=" << code << " message=" << message << '\n';
}

inline std::string key_help(const std::string& key) {
  static const std::map<std::string, std::string> help{
      {"problem", "example1 | example2 | custom"},
      {"params", "coefficient parameters a_i, comma-separated"},
      {"methods", "fem, sgfem (comma-separated)"},
      {"orders", "polynomial orders in 1..4"},
      {"mesh-sizes", "element counts, strictly increasing"},
      {"control-volumes", "dual-midpoint | per-subdomain | whole-domain"},
      {"jacobian", "constrained Newton Jacobian: modified | exact"},
      {"tol", "Newton tolerance (absolute; relative for constrained solves)"},
      {"max-iter", "Newton iteration cap"},
      {"output", "output directory"},
      {"seed", "seed for randomized diagnostics"},
      {"interfaces", "custom: interface points"},
      {"kappa-scale", "custom: kappa scale per subdomain"},
      {"kappa-rate", "custom: kappa exponent rate per subdomain"},
      {"source-poly", "custom: source polynomial coefficients, constant first"},
      {"manufactured-poly", "custom: manufactured solution coefficients, constant first"},
      {"length", "custom: domain length"}};
  auto it = help.find(key);
  return it == help.end() ? std::string() : it->second;
}

/// Full command line: `sgfem <command> [--config FILE] [--key value ...]`.
/// Flags override keys read from the config file.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Stable generalized FEM for 1D quasilinear interface problems", "sgfem"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    std::string config;
    std::map<std::string, std::string> flags;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"solve", "Single solve; writes solution.csv and report.txt"},
      {"convergence", "Error and rate study; writes rates.csv, h1.svg, l2.svg"},
      {"conservation", "Local conservation study; writes lce.csv, lce_mean.csv, rates_lc.csv"},
      {"interp-study", "Interpolation error study; writes interp_rates.csv"}};
  for (const auto& [name, help] : commands) {
    auto sub = std::make_unique<Sub>();
    sub->app = app.add_subcommand(name, help);
    sub->app->add_option("--config", sub->config, "key = value settings file")->check(CLI::ExistingFile);
    for (const auto& key : known_keys()) {
      if (key == "constrained") {
        sub->app->add_flag("--constrained{true}", sub->flags[key], "enforce local conservation");
      } else {
        sub->app->add_option("--" + key, sub->flags[key], key_help(key));
      }
    }
    subs.push_back(std::move(sub));
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "InvalidArgument", e.what());
    return kExitConfig;
  }

  try {
    for (const auto& s : subs) {
      if (!s->app->parsed()) continue;
      RawConfig raw;
      if (!s->config.empty()) raw = parse_config_file(s->config);
      for (const auto& [key, value] : s->flags) {
        if (s->app->count("--" + key) > 0) set_key(raw, key, value);
      }
      const RunConfig cfg = build_config(raw);
      const std::string name = s->app->get_name();
      if (name == "solve") {
        const auto r = cmd_solve(cfg);
        out << "wrote " << r.solution_csv.string() << " (" << r.rows << " rows) and " << r.report_txt.string()
            << "; " << r.report.iterations << " iterations\n";
      } else if (name == "convergence") {
        const auto r = cmd_convergence(cfg);
        for (const auto& [m, p, sl2, sh1] : r.fits) {
          out << method_name(m) << " p=" << p << ": slope_l2=" << fmt(sl2) << " slope_h1=" << fmt(sh1) << '\n';
        }
      } else if (name == "conservation") {
        const auto r = cmd_conservation(cfg);
        for (const auto& c : r.cells) {
          out << method_name(c.method) << " p=" << c.p << " N=" << c.n
              << ": max_lce_unconstrained=" << fmt(c.lce_unconstrained.max_abs)
              << " max_lce_constrained=" << fmt(c.lce_constrained.max_abs) << '\n';
        }
      } else {
        const auto r = cmd_interp_study(cfg);
        out << "wrote interp_rates.csv (" << r.cells.size() << " cells)\n";
      }
    }
  } catch (const Error& e) {
    print_error(err, std::string(to_string(e.code())), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    print_error(err, "Internal", e.what());
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace sgfem::cli
