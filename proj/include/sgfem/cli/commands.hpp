#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "sgfem/analysis.hpp"
#include "sgfem/cli/config.hpp"
#include "sgfem/cli/output.hpp"
#include "sgfem/sgfem.hpp"

namespace sgfem::cli {

/// Worker count: SGFEM_THREADS if set and positive, else hardware threads.
inline int worker_count() {
  if (const char* env = std::getenv("SGFEM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs task(i) for i in [0, n) on a small pool. Results must be stored by
/// index; the exception of the lowest failing index is rethrown.
inline void run_parallel(std::size_t n, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  auto body = [&](std::atomic<std::size_t>& next) {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::atomic<std::size_t> next{0};
  if (workers <= 1) {
    body(next);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body, std::ref(next));
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::string method_name(Method m) { return std::string(to_string(m)); }

namespace detail {

inline void require_single(const RunConfig& cfg, std::vector<Method>& methods, int& p, int& n) {
  methods = cfg.has("methods") ? cfg.methods : std::vector<Method>{Method::Sgfem};
  const std::vector<int> orders = cfg.has("orders") ? cfg.orders : std::vector<int>{1};
  const std::vector<int> sizes = cfg.has("mesh-sizes") ? cfg.mesh_sizes : std::vector<int>{100};
  if (methods.size() != 1 || orders.size() != 1 || sizes.size() != 1) {
    throw Error(ErrorCode::InvalidArgument, "solve takes a single method, order and mesh size");
  }
  p = orders.front();
  n = sizes.front();
}

inline void require_reference(const Problem& prob, const std::string& what) {
  if (!prob.reference) {
    throw Error(ErrorCode::InvalidArgument, what + " needs a reference solution (set manufactured-poly)");
  }
}

inline ConstrainedOptions constrained_options(const RunConfig& cfg) {
  ConstrainedOptions o;
  o.rel_tol = cfg.tol;
  o.max_iter = cfg.max_iter;
  o.jacobian = cfg.jacobian;
  return o;
}

inline SolveOptions newton_options(const RunConfig& cfg) {
  SolveOptions o;
  o.tol = cfg.tol;
  o.max_iter = cfg.max_iter;
  return o;
}

/// Rates table rows for one series: pairwise slopes on data rows, then a
/// "fit" row with the least-squares slopes.
struct SeriesData {
  std::vector<int> n;
  std::vector<double> h;
  std::vector<double> l2;
  std::vector<double> h1;
};

}  // namespace detail

struct SolveSummary {
  std::filesystem::path solution_csv;
  std::filesystem::path report_txt;
  SolveReport report;
  int dofs = 0;
  std::size_t rows = 0;
};

/// Single solve; writes solution.csv and report.txt.
inline SolveSummary cmd_solve(const RunConfig& cfg) {
  std::vector<Method> methods;
  int p = 0;
  int n = 0;
  detail::require_single(cfg, methods, p, n);
  const Problem prob = build_problem(cfg);
  const auto space = make_space(Mesh::uniform(prob.length, n, prob.interfaces), p, methods.front());

  std::optional<DiscreteSolution> uh;
  SolveReport report;
  std::optional<LceResult> lce_info;
  if (cfg.constrained) {
    const auto cvs = build_control_volumes(space->mesh(), cfg.control_volumes);
    auto opts = detail::constrained_options(cfg);
    opts.estimate_condition = true;
    auto res = constrained_newton(space, prob.model, prob.source, cvs, opts);
    ensure_converged(res.report, "constrained Newton");
    lce_info = lce(res.solution, prob.model, prob.source, cvs);
    uh = std::move(res.solution);
    report = res.report;
  } else {
    auto opts = detail::newton_options(cfg);
    opts.estimate_condition = true;
    auto res = newton_solve(space, prob.model, prob.source, opts);
    ensure_converged(res.report, "Newton");
    uh = std::move(res.solution);
    report = res.report;
  }

  struct Sample {
    double x;
    Side side;
  };
  std::vector<Sample> samples;
  const double L = prob.length;
  for (int i = 0; i < 1000; ++i) samples.push_back({L * i / 999.0, Side::Right});
  samples.back().x = L;
  for (double x : space->mesh().nodes()) samples.push_back({x, Side::Right});
  for (double g : prob.interfaces) {
    samples.push_back({g, Side::Left});
    samples.push_back({g, Side::Right});
  }
  for (auto& s : samples) {
    if (s.x == L) s.side = Side::Left;
  }
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    return std::tie(a.x, a.side) < std::tie(b.x, b.side);
  });
  samples.erase(std::unique(samples.begin(), samples.end(),
                            [](const Sample& a, const Sample& b) { return a.x == b.x && a.side == b.side; }),
                samples.end());

  CsvTable csv({"x", "u_h", "u_ref", "du_h", "du_ref"});
  for (const auto& s : samples) {
    const auto v = uh->eval(s.x, s.side);
    std::optional<ReferenceSolution::Value> r;
    if (prob.reference) r = (*prob.reference)(s.x, s.side);
    csv.add({fmt(s.x), fmt(v.u), r ? fmt(r->u) : "", fmt(v.du), r ? fmt(r->du) : ""});
  }

  std::string rep;
  rep += "problem: " + std::string(to_string(cfg.problem)) + "\n";
  rep += "method: " + method_name(methods.front()) + "\n";
  rep += "order: " + std::to_string(p) + "\n";
  rep += "elements: " + std::to_string(n) + "\n";
  rep += "dofs: " + std::to_string(space->dim()) + "\n";
  rep += "constrained: " + std::string(cfg.constrained ? "true" : "false") + "\n";
  rep += "iterations: " + std::to_string(report.iterations) + "\n";
  rep += "final_residual: " + fmt(report.final_residual_inf) + "\n";
  rep += "tolerance: " + fmt(report.tolerance) + "\n";
  rep += "converged: " + std::string(report.converged ? "true" : "false") + "\n";
  rep += "condition_estimate: " + fmt(report.condition_estimate) + "\n";
  if (lce_info) rep += "max_abs_lce: " + fmt(lce_info->max_abs) + "\n";
  if (prob.reference) {
    const auto err = error_norms(*uh, *prob.reference);
    rep += "error_l2: " + fmt(err.l2) + "\n";
    rep += "error_h1: " + fmt(err.h1_semi) + "\n";
  }

  const std::filesystem::path out(cfg.output);
  SolveSummary summary{out / "solution.csv", out / "report.txt", report, space->dim(), csv.size()};
  write_file(summary.solution_csv, csv.str());
  write_file(summary.report_txt, rep);
  return summary;
}

struct ConvergenceCell {
  Method method;
  int p;
  int n;
  double h;
  double err_l2;
  double err_h1;
  SolveReport report;
};

struct ConvergenceSummary {
  std::vector<ConvergenceCell> cells;
  /// LS slopes per (method, p): {l2, h1}.
  std::vector<std::tuple<Method, int, double, double>> fits;
};

/// Error study over methods x orders x mesh sizes; writes rates.csv,
/// h1.svg and l2.svg.
inline ConvergenceSummary cmd_convergence(const RunConfig& cfg) {
  if (cfg.mesh_sizes.size() < 3) {
    throw Error(ErrorCode::InsufficientData, "convergence needs at least 3 mesh sizes");
  }
  const Problem prob = build_problem(cfg);
  detail::require_reference(prob, "convergence");
  check_grid(cfg, prob);

  std::vector<std::tuple<Method, int, int>> grid;
  for (Method m : cfg.methods) {
    for (int p : cfg.orders) {
      for (int n : cfg.mesh_sizes) grid.emplace_back(m, p, n);
    }
  }
  ConvergenceSummary summary;
  summary.cells.resize(grid.size());
  run_parallel(grid.size(), [&](std::size_t i) {
    const auto [m, p, n] = grid[i];
    const auto space = make_space(Mesh::uniform(prob.length, n, prob.interfaces), p, m);
    auto res = newton_solve(space, prob.model, prob.source, detail::newton_options(cfg));
    ensure_converged(res.report, "Newton (" + method_name(m) + ", p=" + std::to_string(p) + ", N=" +
                                     std::to_string(n) + ")");
    const auto err = error_norms(res.solution, *prob.reference, false);
    summary.cells[i] = {m, p, n, space->mesh().h(), err.l2, err.h1_semi, res.report};
  });

  CsvTable csv({"method", "p", "N", "h", "err_l2", "err_h1", "slope_l2", "slope_h1"});
  std::vector<PlotSeries> h1_plot;
  std::vector<PlotSeries> l2_plot;
  const std::size_t per = cfg.mesh_sizes.size();
  for (std::size_t s = 0; s * per < summary.cells.size(); ++s) {
    std::vector<double> h, l2, h1;
    for (std::size_t k = 0; k < per; ++k) {
      const auto& c = summary.cells[s * per + k];
      h.push_back(c.h);
      l2.push_back(c.err_l2);
      h1.push_back(c.err_h1);
    }
    const RateFit fl2 = fit_rates(h, l2);
    const RateFit fh1 = fit_rates(h, h1);
    const auto& first = summary.cells[s * per];
    for (std::size_t k = 0; k < per; ++k) {
      const auto& c = summary.cells[s * per + k];
      csv.add({method_name(c.method), std::to_string(c.p), std::to_string(c.n), fmt(c.h), fmt(c.err_l2),
               fmt(c.err_h1), k ? fmt(fl2.pairwise[k - 1]) : "", k ? fmt(fh1.pairwise[k - 1]) : ""});
    }
    csv.add({method_name(first.method), std::to_string(first.p), "fit", "", "", "", fmt(fl2.slope), fmt(fh1.slope)});
    summary.fits.emplace_back(first.method, first.p, fl2.slope, fh1.slope);
    const std::string label = method_name(first.method) + " p=" + std::to_string(first.p);
    const bool dashed = first.method == Method::Fem;
    h1_plot.push_back({label, h, h1, fh1.slope, dashed});
    l2_plot.push_back({label, h, l2, fl2.slope, dashed});
  }
  const std::filesystem::path out(cfg.output);
  const std::string name(to_string(cfg.problem));
  write_file(out / "rates.csv", csv.str());
  write_file(out / "h1.svg", loglog_svg(name + ": H1-seminorm error", "h", "|u - u_h|_1", h1_plot));
  write_file(out / "l2.svg", loglog_svg(name + ": L2 error", "h", "||u - u_h||", l2_plot));
  return summary;
}

struct ConservationCell {
  Method method;
  int p;
  int n;
  double h;
  LceResult lce_unconstrained;
  LceResult lce_constrained;
  std::vector<Interval> volumes;
  std::optional<ErrorReport> err_unconstrained;
  std::optional<ErrorReport> err_constrained;
  std::optional<double> err_l2_corrected;
  SolveReport report;
};

struct ConservationSummary {
  std::vector<ConservationCell> cells;
};

/// Unconstrained vs locally conservative solves; writes lce.csv,
/// lce_mean.csv, rates_lc.csv and plots.
inline ConservationSummary cmd_conservation(const RunConfig& cfg) {
  const Problem prob = build_problem(cfg);
  check_grid(cfg, prob);
  const std::vector<Method> methods = cfg.has("methods") ? cfg.methods : std::vector<Method>{Method::Sgfem};
  const std::vector<int> orders = cfg.has("orders") ? cfg.orders : std::vector<int>{1, 2, 3};

  std::vector<std::tuple<Method, int, int>> grid;
  for (Method m : methods) {
    for (int p : orders) {
      for (int n : cfg.mesh_sizes) grid.emplace_back(m, p, n);
    }
  }
  ConservationSummary summary;
  summary.cells.resize(grid.size());
  run_parallel(grid.size(), [&](std::size_t i) {
    const auto [m, p, n] = grid[i];
    const auto space = make_space(Mesh::uniform(prob.length, n, prob.interfaces), p, m);
    const auto cvs = build_control_volumes(space->mesh(), cfg.control_volumes);
    auto plain = newton_solve(space, prob.model, prob.source, detail::newton_options(cfg));
    ensure_converged(plain.report, "Newton");
    auto lc = constrained_newton(space, prob.model, prob.source, cvs, detail::constrained_options(cfg));
    ensure_converged(lc.report, "constrained Newton (" + method_name(m) + ", p=" + std::to_string(p) + ", N=" +
                                    std::to_string(n) + ")");
    ConservationCell cell{m, p, n, space->mesh().h(), lce(plain.solution, prob.model, prob.source, cvs),
                          lce(lc.solution, prob.model, prob.source, cvs), cvs.volumes, std::nullopt, std::nullopt,
                          std::nullopt, lc.report};
    if (prob.reference) {
      cell.err_unconstrained = error_norms(plain.solution, *prob.reference, false);
      cell.err_constrained = error_norms(lc.solution, *prob.reference, false);
      cell.err_l2_corrected = lambda_corrected_l2(lc.solution, lc.multipliers, cvs, *prob.reference);
    }
    summary.cells[i] = std::move(cell);
  });

  CsvTable lce_csv({"method", "p", "N", "volume", "t_l", "t_r", "lce_unconstrained", "lce_constrained"});
  CsvTable mean_csv({"method", "p", "N", "h", "mean_lce_unconstrained", "mean_lce_constrained",
                     "max_lce_unconstrained", "max_lce_constrained"});
  for (const auto& c : summary.cells) {
    for (std::size_t t = 0; t < c.volumes.size(); ++t) {
      lce_csv.add({method_name(c.method), std::to_string(c.p), std::to_string(c.n), std::to_string(t),
                   fmt(c.volumes[t].left), fmt(c.volumes[t].right), fmt(c.lce_unconstrained.values[t]),
                   fmt(c.lce_constrained.values[t])});
    }
    mean_csv.add({method_name(c.method), std::to_string(c.p), std::to_string(c.n), fmt(c.h),
                  fmt(c.lce_unconstrained.mean_abs), fmt(c.lce_constrained.mean_abs),
                  fmt(c.lce_unconstrained.max_abs), fmt(c.lce_constrained.max_abs)});
  }

  CsvTable rates({"method", "variant", "p", "N", "h", "err_l2", "err_h1", "slope_l2", "slope_h1"});
  std::vector<PlotSeries> mean_plot, l2_plot, h1_plot;
  const std::size_t per = cfg.mesh_sizes.size();
  const bool can_fit = per >= 3;
  for (std::size_t s = 0; s * per < summary.cells.size(); ++s) {
    const auto& first = summary.cells[s * per];
    const std::string base = method_name(first.method) + " p=" + std::to_string(first.p);
    std::vector<double> h, mu, mc;
    for (std::size_t k = 0; k < per; ++k) {
      const auto& c = summary.cells[s * per + k];
      h.push_back(c.h);
      mu.push_back(c.lce_unconstrained.mean_abs);
      mc.push_back(c.lce_constrained.mean_abs);
    }
    mean_plot.push_back({base, h, mu, std::nullopt, false});
    mean_plot.push_back({base + " LC", h, mc, std::nullopt, true});
    if (!prob.reference) continue;
    struct Variant {
      std::string name;
      std::vector<double> l2;
      std::vector<double> h1;
    };
    std::vector<Variant> variants{{"unconstrained", {}, {}}, {"lc", {}, {}}, {"lc-lambda", {}, {}}};
    for (std::size_t k = 0; k < per; ++k) {
      const auto& c = summary.cells[s * per + k];
      variants[0].l2.push_back(c.err_unconstrained->l2);
      variants[0].h1.push_back(c.err_unconstrained->h1_semi);
      variants[1].l2.push_back(c.err_constrained->l2);
      variants[1].h1.push_back(c.err_constrained->h1_semi);
      variants[2].l2.push_back(*c.err_l2_corrected);
    }
    for (const auto& v : variants) {
      const bool has_h1 = !v.h1.empty();
      std::optional<RateFit> fl2, fh1;
      if (can_fit) {
        fl2 = fit_rates(h, v.l2);
        if (has_h1) fh1 = fit_rates(h, v.h1);
      }
      for (std::size_t k = 0; k < per; ++k) {
        const auto& c = summary.cells[s * per + k];
        rates.add({method_name(c.method), v.name, std::to_string(c.p), std::to_string(c.n), fmt(c.h), fmt(v.l2[k]),
                   has_h1 ? fmt(v.h1[k]) : "", (fl2 && k) ? fmt(fl2->pairwise[k - 1]) : "",
                   (fh1 && k) ? fmt(fh1->pairwise[k - 1]) : ""});
      }
      if (can_fit) {
        rates.add({method_name(first.method), v.name, std::to_string(first.p), "fit", "", "", "", fmt(fl2->slope),
                   fh1 ? fmt(fh1->slope) : ""});
      }
      const std::string label = base + (v.name == "unconstrained" ? "" : v.name == "lc" ? " LC" : " LC-lambda");
      const std::optional<double> sl2 = fl2 ? std::optional<double>(fl2->slope) : std::nullopt;
      l2_plot.push_back({label, h, v.l2, sl2, v.name != "unconstrained"});
      if (has_h1) {
        h1_plot.push_back({label, h, v.h1, fh1 ? std::optional<double>(fh1->slope) : std::nullopt,
                           v.name != "unconstrained"});
      }
    }
  }
  const std::filesystem::path out(cfg.output);
  const std::string name(to_string(cfg.problem));
  write_file(out / "lce.csv", lce_csv.str());
  write_file(out / "lce_mean.csv", mean_csv.str());
  write_file(out / "rates_lc.csv", rates.str());
  write_file(out / "lce_mean.svg", loglog_svg(name + ": mean absolute LCE", "h", "mean |LCE|", mean_plot));
  if (prob.reference) {
    write_file(out / "l2_lc.svg", loglog_svg(name + ": L2 error with local conservation", "h", "L2 error", l2_plot));
    write_file(out / "h1_lc.svg",
               loglog_svg(name + ": H1-seminorm error with local conservation", "h", "H1 error", h1_plot));
  }
  return summary;
}

struct InterpCell {
  int p;
  int n;
  double h;
  ErrorReport standard;
  ErrorReport enriched;
};

struct InterpSummary {
  std::vector<InterpCell> cells;
};

/// Interpolation errors of the reference for the standard and enriched
/// interpolants; writes interp_rates.csv.
inline InterpSummary cmd_interp_study(const RunConfig& cfg) {
  const Problem prob = build_problem(cfg);
  detail::require_reference(prob, "interp-study");
  check_grid(cfg, prob);
  std::vector<std::pair<int, int>> grid;
  for (int p : cfg.orders) {
    for (int n : cfg.mesh_sizes) grid.emplace_back(p, n);
  }
  InterpSummary summary;
  summary.cells.resize(grid.size());
  run_parallel(grid.size(), [&](std::size_t i) {
    const auto [p, n] = grid[i];
    const auto space = make_space(Mesh::uniform(prob.length, n, prob.interfaces), p, Method::Sgfem);
    summary.cells[i] = {p, n, space->mesh().h(), error_norms(standard_interpolant(space, *prob.reference), *prob.reference),
                        error_norms(enriched_interpolant(space, *prob.reference), *prob.reference)};
  });
  CsvTable csv({"p", "N", "h", "std_h1", "std_w16", "enr_h1", "enr_w16"});
  const std::size_t per = cfg.mesh_sizes.size();
  for (std::size_t s = 0; s * per < summary.cells.size(); ++s) {
    std::vector<double> h, sh1, sw, eh1, ew;
    for (std::size_t k = 0; k < per; ++k) {
      const auto& c = summary.cells[s * per + k];
      csv.add({std::to_string(c.p), std::to_string(c.n), fmt(c.h), fmt(c.standard.h1_semi), fmt(c.standard.w16_semi),
               fmt(c.enriched.h1_semi), fmt(c.enriched.w16_semi)});
      h.push_back(c.h);
      sh1.push_back(c.standard.h1_semi);
      sw.push_back(*c.standard.w16_semi);
      eh1.push_back(c.enriched.h1_semi);
      ew.push_back(*c.enriched.w16_semi);
    }
    if (per >= 3) {
      csv.add({std::to_string(summary.cells[s * per].p), "fit", "", fmt(fit_rates(h, sh1).slope),
               fmt(fit_rates(h, sw).slope), fmt(fit_rates(h, eh1).slope), fmt(fit_rates(h, ew).slope)});
    }
  }
  write_file(std::filesystem::path(cfg.output) / "interp_rates.csv", csv.str());
  return summary;
}

}  // namespace sgfem::cli
