#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sgfem/assembly.hpp"
#include "sgfem/basis.hpp"
#include "sgfem/error.hpp"
#include "sgfem/linalg.hpp"
#include "sgfem/mesh.hpp"
#include "sgfem/problem.hpp"

namespace sgfem {

struct SolveReport {
  int iterations = 0;
  double final_residual_inf = std::numeric_limits<double>::infinity();
  bool converged = false;
  /// Tolerance the final residual was compared against.
  double tolerance = 0.0;
  std::optional<double> condition_estimate;
  std::vector<double> history;
  /// Set when the divergence guard stopped the iteration.
  bool diverged = false;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 50;
  /// Starting coefficients; zero when empty.
  Vector initial;
  bool estimate_condition = false;
  /// Abort once the residual exceeds its running minimum by this factor.
  double divergence_factor = 1e4;
};

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace detail

/// Throws MaxIterationsExceeded unless the report is converged.
inline void ensure_converged(const SolveReport& report, const std::string& what = "solver") {
  if (!report.converged) {
    throw Error(ErrorCode::MaxIterationsExceeded,
                what + (report.diverged ? " diverged" : " did not converge") + " after " +
                    std::to_string(report.iterations) + " iterations, residual " +
                    detail::sci(report.final_residual_inf));
  }
}

struct NewtonResult {
  DiscreteSolution solution;
  SolveReport report;
};

namespace detail {

inline DiscreteSolution initial_iterate(const SpacePtr& space, const Vector& initial) {
  if (initial.empty()) return DiscreteSolution(space);
  return DiscreteSolution(space, initial);
}

}  // namespace detail

/// Newton's method for a(u; u, w) = l(w): each step solves
/// (A(u) + B(u)) delta = l - a(u; u, .). Stops when ||r||_inf <= tol. On
/// failure the best iterate is returned with converged = false.
inline NewtonResult newton_solve(const SpacePtr& space, const CoefficientModel& model, const SourceFunction& f,
                                 const SolveOptions& opts = {}) {
  if (space->dim() < 1) throw Error(ErrorCode::InvalidArgument, "empty space");
  const Vector load = assemble_load(*space, f);
  DiscreteSolution u = detail::initial_iterate(space, opts.initial);
  DiscreteSolution best = u;
  SolveReport report;
  report.tolerance = opts.tol;
  double best_norm = std::numeric_limits<double>::infinity();
  for (int n = 0;; ++n) {
    AssembledSystem sys = assemble_newton_system(u, model, load);
    const double norm = inf_norm(sys.rhs);
    report.history.push_back(norm);
    if (norm < best_norm) {
      best_norm = norm;
      best = u;
    }
    report.iterations = n;
    if (norm <= opts.tol) {
      report.converged = true;
      break;
    }
    if (!std::isfinite(norm) || norm > opts.divergence_factor * best_norm) {
      report.diverged = true;
      break;
    }
    if (n >= opts.max_iter) break;
    const Vector delta = solve(sys.matrix, sys.rhs, ErrorCode::SingularJacobian);
    for (std::size_t i = 0; i < delta.size(); ++i) u.coefficients()[i] += delta[i];
  }
  report.final_residual_inf = best_norm;
  if (!report.converged) u = best;
  if (opts.estimate_condition) report.condition_estimate = condition_estimate(assemble_a(u, model));
  return {u, report};
}

struct ConstrainedSolution {
  DiscreteSolution solution;
  Vector multipliers;
  SolveReport report;
};

namespace detail {

inline void check_constraint_count(const Space& space, const ControlVolumeSet& cvs) {
  if (static_cast<int>(cvs.size()) >= space.dim()) {
    throw Error(ErrorCode::InvalidArgument, std::to_string(cvs.size()) + " control volumes for a space of dimension " +
                                                std::to_string(space.dim()) + "; need fewer constraints than dofs");
  }
}

inline Vector constraint_loads(const Mesh& mesh, const SourceFunction& f, const ControlVolumeSet& cvs) {
  Vector out;
  out.reserve(cvs.size());
  for (const auto& vol : cvs.volumes) out.push_back(constraint_load(mesh, f, vol));
  return out;
}

/// Saddle matrix [top, right^T; bottom, 0] with constraint rows given.
inline DenseMatrix saddle_matrix(const DenseMatrix& top, const std::vector<Vector>& right_rows,
                                 const std::vector<Vector>& bottom_rows) {
  const int n = top.rows();
  const int m = static_cast<int>(bottom_rows.size());
  DenseMatrix k(n + m, n + m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) k(i, j) = top(i, j);
  }
  for (int t = 0; t < m; ++t) {
    for (int g = 0; g < n; ++g) {
      k(g, n + t) = right_rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(g)];
      k(n + t, g) = bottom_rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(g)];
    }
  }
  return k;
}

}  // namespace detail

/// Fixed-point iteration for the constrained problem: each pass solves
/// [A(u_old), C^T; C, 0] [u; lambda] = [l; l_tau] with C built at u_old.
/// Stops when ||u - u_old||_inf <= tol.
inline ConstrainedSolution constrained_fixed_point(const SpacePtr& space, const CoefficientModel& model,
                                                   const SourceFunction& f, const ControlVolumeSet& cvs,
                                                   SolveOptions opts = {}) {
  if (opts.max_iter == SolveOptions{}.max_iter) opts.max_iter = 200;
  detail::check_constraint_count(*space, cvs);
  const int n = space->dim();
  const auto m = cvs.size();
  const Vector load = assemble_load(*space, f);
  const Vector cload = detail::constraint_loads(space->mesh(), f, cvs);
  DiscreteSolution u = detail::initial_iterate(space, opts.initial);
  Vector lambda(m, 0.0);
  SolveReport report;
  report.tolerance = opts.tol;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iter; ++it) {
    std::vector<Vector> rows;
    rows.reserve(m);
    for (const auto& vol : cvs.volumes) rows.push_back(constraint_row(u, model, vol));
    const DenseMatrix k = detail::saddle_matrix(assemble_a(u, model), rows, rows);
    Vector rhs = load;
    rhs.insert(rhs.end(), cload.begin(), cload.end());
    const Vector sol = solve(k, rhs, ErrorCode::SingularSaddleSystem);
    double step = 0.0;
    for (int g = 0; g < n; ++g) {
      step = std::max(step, std::abs(sol[static_cast<std::size_t>(g)] - u.coefficients()[static_cast<std::size_t>(g)]));
      u.coefficients()[static_cast<std::size_t>(g)] = sol[static_cast<std::size_t>(g)];
    }
    for (std::size_t t = 0; t < m; ++t) lambda[t] = sol[static_cast<std::size_t>(n) + t];
    report.history.push_back(step);
    report.iterations = it;
    report.final_residual_inf = step;
    best = std::min(best, step);
    if (step <= opts.tol) {
      report.converged = true;
      break;
    }
    if (!std::isfinite(step) || step > opts.divergence_factor * best) {
      report.diverged = true;
      break;
    }
  }
  if (opts.estimate_condition) report.condition_estimate = condition_estimate(assemble_a(u, model));
  return {u, lambda, report};
}

/// Jacobian used by the constrained Newton iteration. Modified uses
/// [A + B, Q^T; Q, 0]; Exact adds the derivative of the multiplier term and
/// uses C^T in the upper-right block.
enum class ConstrainedJacobian { Modified, Exact };

struct ConstrainedOptions {
  /// Relative reduction of the stacked residual required for convergence.
  double rel_tol = 1e-10;
  /// Absolute floor below which the residual counts as converged.
  double abs_tol = 1e-14;
  int max_iter = 50;
  Vector initial;
  ConstrainedJacobian jacobian = ConstrainedJacobian::Modified;
  bool estimate_condition = false;
  double divergence_factor = 1e4;
};

namespace detail {

/// Rounding level of the stacked residual: 2 eps || |l| + |A(u)| |u| ||_inf,
/// with the constraint rows treated alike.
inline double residual_roundoff(const DenseMatrix& a, const std::vector<Vector>& c_rows, const DiscreteSolution& u,
                                const Vector& load, const Vector& cload) {
  const Vector& x = u.coefficients();
  double scale = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    double s = std::abs(load[static_cast<std::size_t>(i)]);
    const auto row = a.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) s += std::abs(row[j] * x[j]);
    scale = std::max(scale, s);
  }
  for (std::size_t t = 0; t < c_rows.size(); ++t) {
    double s = std::abs(cload[t]);
    for (std::size_t j = 0; j < x.size(); ++j) s += std::abs(c_rows[t][j] * x[j]);
    scale = std::max(scale, s);
  }
  return 2.0 * std::numeric_limits<double>::epsilon() * scale;
}

/// Stacked residual [l - a(u; u, .) - sum lambda C(u; .); l_tau - C(u; u)].
inline Vector constrained_residual(const DiscreteSolution& u, const Vector& lambda, const CoefficientModel& model,
                                   const Vector& load, const Vector& cload, const ControlVolumeSet& cvs,
                                   std::vector<Vector>* c_rows) {
  Vector r = residual(u, model, load);
  const std::size_t n = r.size();
  std::vector<Vector> rows;
  for (const auto& vol : cvs.volumes) rows.push_back(constraint_row(u, model, vol));
  r.resize(n + cvs.size());
  for (std::size_t t = 0; t < cvs.size(); ++t) {
    long double cuu = 0.0L;
    for (std::size_t g = 0; g < n; ++g) {
      r[g] -= lambda[t] * rows[t][g];
      cuu += static_cast<long double>(rows[t][g]) * u.coefficients()[g];
    }
    r[n + t] = static_cast<double>(cload[t] - cuu);
  }
  if (c_rows) *c_rows = std::move(rows);
  return r;
}

/// d/du of sum_t lambda_t C_t(u; phi_g): only kappa depends on u, through
/// the endpoint values.
inline DenseMatrix multiplier_hessian(const DiscreteSolution& u, const Vector& lambda, const CoefficientModel& model,
                                      const ControlVolumeSet& cvs) {
  const Space& space = u.space();
  DenseMatrix out(space.dim(), space.dim());
  for (std::size_t t = 0; t < cvs.size(); ++t) {
    const auto& vol = cvs.volumes[t];
    auto add = [&](double x, Side side, double sign) {
      const double dk = model.dkappa_du(x, u.eval(x, side).u, side);
      const auto tr = endpoint_trace(space, x, side);
      const auto dofs = space.local_dofs(tr.element);
      for (std::size_t i = 0; i < dofs.size(); ++i) {
        if (dofs[i].global < 0) continue;
        for (std::size_t j = 0; j < dofs.size(); ++j) {
          if (dofs[j].global < 0) continue;
          out(dofs[i].global, dofs[j].global) += sign * lambda[t] * dk * tr.derivs[i] * tr.values[j];
        }
      }
    };
    add(vol.right, Side::Left, -1.0);
    add(vol.left, Side::Right, 1.0);
  }
  return out;
}

}  // namespace detail

/// Newton-type iteration for the locally conservative problem: find (u,
/// lambda) with a(u; u, w) + sum lambda C(u; w) = l(w) and C(u; u) = l_tau
/// for every volume. Starts from one unconstrained Newton step and lambda =
/// 0, and stops once the stacked residual has dropped by rel_tol or reached
/// rounding level.
inline ConstrainedSolution constrained_newton(const SpacePtr& space, const CoefficientModel& model,
                                              const SourceFunction& f, const ControlVolumeSet& cvs,
                                              const ConstrainedOptions& opts = {}) {
  detail::check_constraint_count(*space, cvs);
  const int n = space->dim();
  const auto m = cvs.size();
  const Vector load = assemble_load(*space, f);
  const Vector cload = detail::constraint_loads(space->mesh(), f, cvs);

  DiscreteSolution u = detail::initial_iterate(space, opts.initial);
  if (opts.initial.empty()) {
    AssembledSystem sys = assemble_newton_system(u, model, load);
    const Vector delta = solve(sys.matrix, sys.rhs, ErrorCode::SingularJacobian);
    for (std::size_t i = 0; i < delta.size(); ++i) u.coefficients()[i] += delta[i];
  }
  Vector lambda(m, 0.0);

  SolveReport report;
  DiscreteSolution best_u = u;
  Vector best_lambda = lambda;
  double best_norm = std::numeric_limits<double>::infinity();
  double rel = 0.0;
  for (int it = 0;; ++it) {
    std::vector<Vector> c_rows;
    const Vector r = detail::constrained_residual(u, lambda, model, load, cload, cvs, &c_rows);
    const double norm = inf_norm(r);
    if (it == 0) rel = opts.rel_tol * norm;
    DenseMatrix top = assemble_a(u, model);
    const double tol = std::max({rel, opts.abs_tol, detail::residual_roundoff(top, c_rows, u, load, cload)});
    report.tolerance = tol;
    report.history.push_back(norm);
    report.iterations = it;
    if (norm < best_norm) {
      best_norm = norm;
      best_u = u;
      best_lambda = lambda;
    }
    if (norm <= tol) {
      report.converged = true;
      break;
    }
    if (!std::isfinite(norm) || norm > opts.divergence_factor * best_norm) {
      report.diverged = true;
      break;
    }
    if (it >= opts.max_iter) break;

    top += assemble_b(u, model);
    std::vector<Vector> q_rows;
    q_rows.reserve(m);
    for (const auto& vol : cvs.volumes) q_rows.push_back(constraint_linearized_row(u, model, vol));
    DenseMatrix k;
    if (opts.jacobian == ConstrainedJacobian::Exact) {
      top += detail::multiplier_hessian(u, lambda, model, cvs);
      k = detail::saddle_matrix(top, c_rows, q_rows);
    } else {
      k = detail::saddle_matrix(top, q_rows, q_rows);
    }
    const Vector delta = solve(k, r, ErrorCode::SingularSaddleSystem);
    for (int g = 0; g < n; ++g) u.coefficients()[static_cast<std::size_t>(g)] += delta[static_cast<std::size_t>(g)];
    for (std::size_t t = 0; t < m; ++t) lambda[t] += delta[static_cast<std::size_t>(n) + t];
  }
  report.final_residual_inf = best_norm;
  if (!report.converged) {
    u = best_u;
    lambda = best_lambda;
  }
  if (opts.estimate_condition) report.condition_estimate = condition_estimate(assemble_a(u, model));
  return {u, lambda, report};
}

}  // namespace sgfem
