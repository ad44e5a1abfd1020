#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgfem/assembly.hpp"
#include "sgfem/basis.hpp"
#include "sgfem/error.hpp"
#include "sgfem/linalg.hpp"
#include "sgfem/mesh.hpp"
#include "sgfem/problem.hpp"
#include "sgfem/quadrature.hpp"

namespace sgfem {

struct NormSet {
  double l2 = 0.0;
  double h1 = 0.0;
  double w16 = 0.0;
};

struct ErrorReport {
  double l2 = 0.0;
  double h1_semi = 0.0;
  std::optional<double> w16_semi;
  std::vector<NormSet> per_subdomain;
};

/// Quadrature points per smooth piece used for error norms.
inline int error_points(const Space& space) { return space.degree() + 5; }

/// L2, H1-seminorm and W^{1,6}-seminorm of ref - u_h, integrated piecewise
/// between nodes and interfaces.
inline ErrorReport error_norms(const DiscreteSolution& uh, const ReferenceSolution& ref, bool with_w16 = true) {
  const Space& space = uh.space();
  const Mesh& mesh = space.mesh();
  const QuadRule& rule = gauss_rule(error_points(space));
  std::vector<NormSet> sums(static_cast<std::size_t>(mesh.num_subdomains()));
  std::vector<double> values;
  std::vector<double> derivs;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = space.local_dofs(e);
    values.resize(dofs.size());
    derivs.resize(dofs.size());
    for (const auto& piece : element_pieces(mesh, e)) {
      auto& acc = sums[static_cast<std::size_t>(mesh.subdomain_of(piece.span.midpoint()))];
      const double len = piece.span.length();
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double x = piece.span.left + len * rule.points[q];
        const double w = len * rule.weights[q];
        space.eval_element(e, x, piece.side, values, derivs);
        const auto h = detail::combine(uh, dofs, values, derivs);
        const auto r = ref(x, piece.side);
        const double ev = r.u - h.u;
        const double ed = r.du - h.du;
        acc.l2 += w * ev * ev;
        acc.h1 += w * ed * ed;
        const double ed2 = ed * ed;
        acc.w16 += w * ed2 * ed2 * ed2;
      }
    }
  }
  ErrorReport out;
  NormSet total;
  for (const auto& s : sums) {
    total.l2 += s.l2;
    total.h1 += s.h1;
    total.w16 += s.w16;
    out.per_subdomain.push_back({std::sqrt(s.l2), std::sqrt(s.h1), std::pow(s.w16, 1.0 / 6.0)});
  }
  out.l2 = std::sqrt(total.l2);
  out.h1_semi = std::sqrt(total.h1);
  if (with_w16) out.w16_semi = std::pow(total.w16, 1.0 / 6.0);
  return out;
}

/// Nodal interpolant: standard dofs take v at their Lagrange node, enriched
/// dofs are zero.
inline DiscreteSolution standard_interpolant(const SpacePtr& space, const std::function<double(double)>& v) {
  DiscreteSolution out(space);
  for (int g = 0; g < space->standard_count(); ++g) out.coefficients()[static_cast<std::size_t>(g)] = v(space->dof_info(g).node);
  return out;
}

inline DiscreteSolution standard_interpolant(const SpacePtr& space, const ReferenceSolution& ref) {
  return standard_interpolant(space, [&](double x) { return ref(x).u; });
}

struct InterpolationDiagnostics {
  /// Largest 1-norm condition estimate over the local enriched systems.
  double max_local_condition = 0.0;
  /// Largest leading-term residual on the half not used by the constraint row.
  double max_other_half_residual = 0.0;
  /// Largest mismatch between a shared vertex value and its neighbor's.
  double max_vertex_mismatch = 0.0;
};

/// Enriched interpolant. Away from interfaces it is nodal interpolation; on
/// an enriched element the 2p + 2 coefficients solve p + 1 interpolation
/// conditions on each side of the interface (the interface counted once)
/// plus one row removing the x^{p+1} term.
inline DiscreteSolution enriched_interpolant(const SpacePtr& space, const std::function<double(double)>& v,
                                             InterpolationDiagnostics* diag = nullptr) {
  DiscreteSolution out = standard_interpolant(space, v);
  InterpolationDiagnostics local_diag;
  const int p = space->degree();
  const LagrangeBasis& basis = space->basis();
  for (int e : space->enriched_elements()) {
    const EnrichmentFunction& w = *space->enrichment(e);
    const Interval el = space->mesh().element(e);
    const double g = w.gamma();
    std::vector<double> xi;
    for (int i = 0; i <= p; ++i) xi.push_back(el.left + i * (g - el.left) / p);
    for (int i = 1; i <= p; ++i) xi.push_back(g + i * (el.right - g) / p);
    const int n = 2 * p + 2;
    DenseMatrix a(n, n);
    Vector b(static_cast<std::size_t>(n), 0.0);
    for (int r = 0; r < 2 * p + 1; ++r) {
      const double x = xi[static_cast<std::size_t>(r)];
      const double t = (x - el.left) / el.length();
      const double wv = w.value(x);
      for (int k = 0; k <= p; ++k) {
        const double phi = basis.eval(k, t).value;
        a(r, k) = phi;
        a(r, p + 1 + k) = wv * phi;
      }
      b[static_cast<std::size_t>(r)] = v(x);
    }
    double other = 0.0;
    double scale = 0.0;
    for (int k = 0; k <= p; ++k) {
      a(n - 1, p + 1 + k) = basis.leading_coefficient(k);
      scale = std::max(scale, std::abs(basis.leading_coefficient(k)));
    }
    LuFactorization lu(a, ErrorCode::SingularLocalSystem);
    const Vector q = lu.solve(b);
    for (int k = 0; k <= p; ++k) {
      other += w.slope_right() * basis.leading_coefficient(k) * q[static_cast<std::size_t>(p + 1 + k)];
    }
    const double beta_scale = std::max(1.0, inf_norm(std::span<const double>(q).subspan(static_cast<std::size_t>(p + 1))));
    local_diag.max_other_half_residual =
        std::max(local_diag.max_other_half_residual, std::abs(other) / (scale * beta_scale));
    local_diag.max_local_condition =
        std::max(local_diag.max_local_condition, one_norm(a) * inverse_one_norm_estimate(lu));
    for (int k = 0; k <= p; ++k) {
      const int gs = space->standard_index(e, k);
      const double alpha = q[static_cast<std::size_t>(k)];
      if (gs >= 0) {
        if (k == 0 || k == p) {
          const double prev = out.coefficients()[static_cast<std::size_t>(gs)];
          local_diag.max_vertex_mismatch = std::max(local_diag.max_vertex_mismatch, std::abs(prev - alpha));
        }
        out.coefficients()[static_cast<std::size_t>(gs)] = alpha;
      }
      out.coefficients()[static_cast<std::size_t>(space->enriched_index(e, k))] = q[static_cast<std::size_t>(p + 1 + k)];
    }
  }
  if (local_diag.max_vertex_mismatch > 1e-10 * (1.0 + inf_norm(out.coefficients()))) {
    throw Error(ErrorCode::SingularLocalSystem, "enriched interpolant disagrees with a neighbor at a vertex");
  }
  if (diag) *diag = local_diag;
  return out;
}

inline DiscreteSolution enriched_interpolant(const SpacePtr& space, const ReferenceSolution& ref,
                                             InterpolationDiagnostics* diag = nullptr) {
  return enriched_interpolant(space, [&](double x) { return ref(x).u; }, diag);
}

struct LceResult {
  std::vector<double> values;
  double mean_abs = 0.0;
  double max_abs = 0.0;
};

/// Local conservation error C(u_h; u_h) - l_tau on every control volume.
inline LceResult lce(const DiscreteSolution& uh, const CoefficientModel& model, const SourceFunction& f,
                     const ControlVolumeSet& cvs) {
  LceResult out;
  for (const auto& vol : cvs.volumes) {
    const double e = local_conservation_error(uh, model, f, vol);
    out.values.push_back(e);
    out.mean_abs += std::abs(e);
    out.max_abs = std::max(out.max_abs, std::abs(e));
  }
  if (!out.values.empty()) out.mean_abs /= static_cast<double>(out.values.size());
  return out;
}

/// L2 norm of u - u_h - lambda_hat, where lambda_hat equals lambda_tau on
/// each control volume and zero elsewhere.
inline double lambda_corrected_l2(const DiscreteSolution& uh, const Vector& lambda, const ControlVolumeSet& cvs,
                                  const ReferenceSolution& ref) {
  if (lambda.size() != cvs.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(lambda.size()) + " multipliers for " + std::to_string(cvs.size()) + " volumes");
  }
  const Space& space = uh.space();
  const Mesh& mesh = space.mesh();
  std::vector<double> breaks(mesh.nodes());
  breaks.insert(breaks.end(), mesh.interfaces().begin(), mesh.interfaces().end());
  for (const auto& vol : cvs.volumes) {
    breaks.push_back(vol.left);
    breaks.push_back(vol.right);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const QuadRule& rule = gauss_rule(error_points(space));
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double len = breaks[i + 1] - a;
    if (len <= 0.0) continue;
    const double mid = a + 0.5 * len;
    const int e = mesh.element_of(mid);
    Side side = Side::Right;
    if (auto g = mesh.element_interface(e); g && mid < *g) side = Side::Left;
    double shift = 0.0;
    for (std::size_t t = 0; t < cvs.size(); ++t) {
      if (cvs.volumes[t].contains_open(mid)) {
        shift = lambda[t];
        break;
      }
    }
    double part = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double x = a + len * rule.points[q];
      const double d = ref(x, side).u - uh.eval_in_element(e, x, side).u - shift;
      part += rule.weights[q] * d * d;
    }
    sum += len * part;
  }
  return std::sqrt(sum);
}

/// Least-squares slope of log(error) against log(h), with slopes between
/// consecutive rows.
struct RateFit {
  double slope = 0.0;
  std::vector<double> pairwise;
};

inline RateFit fit_rates(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size()) throw Error(ErrorCode::DimensionMismatch, "h and error lists differ in length");
  if (h.size() < 3) throw Error(ErrorCode::InsufficientData, "rate fit needs at least 3 rows, got " + std::to_string(h.size()));
  const auto n = static_cast<double>(h.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "rate fit needs positive h and errors");
    }
    const double x = std::log(h[i]);
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw Error(ErrorCode::InsufficientData, "rate fit needs distinct h values");
  RateFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  for (std::size_t i = 1; i < h.size(); ++i) {
    fit.pairwise.push_back(std::log(err[i] / err[i - 1]) / std::log(h[i] / h[i - 1]));
  }
  return fit;
}

struct RateRow {
  int p = 0;
  int n = 0;
  double h = 0.0;
  std::string kind;
  double value = 0.0;
};

/// Rows grouped into series by (p, kind), each with its fitted slope.
struct RateTable {
  std::vector<RateRow> rows;
  std::map<std::pair<int, std::string>, RateFit> fits;

  [[nodiscard]] double slope(int p, const std::string& kind) const {
    auto it = fits.find({p, kind});
    if (it == fits.end()) throw Error(ErrorCode::InsufficientData, "no series for p=" + std::to_string(p) + " " + kind);
    return it->second.slope;
  }
};

inline RateTable fit_table(std::vector<RateRow> rows) {
  RateTable table;
  table.rows = std::move(rows);
  std::map<std::pair<int, std::string>, std::pair<std::vector<double>, std::vector<double>>> series;
  for (const auto& r : table.rows) {
    auto& s = series[{r.p, r.kind}];
    s.first.push_back(r.h);
    s.second.push_back(r.value);
  }
  for (const auto& [key, s] : series) table.fits[key] = fit_rates(s.first, s.second);
  return table;
}

/// |v - I v|_1 and |v - I v|_{1,6} for the enriched interpolant of v on
/// uniform meshes with N elements each, as series "h1" and "w16".
inline RateTable w16_seminorm_rate_check(const ReferenceSolution& v, int p, const std::vector<int>& sizes,
                                         const std::vector<double>& interfaces, double length = 1.0) {
  std::vector<RateRow> rows;
  for (int n : sizes) {
    const auto space = make_space(Mesh::uniform(length, n, interfaces), p, Method::Sgfem);
    const auto err = error_norms(enriched_interpolant(space, v), v);
    rows.push_back({p, n, space->mesh().h(), "h1", err.h1_semi});
    rows.push_back({p, n, space->mesh().h(), "w16", *err.w16_semi});
  }
  return fit_table(std::move(rows));
}

}  // namespace sgfem
