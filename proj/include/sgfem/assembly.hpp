#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgfem/basis.hpp"
#include "sgfem/error.hpp"
#include "sgfem/linalg.hpp"
#include "sgfem/mesh.hpp"
#include "sgfem/problem.hpp"
#include "sgfem/quadrature.hpp"

namespace sgfem {

/// Finite element function: a coefficient vector over a Space. Boundary
/// values are zero because the Dirichlet nodes carry no dof.
class DiscreteSolution {
 public:
  struct Value {
    double u;
    double du;
  };

  explicit DiscreteSolution(SpacePtr space)
      : space_(std::move(space)), coeffs_(static_cast<std::size_t>(space_->dim()), 0.0) {}
  DiscreteSolution(SpacePtr space, Vector coeffs) : space_(std::move(space)), coeffs_(std::move(coeffs)) {
    if (static_cast<int>(coeffs_.size()) != space_->dim()) {
      throw Error(ErrorCode::DimensionMismatch, "coefficient vector of length " + std::to_string(coeffs_.size()) +
                                                    " for a space of dimension " + std::to_string(space_->dim()));
    }
  }

  [[nodiscard]] const Space& space() const noexcept { return *space_; }
  [[nodiscard]] const SpacePtr& space_ptr() const noexcept { return space_; }
  [[nodiscard]] const Vector& coefficients() const noexcept { return coeffs_; }
  [[nodiscard]] Vector& coefficients() noexcept { return coeffs_; }

  [[nodiscard]] double coefficient(int g) const noexcept { return g < 0 ? 0.0 : coeffs_[static_cast<std::size_t>(g)]; }

  /// Value and derivative at x inside element e (closure); side picks the
  /// derivative branch at the element's kink.
  [[nodiscard]] Value eval_in_element(int e, double x, Side side) const {
    const auto dofs = space_->local_dofs(e);
    std::vector<double> values(dofs.size());
    std::vector<double> derivs(dofs.size());
    space_->eval_element(e, x, side, values, derivs);
    long double u = 0.0L;
    long double du = 0.0L;
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      const long double c = coefficient(dofs[i].global);
      u += c * values[i];
      du += c * derivs[i];
    }
    return {static_cast<double>(u), static_cast<double>(du)};
  }

  /// One-sided evaluation: at a node or interface the derivative is the
  /// limit from the given side.
  [[nodiscard]] Value eval(double x, Side side = Side::Left) const {
    return eval_in_element(space_->mesh().element_of(x, side), x, side);
  }
  [[nodiscard]] double value(double x) const { return eval(x, Side::Left).u; }
  [[nodiscard]] double derivative(double x, Side side) const { return eval(x, side).du; }

 private:
  SpacePtr space_;
  Vector coeffs_;
};

/// Matrix plus right-hand side of one linear solve.
struct AssembledSystem {
  DenseMatrix matrix;
  Vector rhs;

  [[nodiscard]] int dim() const noexcept { return matrix.rows(); }
};

/// Quadrature points per smooth piece used by assembly.
inline int assembly_points(const Space& space) { return space.degree() + 3; }

namespace detail {

/// Calls f(e, x, weight, side, dofs, values, derivs) at every quadrature
/// point of every element piece, in element order.
template <class F>
void for_each_quadrature_point(const Space& space, const QuadRule& rule, F&& f) {
  const Mesh& mesh = space.mesh();
  std::vector<double> values;
  std::vector<double> derivs;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = space.local_dofs(e);
    values.resize(dofs.size());
    derivs.resize(dofs.size());
    for (const auto& piece : element_pieces(mesh, e)) {
      const double a = piece.span.left;
      const double len = piece.span.length();
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double x = a + len * rule.points[q];
        space.eval_element(e, x, piece.side, values, derivs);
        f(e, x, len * rule.weights[q], piece.side, dofs, std::span<const double>(values),
          std::span<const double>(derivs));
      }
    }
  }
}

inline DiscreteSolution::Value combine(const DiscreteSolution& v, std::span<const LocalDof> dofs,
                                       std::span<const double> values, std::span<const double> derivs) {
  long double u = 0.0L;
  long double du = 0.0L;
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    const long double c = v.coefficient(dofs[i].global);
    u += c * values[i];
    du += c * derivs[i];
  }
  return {static_cast<double>(u), static_cast<double>(du)};
}

inline void check_same_space(const Space& a, const Space& b) {
  if (&a != &b && a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "solution over another space");
}

}  // namespace detail

/// Load vector l(phi_g) = int f phi_g.
inline Vector assemble_load(const Space& space, const SourceFunction& f) {
  Vector out(static_cast<std::size_t>(space.dim()), 0.0);
  const QuadRule& rule = gauss_rule(assembly_points(space));
  detail::for_each_quadrature_point(space, rule, [&](int, double x, double w, Side, auto dofs, auto values, auto) {
    const double fx = f(x) * w;
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      if (dofs[i].global >= 0) out[static_cast<std::size_t>(dofs[i].global)] += fx * values[i];
    }
  });
  return out;
}

/// Stiffness matrix a(v; phi_g', phi_g), row g = test function.
inline DenseMatrix assemble_a(const DiscreteSolution& v, const CoefficientModel& model) {
  const Space& space = v.space();
  DenseMatrix out(space.dim(), space.dim());
  const QuadRule& rule = gauss_rule(assembly_points(space));
  detail::for_each_quadrature_point(space, rule, [&](int, double x, double w, Side side, auto dofs, auto values,
                                                     auto derivs) {
    const auto vv = detail::combine(v, dofs, values, derivs);
    const double k = model.kappa(x, vv.u, side) * w;
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      const int gi = dofs[i].global;
      if (gi < 0) continue;
      for (std::size_t j = 0; j < dofs.size(); ++j) {
        const int gj = dofs[j].global;
        if (gj >= 0) out(gi, gj) += k * derivs[i] * derivs[j];
      }
    }
  });
  return out;
}

/// Frechet term b(v; phi_g', phi_g) = int D2kappa(x, v) v' phi_g' phi_g'
/// with the trial function undifferentiated. Row g = test function.
inline DenseMatrix assemble_b(const DiscreteSolution& v, const CoefficientModel& model) {
  const Space& space = v.space();
  DenseMatrix out(space.dim(), space.dim());
  const QuadRule& rule = gauss_rule(assembly_points(space));
  detail::for_each_quadrature_point(space, rule, [&](int, double x, double w, Side side, auto dofs, auto values,
                                                     auto derivs) {
    const auto vv = detail::combine(v, dofs, values, derivs);
    const double k = model.dkappa_du(x, vv.u, side) * vv.du * w;
    if (k == 0.0) return;
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      const int gi = dofs[i].global;
      if (gi < 0) continue;
      for (std::size_t j = 0; j < dofs.size(); ++j) {
        const int gj = dofs[j].global;
        if (gj >= 0) out(gi, gj) += k * values[j] * derivs[i];
      }
    }
  });
  return out;
}

/// a(v; v, phi_g) for every g.
inline Vector apply_a(const DiscreteSolution& v, const CoefficientModel& model) {
  const Space& space = v.space();
  Vector out(static_cast<std::size_t>(space.dim()), 0.0);
  const QuadRule& rule = gauss_rule(assembly_points(space));
  detail::for_each_quadrature_point(space, rule, [&](int, double x, double w, Side side, auto dofs, auto values,
                                                     auto derivs) {
    const auto vv = detail::combine(v, dofs, values, derivs);
    const double flux = model.kappa(x, vv.u, side) * vv.du * w;
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      if (dofs[i].global >= 0) out[static_cast<std::size_t>(dofs[i].global)] += flux * derivs[i];
    }
  });
  return out;
}

/// r_g = l(phi_g) - a(v; v, phi_g).
inline Vector residual(const DiscreteSolution& v, const CoefficientModel& model, const Vector& load) {
  Vector r = apply_a(v, model);
  if (r.size() != load.size()) throw Error(ErrorCode::DimensionMismatch, "load vector length");
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = load[i] - r[i];
  return r;
}

inline Vector residual(const DiscreteSolution& v, const CoefficientModel& model, const SourceFunction& f) {
  return residual(v, model, assemble_load(v.space(), f));
}

/// Newton system: matrix A(v) + B(v), right-hand side the residual.
inline AssembledSystem assemble_newton_system(const DiscreteSolution& v, const CoefficientModel& model,
                                              const Vector& load) {
  AssembledSystem sys{assemble_a(v, model), residual(v, model, load)};
  sys.matrix += assemble_b(v, model);
  return sys;
}

/// Values and one-sided derivatives of every local basis function at the
/// ends of a control volume, taken from inside the volume.
struct EndpointTrace {
  int element = 0;
  double x = 0.0;
  Side side = Side::Left;
  std::vector<double> values;
  std::vector<double> derivs;
};

inline EndpointTrace endpoint_trace(const Space& space, double x, Side side) {
  EndpointTrace t;
  t.x = x;
  t.side = side;
  t.element = space.mesh().element_of(x, side);
  const auto n = space.local_dofs(t.element).size();
  t.values.resize(n);
  t.derivs.resize(n);
  space.eval_element(t.element, x, side, t.values, t.derivs);
  return t;
}

/// C(v; w) = -kappa(t_r, v) w'(t_r-) + kappa(t_l, v) w'(t_l+). Coefficient
/// and derivatives are both taken from inside the volume.
inline double constraint_value(const DiscreteSolution& v, const DiscreteSolution& w, const CoefficientModel& model,
                               const Interval& volume) {
  detail::check_same_space(v.space(), w.space());
  const auto vr = v.eval(volume.right, Side::Left);
  const auto vl = v.eval(volume.left, Side::Right);
  const double wr = w.derivative(volume.right, Side::Left);
  const double wl = w.derivative(volume.left, Side::Right);
  return -model.kappa(volume.right, vr.u, Side::Left) * wr + model.kappa(volume.left, vl.u, Side::Right) * wl;
}

/// l_tau = int f over the volume, split at nodes and interfaces.
inline double constraint_load(const Mesh& mesh, const SourceFunction& f, const Interval& volume, int points = 8) {
  return integrate_interval(mesh, volume, f, gauss_rule(points));
}

/// Row of C(v; phi_g) over all dofs g.
inline Vector constraint_row(const DiscreteSolution& v, const CoefficientModel& model, const Interval& volume) {
  const Space& space = v.space();
  Vector row(static_cast<std::size_t>(space.dim()), 0.0);
  const double kr = model.kappa(volume.right, v.eval(volume.right, Side::Left).u, Side::Left);
  const double kl = model.kappa(volume.left, v.eval(volume.left, Side::Right).u, Side::Right);
  const auto tr = endpoint_trace(space, volume.right, Side::Left);
  const auto tl = endpoint_trace(space, volume.left, Side::Right);
  const auto dr = space.local_dofs(tr.element);
  for (std::size_t i = 0; i < dr.size(); ++i) {
    if (dr[i].global >= 0) row[static_cast<std::size_t>(dr[i].global)] -= kr * tr.derivs[i];
  }
  const auto dl = space.local_dofs(tl.element);
  for (std::size_t i = 0; i < dl.size(); ++i) {
    if (dl[i].global >= 0) row[static_cast<std::size_t>(dl[i].global)] += kl * tl.derivs[i];
  }
  return row;
}

/// [Q(z)](w) = [-kappa(x, z) w' - D2kappa(x, z) z' w] from t_l to t_r,
/// one-sided from inside the volume.
inline double constraint_linearized(const DiscreteSolution& z, const DiscreteSolution& w,
                                    const CoefficientModel& model, const Interval& volume) {
  detail::check_same_space(z.space(), w.space());
  auto term = [&](double x, Side side) {
    const auto zz = z.eval(x, side);
    const auto ww = w.eval(x, side);
    return -model.kappa(x, zz.u, side) * ww.du - model.dkappa_du(x, zz.u, side) * zz.du * ww.u;
  };
  return term(volume.right, Side::Left) - term(volume.left, Side::Right);
}

/// Row of [Q(z)](phi_g) over all dofs g.
inline Vector constraint_linearized_row(const DiscreteSolution& z, const CoefficientModel& model,
                                        const Interval& volume) {
  const Space& space = z.space();
  Vector row(static_cast<std::size_t>(space.dim()), 0.0);
  auto add = [&](double x, Side side, double sign) {
    const auto zz = z.eval(x, side);
    const double k = model.kappa(x, zz.u, side);
    const double dk = model.dkappa_du(x, zz.u, side) * zz.du;
    const auto t = endpoint_trace(space, x, side);
    const auto dofs = space.local_dofs(t.element);
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      if (dofs[i].global >= 0) {
        row[static_cast<std::size_t>(dofs[i].global)] += sign * (-k * t.derivs[i] - dk * t.values[i]);
      }
    }
  };
  add(volume.right, Side::Left, 1.0);
  add(volume.left, Side::Right, -1.0);
  return row;
}

/// Local conservation error C(w; w) - l_tau.
inline double local_conservation_error(const DiscreteSolution& w, const CoefficientModel& model,
                                       const SourceFunction& f, const Interval& volume) {
  return constraint_value(w, w, model, volume) - constraint_load(w.space().mesh(), f, volume);
}

}  // namespace sgfem
