#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgfem/error.hpp"
#include "sgfem/mesh.hpp"

namespace sgfem {

/// Nodal Lagrange basis of degree p on [0, 1] with equispaced nodes i/p.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int degree) : degree_(degree) {
    if (degree < 1) throw Error(ErrorCode::UnsupportedOrder, "Lagrange degree must be >= 1");
    nodes_.resize(static_cast<std::size_t>(degree) + 1);
    for (int i = 0; i <= degree; ++i) nodes_[static_cast<std::size_t>(i)] = static_cast<double>(i) / degree;
    denom_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      double d = 1.0;
      for (std::size_t m = 0; m < nodes_.size(); ++m) {
        if (m != i) d *= nodes_[i] - nodes_[m];
      }
      denom_[i] = d;
    }
  }

  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] int size() const noexcept { return degree_ + 1; }
  [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }

  struct Value {
    double value;
    double derivative;  // d/dxi
  };

  [[nodiscard]] Value eval(int i, double xi) const {
    if (i < 0 || i > degree_) throw Error(ErrorCode::IndexOutOfRange, "local shape index " + std::to_string(i));
    const auto n = nodes_.size();
    const auto ii = static_cast<std::size_t>(i);
    const long double t = xi;
    long double value = 1.0L;
    for (std::size_t m = 0; m < n; ++m) {
      if (m != ii) value *= t - nodes_[m];
    }
    long double deriv = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == ii) continue;
      long double prod = 1.0L;
      for (std::size_t m = 0; m < n; ++m) {
        if (m != ii && m != k) prod *= t - nodes_[m];
      }
      deriv += prod;
    }
    return {static_cast<double>(value / denom_[ii]), static_cast<double>(deriv / denom_[ii])};
  }

  /// Values and xi-derivatives of all p+1 shape functions at once.
  void eval_all(double xi, std::span<double> values, std::span<double> derivs) const {
    for (int i = 0; i <= degree_; ++i) {
      const auto v = eval(i, xi);
      values[static_cast<std::size_t>(i)] = v.value;
      derivs[static_cast<std::size_t>(i)] = v.derivative;
    }
  }

  /// Coefficient of xi^p in shape function i.
  [[nodiscard]] double leading_coefficient(int i) const { return 1.0 / denom_.at(static_cast<std::size_t>(i)); }

 private:
  int degree_;
  std::vector<double> nodes_;
  std::vector<double> denom_;
};

/// Value with separate left and right derivatives; they differ only at kinks.
struct PointValue {
  double value = 0.0;
  double d_left = 0.0;
  double d_right = 0.0;

  [[nodiscard]] double derivative(Side side) const noexcept { return side == Side::Left ? d_left : d_right; }
};

/// Stable enrichment w = I1(|x - g|) - |x - g| on one element: piecewise
/// linear, zero at both element ends and outside, kinked at g.
class EnrichmentFunction {
 public:
  EnrichmentFunction(Interval element, double gamma) : element_(element), gamma_(gamma) {
    if (!element.contains_open(gamma)) {
      throw Error(ErrorCode::OutOfDomain, "enrichment interface must lie inside its element");
    }
    const double h = element.length();
    slope_ = ((element.right - gamma) - (gamma - element.left)) / h;
  }

  [[nodiscard]] const Interval& element() const noexcept { return element_; }
  [[nodiscard]] double gamma() const noexcept { return gamma_; }
  [[nodiscard]] double slope_left() const noexcept { return slope_ + 1.0; }
  [[nodiscard]] double slope_right() const noexcept { return slope_ - 1.0; }

  [[nodiscard]] double value(double x) const noexcept {
    if (!element_.contains_closed(x)) return 0.0;
    const double interp = (gamma_ - element_.left) + slope_ * (x - element_.left);
    return interp - std::abs(x - gamma_);
  }

  /// Derivative on the given side of x (inside the element, off the kink,
  /// both sides agree).
  [[nodiscard]] double derivative(double x, Side side) const noexcept {
    if (x < element_.left || x > element_.right) return 0.0;
    if (x == element_.left && side == Side::Left) return 0.0;
    if (x == element_.right && side == Side::Right) return 0.0;
    if (x < gamma_ || (x == gamma_ && side == Side::Left)) return slope_left();
    return slope_right();
  }

  /// Slope of the linear branch on the given side of the kink, ignoring the
  /// support; used when evaluating inside the owning element.
  [[nodiscard]] double branch_derivative(double x, Side side) const noexcept {
    return (x < gamma_ || (x == gamma_ && side == Side::Left)) ? slope_left() : slope_right();
  }

  [[nodiscard]] PointValue eval(double x) const noexcept {
    return {value(x), derivative(x, Side::Left), derivative(x, Side::Right)};
  }

 private:
  Interval element_;
  double gamma_;
  double slope_ = 0.0;
};

enum class Method { Fem, Sgfem };

inline std::string_view to_string(Method m) noexcept { return m == Method::Fem ? "fem" : "sgfem"; }

inline Method parse_method(std::string_view s) {
  if (s == "fem") return Method::Fem;
  if (s == "sgfem") return Method::Sgfem;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

/// One basis function as seen from an element: the Lagrange shape k, and
/// whether it is multiplied by the element's enrichment. `global` is -1 for
/// the Dirichlet nodes at x = 0 and x = L.
struct LocalDof {
  int global;
  int k;
  bool enriched;
};

/// Where a global degree of freedom lives.
struct DofInfo {
  bool enriched;
  int element;  // owning element (for shared vertex dofs, the left one)
  int k;        // local shape index within that element
  double node;  // Lagrange node coordinate
};

/// Degree-p continuous Lagrange space with homogeneous Dirichlet conditions,
/// optionally enriched on every interface element by w * phi_k for all local
/// k. Standard dofs come first (pN - 1 of them, numbered by Lagrange node),
/// followed by p + 1 enriched dofs per enriched element in element order.
class Space {
 public:
  Space(Mesh mesh, int degree, Method method) : mesh_(std::move(mesh)), basis_(degree), method_(method) {
    const int n = mesh_.num_elements();
    const int p = degree;
    standard_count_ = p * n - 1;
    enrichment_slot_.assign(static_cast<std::size_t>(n), -1);
    if (method_ == Method::Sgfem) {
      for (int e : mesh_.enriched_elements()) {
        enrichment_slot_[static_cast<std::size_t>(e)] = static_cast<int>(enrichments_.size());
        enrichments_.emplace_back(mesh_.element(e), *mesh_.element_interface(e));
        enriched_elements_.push_back(e);
      }
    }
    enriched_count_ = static_cast<int>(enrichments_.size()) * (p + 1);

    local_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int e = 0; e < n; ++e) {
      for (int k = 0; k <= p; ++k) {
        const int node = p * e + k;
        const int g = (node == 0 || node == p * n) ? -1 : node - 1;
        local_.push_back({g, k, false});
      }
      const int slot = enrichment_slot_[static_cast<std::size_t>(e)];
      if (slot >= 0) {
        for (int k = 0; k <= p; ++k) local_.push_back({standard_count_ + slot * (p + 1) + k, k, true});
      }
      local_offsets_[static_cast<std::size_t>(e) + 1] = static_cast<int>(local_.size());
    }
  }

  [[nodiscard]] const Mesh& mesh() const noexcept { return mesh_; }
  [[nodiscard]] const LagrangeBasis& basis() const noexcept { return basis_; }
  [[nodiscard]] int degree() const noexcept { return basis_.degree(); }
  [[nodiscard]] Method method() const noexcept { return method_; }
  [[nodiscard]] int standard_count() const noexcept { return standard_count_; }
  [[nodiscard]] int enriched_count() const noexcept { return enriched_count_; }
  [[nodiscard]] int dim() const noexcept { return standard_count_ + enriched_count_; }
  [[nodiscard]] const std::vector<int>& enriched_elements() const noexcept { return enriched_elements_; }

  [[nodiscard]] std::span<const LocalDof> local_dofs(int e) const {
    check_element(e);
    const auto b = static_cast<std::size_t>(local_offsets_[static_cast<std::size_t>(e)]);
    const auto f = static_cast<std::size_t>(local_offsets_[static_cast<std::size_t>(e) + 1]);
    return {local_.data() + b, f - b};
  }

  [[nodiscard]] const EnrichmentFunction* enrichment(int e) const {
    check_element(e);
    const int slot = enrichment_slot_[static_cast<std::size_t>(e)];
    return slot < 0 ? nullptr : &enrichments_[static_cast<std::size_t>(slot)];
  }

  /// Global index of standard shape k on element e, or -1 on the boundary.
  [[nodiscard]] int standard_index(int e, int k) const {
    check_local(e, k);
    return local_dofs(e)[static_cast<std::size_t>(k)].global;
  }

  /// Global index of enriched shape k on element e, or -1 if not enriched.
  [[nodiscard]] int enriched_index(int e, int k) const {
    check_local(e, k);
    const auto dofs = local_dofs(e);
    if (dofs.size() <= static_cast<std::size_t>(degree()) + 1) return -1;
    return dofs[static_cast<std::size_t>(degree() + 1 + k)].global;
  }

  [[nodiscard]] DofInfo dof_info(int g) const {
    check_global(g);
    const int p = degree();
    if (g < standard_count_) {
      const int node = g + 1;
      int e = node / p;
      int k = node % p;
      if (k == 0) {
        e -= 1;
        k = p;
      }
      return {false, e, k, lagrange_node(e, k)};
    }
    const int slot = (g - standard_count_) / (p + 1);
    const int k = (g - standard_count_) % (p + 1);
    const int e = enriched_elements_[static_cast<std::size_t>(slot)];
    return {true, e, k, lagrange_node(e, k)};
  }

  [[nodiscard]] double lagrange_node(int e, int k) const {
    const Interval el = mesh_.element(e);
    return el.left + el.length() * basis_.nodes()[static_cast<std::size_t>(k)];
  }

  /// Values and x-derivatives of all local basis functions of element e at
  /// x (in the element's closure). The side selects the branch of the
  /// enrichment derivative at the kink.
  void eval_element(int e, double x, Side side, std::span<double> values, std::span<double> derivs) const {
    const Interval el = mesh_.element(e);
    const int n_std = degree() + 1;
    const double inv_h = 1.0 / el.length();
    basis_.eval_all((x - el.left) * inv_h, values.first(static_cast<std::size_t>(n_std)),
                    derivs.first(static_cast<std::size_t>(n_std)));
    for (int k = 0; k < n_std; ++k) derivs[static_cast<std::size_t>(k)] *= inv_h;
    if (const auto* w = enrichment(e)) {
      const double wv = w->value(x);
      const double wd = w->branch_derivative(x, side);
      for (int k = 0; k < n_std; ++k) {
        const auto s = static_cast<std::size_t>(k);
        values[s + static_cast<std::size_t>(n_std)] = wv * values[s];
        derivs[s + static_cast<std::size_t>(n_std)] = wd * values[s] + wv * derivs[s];
      }
    }
  }

  /// Global basis function g at x with one-sided derivatives. Zero outside
  /// its support.
  [[nodiscard]] PointValue eval_dof(int g, double x) const {
    check_global(g);
    PointValue out;
    bool have_value = false;
    for (Side side : {Side::Left, Side::Right}) {
      const int e = mesh_.element_of(x, side);
      const auto dofs = local_dofs(e);
      for (std::size_t i = 0; i < dofs.size(); ++i) {
        if (dofs[i].global != g) continue;
        std::vector<double> v(dofs.size());
        std::vector<double> d(dofs.size());
        eval_element(e, x, side, v, d);
        if (!have_value) {
          out.value = v[i];
          have_value = true;
        }
        (side == Side::Left ? out.d_left : out.d_right) = d[i];
      }
    }
    return out;
  }

 private:
  void check_element(int e) const {
    if (e < 0 || e >= mesh_.num_elements()) throw Error(ErrorCode::IndexOutOfRange, "element " + std::to_string(e));
  }
  void check_local(int e, int k) const {
    check_element(e);
    if (k < 0 || k > degree()) throw Error(ErrorCode::IndexOutOfRange, "local index " + std::to_string(k));
  }
  void check_global(int g) const {
    if (g < 0 || g >= dim()) throw Error(ErrorCode::IndexOutOfRange, "global dof " + std::to_string(g));
  }

  Mesh mesh_;
  LagrangeBasis basis_;
  Method method_;
  int standard_count_ = 0;
  int enriched_count_ = 0;
  std::vector<EnrichmentFunction> enrichments_;
  std::vector<int> enrichment_slot_;
  std::vector<int> enriched_elements_;
  std::vector<LocalDof> local_;
  std::vector<int> local_offsets_;
};

using SpacePtr = std::shared_ptr<const Space>;

inline SpacePtr make_space(Mesh mesh, int degree, Method method) {
  return std::make_shared<const Space>(std::move(mesh), degree, method);
}

}  // namespace sgfem
