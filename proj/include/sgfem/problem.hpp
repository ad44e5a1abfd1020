#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sgfem/error.hpp"
#include "sgfem/mesh.hpp"

namespace sgfem {

/// kappa_j(x, u) or its u-derivative on one subdomain.
using PieceFunction = std::function<double(double x, double u)>;
using SourceFunction = std::function<double(double x)>;

struct CoefficientPiece {
  PieceFunction kappa;
  PieceFunction dkappa_du;
};

/// Piecewise coefficient kappa(x, u) = kappa_j(x, u) on Omega_j, split at
/// the interfaces. At an interface the caller states which side it means.
class CoefficientModel {
 public:
  CoefficientModel() = default;
  CoefficientModel(std::vector<double> interfaces, std::vector<CoefficientPiece> pieces)
      : interfaces_(std::move(interfaces)), pieces_(std::move(pieces)) {
    if (pieces_.size() != interfaces_.size() + 1) {
      throw Error(ErrorCode::PieceCountMismatch, std::to_string(pieces_.size()) + " pieces for " +
                                                     std::to_string(interfaces_.size()) + " interfaces");
    }
  }

  [[nodiscard]] const std::vector<double>& interfaces() const noexcept { return interfaces_; }
  [[nodiscard]] int num_pieces() const noexcept { return static_cast<int>(pieces_.size()); }
  [[nodiscard]] const CoefficientPiece& piece(int j) const { return pieces_.at(static_cast<std::size_t>(j)); }

  [[nodiscard]] int subdomain(double x, Side side = Side::Left) const noexcept {
    int j = 0;
    for (double g : interfaces_) {
      if (x > g || (x == g && side == Side::Right)) {
        ++j;
      } else {
        break;
      }
    }
    return j;
  }

  [[nodiscard]] double kappa(double x, double u, Side side = Side::Left) const {
    return pieces_[static_cast<std::size_t>(subdomain(x, side))].kappa(x, u);
  }
  [[nodiscard]] double dkappa_du(double x, double u, Side side = Side::Left) const {
    return pieces_[static_cast<std::size_t>(subdomain(x, side))].dkappa_du(x, u);
  }

  /// Sampled bounds over the solve's expected (x, u) range; metadata only.
  double kappa_min = 0.0;
  double kappa_max = 0.0;
  std::optional<double> lipschitz;

 private:
  std::vector<double> interfaces_;
  std::vector<CoefficientPiece> pieces_;
};

/// Closed-form solution honoring the subdomain pieces.
struct ReferenceSolution {
  struct Value {
    double u;
    double du;
  };
  std::function<Value(double x, Side side)> evaluate;
  std::vector<std::pair<std::string, double>> constants;

  [[nodiscard]] Value operator()(double x, Side side = Side::Left) const { return evaluate(x, side); }

  [[nodiscard]] double constant(const std::string& name) const {
    for (const auto& [k, v] : constants) {
      if (k == name) return v;
    }
    throw Error(ErrorCode::InvalidArgument, "no constant named " + name);
  }
};

struct Problem {
  std::string name;
  double length = 1.0;
  std::vector<double> interfaces;
  CoefficientModel model;
  SourceFunction source;
  std::optional<ReferenceSolution> reference;
  /// Residual of the constant solve (Example 1 only).
  double constant_residual = 0.0;
};

namespace detail {

/// Inverse Kirchhoff map for kappa = exp(a u): u = log(1 + a s) / a, and u = s
/// when a = 0.
struct ExpKirchhoff {
  double a;
  [[nodiscard]] bool valid(double s) const noexcept { return a == 0.0 || 1.0 + a * s > 0.0; }
  [[nodiscard]] double inverse(double s) const noexcept { return a == 0.0 ? s : std::log1p(a * s) / a; }
  [[nodiscard]] double inverse_derivative(double s) const noexcept { return a == 0.0 ? 1.0 : 1.0 / (1.0 + a * s); }
  [[nodiscard]] double forward(double u) const noexcept { return a == 0.0 ? u : std::expm1(a * u) / a; }
};

}  // namespace detail

/// Constants of the Example 1 closed form. With P(x) = -5x^3/6 + C1 x the
/// Kirchhoff potentials are P, P + D1 and P + 5/6 - C1 on the three
/// subdomains; C2 = D1 + 1/a1 is the form used in the closed formula.
struct Example1Constants {
  double c1 = 0.0;
  double d1 = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

namespace detail {

struct Example1System {
  std::array<double, 3> a;
  double g1 = 1.0 / 3.0;
  double g2 = 2.0 / 3.0;

  [[nodiscard]] static double poly(double x, double c1) noexcept { return -5.0 * x * x * x / 6.0 + c1 * x; }

  /// Residual of the two continuity conditions; nullopt when a log argument
  /// leaves its domain.
  [[nodiscard]] std::optional<std::array<double, 2>> residual(double c1, double d1) const {
    const ExpKirchhoff k0{a[0]}, k1{a[1]}, k2{a[2]};
    const double s0 = poly(g1, c1);
    const double s1 = poly(g1, c1) + d1;
    const double s1b = poly(g2, c1) + d1;
    const double s2 = poly(g2, c1) + 5.0 / 6.0 - c1;
    if (!k0.valid(s0) || !k1.valid(s1) || !k1.valid(s1b) || !k2.valid(s2)) return std::nullopt;
    // The whole graph must stay in the domain, not just the interface values.
    for (int i = 0; i <= 64; ++i) {
      const double t = static_cast<double>(i) / 64.0;
      if (!k0.valid(poly(g1 * t, c1))) return std::nullopt;
      if (!k1.valid(poly(g1 + (g2 - g1) * t, c1) + d1)) return std::nullopt;
      if (!k2.valid(poly(g2 + (1.0 - g2) * t, c1) + 5.0 / 6.0 - c1)) return std::nullopt;
    }
    return std::array<double, 2>{k0.inverse(s0) - k1.inverse(s1), k1.inverse(s1b) - k2.inverse(s2)};
  }

  [[nodiscard]] std::array<double, 4> jacobian(double c1, double d1) const {
    const ExpKirchhoff k0{a[0]}, k1{a[1]}, k2{a[2]};
    const double s0 = poly(g1, c1);
    const double s1 = s0 + d1;
    const double s1b = poly(g2, c1) + d1;
    const double s2 = poly(g2, c1) + 5.0 / 6.0 - c1;
    return {k0.inverse_derivative(s0) * g1 - k1.inverse_derivative(s1) * g1, -k1.inverse_derivative(s1),
            k1.inverse_derivative(s1b) * g2 - k2.inverse_derivative(s2) * (g2 - 1.0), k1.inverse_derivative(s1b)};
  }

  /// D1 making u continuous at g1 for a given C1.
  [[nodiscard]] std::optional<double> d1_from_c1(double c1) const {
    const ExpKirchhoff k0{a[0]}, k1{a[1]};
    const double s0 = poly(g1, c1);
    if (!k0.valid(s0)) return std::nullopt;
    return k1.forward(k0.inverse(s0)) - s0;
  }
};

inline double inf_norm(const std::array<double, 2>& r) { return std::max(std::abs(r[0]), std::abs(r[1])); }

}  // namespace detail

/// Damped Newton on the Example 1 continuity system from (c1, d1). Throws
/// ConstantSolveFailed when the start is infeasible or the iteration
/// stagnates above the tolerance.
inline Example1Constants solve_example1_constants_from(const std::array<double, 3>& a, double c1, double d1,
                                                      double tol = 1e-13, int max_iter = 100) {
  const detail::Example1System sys{a};
  auto r = sys.residual(c1, d1);
  if (!r) throw Error(ErrorCode::ConstantSolveFailed, "initial guess outside the logarithm domain");
  double norm = detail::inf_norm(*r);
  int it = 0;
  while (norm > tol) {
    if (it >= max_iter) {
      throw Error(ErrorCode::ConstantSolveFailed, "no convergence, final residual " + std::to_string(norm));
    }
    ++it;
    const auto J = sys.jacobian(c1, d1);
    const double det = J[0] * J[3] - J[1] * J[2];
    if (det == 0.0 || !std::isfinite(det)) {
      throw Error(ErrorCode::ConstantSolveFailed, "singular Jacobian, residual " + std::to_string(norm));
    }
    const double dc = (J[3] * (*r)[0] - J[1] * (*r)[1]) / det;
    const double dd = (-J[2] * (*r)[0] + J[0] * (*r)[1]) / det;
    double step = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      auto trial = sys.residual(c1 - step * dc, d1 - step * dd);
      if (trial && detail::inf_norm(*trial) < norm) {
        c1 -= step * dc;
        d1 -= step * dd;
        r = trial;
        norm = detail::inf_norm(*trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw Error(ErrorCode::ConstantSolveFailed, "Newton stagnated at residual " + std::to_string(norm));
    }
  }
  return {c1, d1, norm, it};
}

/// Example 1 constants: Newton from the linear-Poisson guess, falling back to
/// bisection on C1 (with D1 tied to continuity at the first interface) to
/// find a feasible start.
inline Example1Constants solve_example1_constants(const std::array<double, 3>& a) {
  try {
    return solve_example1_constants_from(a, 5.0 / 6.0, 0.0);
  } catch (const Error&) {
  }
  const detail::Example1System sys{a};
  auto scalar = [&](double c1) -> std::optional<double> {
    const auto d1 = sys.d1_from_c1(c1);
    if (!d1) return std::nullopt;
    const auto r = sys.residual(c1, *d1);
    if (!r) return std::nullopt;
    return (*r)[1];
  };
  // Scan for a sign change among feasible samples, then bisect. Where the
  // scan leaves the feasible set, the edge is located first because the
  // root may sit just inside it.
  auto feasible_edge = [&](double inside, double outside) {
    for (int k = 0; k < 80; ++k) {
      const double mid = 0.5 * (inside + outside);
      (scalar(mid) ? inside : outside) = mid;
    }
    return inside;
  };
  std::optional<std::pair<double, double>> prev;
  std::optional<std::pair<double, double>> bracket;
  double last_c1 = 0.0;
  for (int i = 0; i <= 4000 && !bracket; ++i) {
    const double c1 = -20.0 + 40.0 * i / 4000.0;
    const auto f = scalar(c1);
    if (!f) {
      if (prev) {
        const double edge = feasible_edge(prev->first, c1);
        if (const auto fe = scalar(edge); fe && (prev->second < 0.0) != (*fe < 0.0)) {
          bracket = std::make_pair(prev->first, edge);
        }
      }
      prev.reset();
      last_c1 = c1;
      continue;
    }
    if (!prev && i > 0) {
      const double edge = feasible_edge(c1, last_c1);
      if (const auto fe = scalar(edge); fe && (*fe < 0.0) != (*f < 0.0)) {
        bracket = std::make_pair(edge, c1);
        break;
      }
    }
    if (prev && (prev->second < 0.0) != (*f < 0.0)) bracket = std::make_pair(prev->first, c1);
    prev = std::make_pair(c1, *f);
    last_c1 = c1;
  }
  if (!bracket) throw Error(ErrorCode::ConstantSolveFailed, "could not bracket C1");
  double lo = bracket->first;
  double hi = bracket->second;
  const bool lo_negative = *scalar(lo) < 0.0;
  for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
    const double mid = 0.5 * (lo + hi);
    const auto f = scalar(mid);
    if (!f) break;
    if ((*f < 0.0) == lo_negative) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double c1 = 0.5 * (lo + hi);
  return solve_example1_constants_from(a, c1, *sys.d1_from_c1(c1));
}

/// Quasilinear problem with interfaces 1/3, 2/3, kappa_i = exp(a_i u) and
/// f = 5x.
inline Problem example1(double a0, double a1, double a2) {
  for (double a : {a0, a1, a2}) {
    if (!std::isfinite(a)) throw Error(ErrorCode::InvalidArgument, "Example 1 parameters must be finite");
  }
  const std::array<double, 3> a{a0, a1, a2};
  Problem prob;
  prob.name = "example1";
  prob.interfaces = {1.0 / 3.0, 2.0 / 3.0};
  std::vector<CoefficientPiece> pieces;
  for (double ai : a) {
    pieces.push_back({[ai](double, double u) { return std::exp(ai * u); },
                      [ai](double, double u) { return ai * std::exp(ai * u); }});
  }
  prob.model = CoefficientModel(prob.interfaces, std::move(pieces));
  prob.source = [](double x) { return 5.0 * x; };

  const auto k = solve_example1_constants(a);
  prob.constant_residual = k.residual;
  const double c1 = k.c1;
  const double d1 = k.d1;
  const std::array<double, 3> shift{0.0, d1, 5.0 / 6.0 - c1};
  const double g1 = prob.interfaces[0];
  const double g2 = prob.interfaces[1];

  ReferenceSolution ref;
  ref.evaluate = [a, shift, c1, g1, g2](double x, Side side) -> ReferenceSolution::Value {
    int j = 0;
    if (x > g1 || (x == g1 && side == Side::Right)) j = 1;
    if (x > g2 || (x == g2 && side == Side::Right)) j = 2;
    const detail::ExpKirchhoff kir{a[static_cast<std::size_t>(j)]};
    const double s = detail::Example1System::poly(x, c1) + shift[static_cast<std::size_t>(j)];
    const double ds = -2.5 * x * x + c1;
    return {kir.inverse(s), kir.inverse_derivative(s) * ds};
  };
  ref.constants = {{"C1", c1}, {"C2", a1 != 0.0 ? d1 + 1.0 / a1 : d1}, {"D1", d1}};
  prob.reference = std::move(ref);

  prob.model.lipschitz = std::nullopt;
  return prob;
}

/// Quasilinear problem with interfaces 1/3, 2/3, 8/9, kappa_i = a_i exp(-u)
/// and f = sin(pi x). Constants follow the closed formulas.
inline Problem example2(double a0, double a1, double a2, double a3) {
  const std::array<double, 4> a{a0, a1, a2, a3};
  for (double ai : a) {
    if (!(ai > 0.0) || !std::isfinite(ai)) {
      throw Error(ErrorCode::NonpositiveCoefficient, "Example 2 requires a_i > 0");
    }
  }
  using std::numbers::pi;
  Problem prob;
  prob.name = "example2";
  prob.interfaces = {1.0 / 3.0, 2.0 / 3.0, 8.0 / 9.0};
  std::vector<CoefficientPiece> pieces;
  for (double ai : a) {
    pieces.push_back({[ai](double, double u) { return ai * std::exp(-u); },
                      [ai](double, double u) { return -ai * std::exp(-u); }});
  }
  prob.model = CoefficientModel(prob.interfaces, std::move(pieces));
  prob.source = [](double x) { return std::sin(pi * x); };

  const double g1 = prob.interfaces[0];
  const double g2 = prob.interfaces[1];
  const double g3 = prob.interfaces[2];
  const double pi2 = pi * pi;
  auto s = [](double x) { return std::sin(pi * x); };
  const double p = s(g3) / (a3 * pi2) + (s(g2) - s(g3)) / (a2 * pi2) + (s(g1) - s(g2)) / (a1 * pi2) - s(g1) / (a0 * pi2);
  const double q = -g1 / (a0 * pi) + (g1 - g2) / (a1 * pi) + (g2 - g3) / (a2 * pi) + (g3 - 1.0) / (a3 * pi);
  const double r = 1.0 - g3 + a3 * g1 / a0 + a3 * (g2 - g1) / a1 + a3 * (g3 - g2) / a2;
  if (r == 0.0) throw Error(ErrorCode::DegenerateConstants, "r = 0 in the Example 2 constants");
  const double c2 = (p + q) / r;
  const double c1 = 2.0 / (a0 * pi) + a3 * c2 / a0;
  const double c3 = -s(g1) / (a0 * pi2) + g1 / (a0 * pi) + 1.0 - g1 * c1;
  const double c4 = (s(g1) - s(g2)) / (a1 * pi2) + (1.0 / (a1 * pi) + a3 * c2 / a1) * (g1 - g2) + c3;
  const double m = 1.0 + a3 * pi * c2;

  // u = -log(v) with v = exp(-u) piecewise smooth.
  ReferenceSolution ref;
  ref.evaluate = [=](double x, Side side) -> ReferenceSolution::Value {
    int j = 0;
    for (double g : {g1, g2, g3}) {
      if (x > g || (x == g && side == Side::Right)) ++j;
    }
    const double sx = std::sin(pi * x);
    const double cx = std::cos(pi * x);
    double v = 0.0;
    double dv = 0.0;
    switch (j) {
      case 0:
        v = -sx / (a0 * pi2) + x / (a0 * pi) - c1 * x + 1.0;
        dv = -cx / (a0 * pi) + 1.0 / (a0 * pi) - c1;
        break;
      case 1:
        v = (s(g1) - sx) / (a1 * pi2) + m * (g1 - x) / (a1 * pi) + c3;
        dv = -cx / (a1 * pi) - m / (a1 * pi);
        break;
      case 2:
        v = (s(g2) - sx) / (a2 * pi2) + m * (g2 - x) / (a2 * pi) + c4;
        dv = -cx / (a2 * pi) - m / (a2 * pi);
        break;
      default:
        v = -sx / (a3 * pi2) + (1.0 - x) / (a3 * pi) + c2 * (1.0 - x) + 1.0;
        dv = -cx / (a3 * pi) - 1.0 / (a3 * pi) - c2;
        break;
    }
    return {-std::log(v), -dv / v};
  };
  ref.constants = {{"C1", c1}, {"C2", c2}, {"C3", c3}, {"C4", c4}, {"p", p}, {"q", q}, {"r", r}};
  prob.reference = std::move(ref);
  return prob;
}

/// max/min of kappa over the reference solution's graph sampled at
/// `samples` + 1 uniform points.
inline double contrast_ratio(const Problem& prob, int samples = 10000) {
  if (!prob.reference) throw Error(ErrorCode::InvalidArgument, "contrast ratio needs a reference solution");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double x = prob.length * i / samples;
    const double u = (*prob.reference)(x).u;
    const double k = prob.model.kappa(x, u);
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  return hi / lo;
}

/// Sampling box used to validate user-supplied coefficient pieces.
struct SampleBox {
  double u_min = -1.0;
  double u_max = 1.0;
  int samples = 21;
};

/// Problem from user pieces. Each piece is sampled over its subdomain times
/// the u-range of `box`; any nonpositive value is rejected.
inline Problem custom_problem(std::vector<double> interfaces, std::vector<PieceFunction> kappa,
                              std::vector<PieceFunction> dkappa, SourceFunction f, double length = 1.0,
                              SampleBox box = {}) {
  if (kappa.size() != interfaces.size() + 1 || dkappa.size() != kappa.size()) {
    throw Error(ErrorCode::PieceCountMismatch, std::to_string(kappa.size()) + " pieces for " +
                                                   std::to_string(interfaces.size()) + " interfaces");
  }
  Problem prob;
  prob.name = "custom";
  prob.length = length;
  prob.interfaces = interfaces;
  std::vector<CoefficientPiece> pieces;
  double kmin = std::numeric_limits<double>::infinity();
  double kmax = 0.0;
  for (std::size_t j = 0; j < kappa.size(); ++j) {
    const double left = j == 0 ? 0.0 : interfaces[j - 1];
    const double right = j == interfaces.size() ? length : interfaces[j];
    for (int ix = 0; ix < box.samples; ++ix) {
      const double x = left + (right - left) * ix / std::max(1, box.samples - 1);
      for (int iu = 0; iu < box.samples; ++iu) {
        const double u = box.u_min + (box.u_max - box.u_min) * iu / std::max(1, box.samples - 1);
        const double k = kappa[j](x, u);
        if (!(k > 0.0) || !std::isfinite(k)) {
          throw Error(ErrorCode::NonpositiveCoefficient,
                      "piece " + std::to_string(j) + " is not positive at a sample point");
        }
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
      }
    }
    pieces.push_back({std::move(kappa[j]), std::move(dkappa[j])});
  }
  prob.model = CoefficientModel(std::move(interfaces), std::move(pieces));
  prob.model.kappa_min = kmin;
  prob.model.kappa_max = kmax;
  prob.source = std::move(f);
  return prob;
}

/// Custom family used by the CLI: kappa_j = scale_j * exp(rate_j * u) and a
/// polynomial source sum_k c_k x^k.
inline Problem custom_exponential_problem(std::vector<double> interfaces, const std::vector<double>& scales,
                                          const std::vector<double>& rates, std::vector<double> source_poly,
                                          double length = 1.0) {
  if (rates.size() != scales.size()) {
    throw Error(ErrorCode::PieceCountMismatch, "kappa scales and rates differ in length");
  }
  std::vector<PieceFunction> k;
  std::vector<PieceFunction> dk;
  for (std::size_t j = 0; j < scales.size(); ++j) {
    const double c = scales[j];
    const double r = rates[j];
    k.emplace_back([c, r](double, double u) { return c * std::exp(r * u); });
    dk.emplace_back([c, r](double, double u) { return c * r * std::exp(r * u); });
  }
  auto f = [coef = std::move(source_poly)](double x) {
    double v = 0.0;
    for (auto it = coef.rbegin(); it != coef.rend(); ++it) v = v * x + *it;
    return v;
  };
  return custom_problem(std::move(interfaces), std::move(k), std::move(dk), std::move(f), length);
}

}  // namespace sgfem
