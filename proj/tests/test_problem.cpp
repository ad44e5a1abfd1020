#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sgfem/problem.hpp"

using namespace sgfem;
using std::numbers::pi;

namespace {

const Problem& ex1() {
  static const Problem p = example1(0.01, -6.0, 1.0);
  return p;
}

const Problem& ex2() {
  static const Problem p = example2(1.0, 0.05, 100.0, 0.1);
  return p;
}

// Boundary values, continuity and flux continuity of a reference solution.
void check_reference_invariants(const Problem& prob) {
  const auto& ref = *prob.reference;
  EXPECT_NEAR(ref(0.0).u, 0.0, 1e-10);
  EXPECT_NEAR(ref(prob.length, Side::Left).u, 0.0, 1e-10);
  for (double g : prob.interfaces) {
    const auto l = ref(g, Side::Left);
    const auto r = ref(g, Side::Right);
    EXPECT_NEAR(l.u, r.u, 1e-10) << g;
    const double fl = prob.model.kappa(g, l.u, Side::Left) * l.du;
    const double fr = prob.model.kappa(g, r.u, Side::Right) * r.du;
    EXPECT_NEAR(fl, fr, 1e-8) << g;
  }
}

// -(kappa u')' + ... = f at interior points, by 5-point differences of the
// flux built from the analytic derivative.
double max_strong_residual(const Problem& prob) {
  const auto& ref = *prob.reference;
  std::vector<double> bounds{0.0};
  bounds.insert(bounds.end(), prob.interfaces.begin(), prob.interfaces.end());
  bounds.push_back(prob.length);
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
    const double a = bounds[j], b = bounds[j + 1];
    const double d = 1e-3 * (b - a);
    auto flux = [&](double x) {
      const auto v = ref(x);
      return prob.model.kappa(x, v.u) * v.du;
    };
    for (int i = 1; i <= 50; ++i) {
      const double x = a + (b - a) * i / 51.0;
      const double dflux =
          (-flux(x + 2 * d) + 8 * flux(x + d) - 8 * flux(x - d) + flux(x - 2 * d)) / (12 * d);
      worst = std::max(worst, std::abs(-dflux - prob.source(x)));
    }
  }
  return worst;
}

}  // namespace

TEST(Example1, LinearLimitIsPoisson) {
  const Problem p = example1(0.0, 0.0, 0.0);
  EXPECT_NEAR(p.reference->constant("C1"), 5.0 / 6.0, 1e-13);
  for (double x : {0.1, 0.3, 0.5, 0.77, 0.95}) {
    const auto v = (*p.reference)(x);
    EXPECT_NEAR(v.u, 5.0 / 6.0 * (x - x * x * x), 1e-13);
    EXPECT_NEAR(v.du, 5.0 / 6.0 * (1 - 3 * x * x), 1e-13);
  }
}

TEST(Example1, FrozenConstants) {
  // Independent high-precision root of the constant system (50 digits).
  EXPECT_NEAR(ex1().reference->constant("C1"), 0.71077056405585168640709, 1e-12);
  EXPECT_NEAR(ex1().reference->constant("C2"), -0.25452771867365765290963, 1e-12);
  EXPECT_NEAR((*ex1().reference)(1.0 / 3.0).u, 0.20584731279212347, 1e-12);
  EXPECT_LE(ex1().constant_residual, 1e-13);
}

TEST(Example1, ReferenceInvariants) { check_reference_invariants(ex1()); }

TEST(Example1, ContrastRatio) { EXPECT_NEAR(contrast_ratio(ex1()), 120.2866, 0.05); }

TEST(Example1, StrongFormResidual) { EXPECT_LE(max_strong_residual(ex1()), 1e-6); }

TEST(Example1, RandomStartsAgreeOrFail) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const std::array<double, 3> a{0.01, -6.0, 1.0};
  const double c1 = ex1().reference->constant("C1");
  const double c2 = ex1().reference->constant("C2");
  int agreed = 0;
  for (int k = 0; k < 10; ++k) {
    const double s1 = u(rng), s2 = u(rng);
    try {
      const auto r = solve_example1_constants_from(a, s1, s2 - 1.0 / a[1]);
      EXPECT_NEAR(r.c1, c1, 1e-10);
      EXPECT_NEAR(r.d1 + 1.0 / a[1], c2, 1e-10);
      ++agreed;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConstantSolveFailed);
    }
  }
  SUCCEED() << agreed << " of 10 starts converged";
}

TEST(Example1, OtherParameterSetsSatisfyInvariants) {
  for (auto a : {std::array<double, 3>{1.0, 1.0, 1.0}, std::array<double, 3>{0.5, -2.0, 0.0},
                 std::array<double, 3>{-1.0, 2.0, 0.3}}) {
    const Problem p = example1(a[0], a[1], a[2]);
    check_reference_invariants(p);
    EXPECT_LE(max_strong_residual(p), 1e-6);
  }
}

TEST(Example1, NonFiniteParameter) { EXPECT_THROW((void)example1(NAN, 0.0, 0.0), Error); }

TEST(Example2, FrozenConstants) {
  // Closed formulas evaluated independently in 30-digit arithmetic.
  const auto& ref = *ex2().reference;
  EXPECT_NEAR(ref.constant("C1"), 0.350272466323798040, 1e-12);
  EXPECT_NEAR(ref.constant("C2"), -2.86347306043783303, 1e-12);
  EXPECT_NEAR(ref.constant("C3"), 0.901599087644224715, 1e-12);
  EXPECT_NEAR(ref.constant("C4"), 0.688515220044175593, 1e-12);
}

TEST(Example2, ReferenceInvariants) { check_reference_invariants(ex2()); }

TEST(Example2, ContrastRatio) { EXPECT_NEAR(contrast_ratio(ex2()), 2684.266, 0.5); }

TEST(Example2, StrongFormResidual) { EXPECT_LE(max_strong_residual(ex2()), 1e-6); }

TEST(Example2, SingleMaterialLimit) {
  const Problem p = example2(1.0, 1.0, 1.0, 1.0);
  check_reference_invariants(p);
  EXPECT_LE(max_strong_residual(p), 1e-6);
  // kappa = e^{-u}: e^{-u} u' is continuous and the solution is smooth.
  const auto& ref = *p.reference;
  for (double g : p.interfaces) EXPECT_NEAR(ref(g, Side::Left).du, ref(g, Side::Right).du, 1e-10);
}

TEST(Example2, NonpositiveParameter) {
  try {
    (void)example2(1.0, 0.0, 1.0, 1.0);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonpositiveCoefficient);
  }
}

TEST(Coefficients, DerivativeMatchesFiniteDifference) {
  for (const Problem* p : {&ex1(), &ex2()}) {
    for (double x : {0.1, 0.5, 0.8, 0.95}) {
      for (double u : {-0.4, 0.0, 0.3, 1.1}) {
        const double d = 1e-5;
        const double fd = (p->model.kappa(x, u + d) - p->model.kappa(x, u - d)) / (2 * d);
        EXPECT_NEAR(p->model.dkappa_du(x, u), fd, 1e-7 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(Coefficients, SideAtInterface) {
  const auto& m = ex2().model;
  const double g = 1.0 / 3.0;
  EXPECT_DOUBLE_EQ(m.kappa(g, 0.0, Side::Left), 1.0);
  EXPECT_DOUBLE_EQ(m.kappa(g, 0.0, Side::Right), 0.05);
}

TEST(CustomProblem, LinearTwoPiece) {
  const Problem p = custom_problem({0.5}, {[](double, double) { return 1.0; }, [](double, double) { return 2.0; }},
                                   {[](double, double) { return 0.0; }, [](double, double) { return 0.0; }},
                                   [](double) { return 1.0; });
  EXPECT_DOUBLE_EQ(p.model.kappa(0.25, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(p.model.kappa(0.75, 3.0), 2.0);
  EXPECT_DOUBLE_EQ(p.model.kappa_min, 1.0);
  EXPECT_DOUBLE_EQ(p.model.kappa_max, 2.0);
  EXPECT_FALSE(p.reference.has_value());
}

TEST(CustomProblem, PieceCountMismatch) {
  try {
    (void)custom_problem({0.3, 0.7}, {[](double, double) { return 1.0; }, [](double, double) { return 2.0; }},
                         {[](double, double) { return 0.0; }, [](double, double) { return 0.0; }},
                         [](double) { return 1.0; });
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PieceCountMismatch);
  }
  EXPECT_THROW(CoefficientModel({0.5}, {}), Error);
}

TEST(CustomProblem, NonpositivePiece) {
  try {
    (void)custom_problem({0.5}, {[](double, double) { return 1.0; }, [](double x, double) { return x > 0.9 ? -1.0 : 1.0; }},
                         {[](double, double) { return 0.0; }, [](double, double) { return 0.0; }},
                         [](double) { return 1.0; });
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonpositiveCoefficient);
  }
}

TEST(CustomProblem, ExponentialFamily) {
  const Problem p = custom_exponential_problem({0.4}, {1.0, 3.0}, {0.5, -1.0}, {1.0, 2.0});
  EXPECT_NEAR(p.model.kappa(0.2, 1.0), std::exp(0.5), 1e-15);
  EXPECT_NEAR(p.model.dkappa_du(0.6, 1.0), -3.0 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(p.source(0.5), 2.0, 1e-15);
  EXPECT_THROW((void)custom_exponential_problem({0.4}, {1.0, 3.0}, {0.5}, {1.0}), Error);
}
