#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nlcm/nlcm.hpp"
#include "support/fixtures.hpp"

namespace nlcm {
namespace {

JetState pu_state(double q, double q1, double q2) { return JetState{0.0, {{q}, {q1}, {q2}}}; }

TEST(EvalLagrangian, PaisUhlenbeckValues) {
  const auto pu = make_pais_uhlenbeck(1.0, 2.0);
  EXPECT_DOUBLE_EQ(eval_lagrangian(pu, pu_state(1, 0, 0)), 2.0);
  EXPECT_DOUBLE_EQ(eval_lagrangian(pu, pu_state(0, 0, 0)), 0.0);
}

TEST(EvalLagrangian, Harmonic) {
  EXPECT_DOUBLE_EQ(eval_lagrangian(make_harmonic(), JetState{0.0, {{0.0}, {1.0}}}), 0.5);
}

TEST(EvalLagrangian, Errors) {
  const auto pu = make_pais_uhlenbeck(1.0, 2.0);
  EXPECT_THROW(eval_lagrangian(pu, JetState{0.0, {{1.0}, {0.0}}}), ArityError);
  EXPECT_THROW(eval_lagrangian(pu, JetState{0.0, {{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}}}),
               DimensionError);
  const auto bad = LagrangianSpec::from_generic(1, 1, [](double, const auto& q) { return log(q[0][0]); });
  EXPECT_THROW(eval_lagrangian(bad, JetState{0.0, {{-1.0}, {0.0}}}), NumericError);
}

TEST(PartialWrtJet, PaisUhlenbeckSlots) {
  const auto pu = make_pais_uhlenbeck(1.0, 2.0);
  EXPECT_DOUBLE_EQ(partial_wrt_jet(pu, pu_state(0, 0, 3), 2)[0], 3.0);
  EXPECT_DOUBLE_EQ(partial_wrt_jet(pu, pu_state(1, 0, 0), 0)[0], 4.0);
  EXPECT_DOUBLE_EQ(partial_wrt_jet(pu, pu_state(0, 2, 0), 1)[0], -10.0);
}

TEST(PartialWrtJet, AbsentVariableGivesZero) {
  const auto l = LagrangianSpec::from_generic(1, 2, [](double, const auto& q) {
    return q[0][0] * q[0][0] * q[0][1];
  });
  const auto p = partial_wrt_jet(l, JetState{0.0, {{1.3, -0.4}, {2.0, 7.0}}}, 1);
  EXPECT_EQ(p, (Vector{0.0, 0.0}));
  EXPECT_THROW(partial_wrt_jet(l, JetState{0.0, {{1.0, 0.0}, {0.0, 0.0}}}, 2), IndexError);
}

// Dual partials against central differences of eval, 100 random states per system.
TEST(PartialWrtJet, MatchesCentralDifferences) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const std::vector<LagrangianSpec> specs = {
      make_pais_uhlenbeck(1.0, 2.0, 2), make_harmonic(),
      make_central_force(1.3, quadratic_radial(0.7)),
      make_viscous(1.0, 0.5, quartic_potential(0.25), 2),
      testing::PolyLagrangian::random(rng).spec()};
  for (const auto& spec : specs) {
    for (int draw = 0; draw < 100; ++draw) {
      JetState s;
      s.t = u(rng);
      s.jets.assign(spec.order() + 1, Vector(spec.dim()));
      for (auto& v : s.jets) {
        for (double& x : v) x = u(rng);
      }
      for (std::size_t j = 0; j <= spec.order(); ++j) {
        const Vector exact = partial_wrt_jet(spec, s, j);
        for (std::size_t c = 0; c < spec.dim(); ++c) {
          const double h = 1e-5;
          JetState a = s, b = s;
          a.jets[j][c] += h;
          b.jets[j][c] -= h;
          const double fd = (eval_lagrangian(spec, a) - eval_lagrangian(spec, b)) / (2 * h);
          EXPECT_NEAR(exact[c], fd, 1e-6 * std::max(1.0, std::abs(fd)))
              << spec.name() << " slot " << j << " coord " << c;
        }
      }
    }
  }
}

TEST(PartialWrtJet, IsLinearInTheLagrangian) {
  const double alpha = 1.7;
  const double beta = -0.3;
  auto l1 = [](double, const auto& q) { return q[1][0] * q[1][0] * q[0][0]; };
  auto l2 = [](double t, const auto& q) { return sin(q[0][0]) * t + q[1][0]; };
  const auto s1 = LagrangianSpec::from_generic(1, 1, l1);
  const auto s2 = LagrangianSpec::from_generic(1, 1, l2);
  const auto combo = LagrangianSpec::from_generic(
      1, 1, [=](double t, const auto& q) { return alpha * l1(t, q) + beta * l2(t, q); });
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 20; ++i) {
    const JetState s{u(rng), {{u(rng)}, {u(rng)}}};
    for (std::size_t j = 0; j <= 1; ++j) {
      const double lhs = partial_wrt_jet(combo, s, j)[0];
      const double rhs = alpha * partial_wrt_jet(s1, s, j)[0] + beta * partial_wrt_jet(s2, s, j)[0];
      EXPECT_NEAR(lhs, rhs, 1e-14 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST(TotalDerivative, CosineSlopeAtZero) {
  const auto traj = testing::cos_trajectory(1, -1.0, 1.0);
  const auto d = total_derivative_along(traj, [](const JetState& s) { return s.jets[0]; }, 1, 0.0);
  EXPECT_NEAR(d[0], 0.0, 1e-6);
}

TEST(TotalDerivative, ConstantMapHasNoDerivative) {
  const auto traj = testing::cos_trajectory(1, 0.0, 2.0);
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto d =
        total_derivative_along(traj, [](const JetState&) { return Vector{3.0, -1.0}; }, k, 1.0);
    EXPECT_NEAR(d[0], 0.0, 1e-9);
    EXPECT_NEAR(d[1], 0.0, 1e-9);
  }
}

TEST(TotalDerivative, SquareOfLinearMotion) {
  const auto traj = sample_trajectory(1, [](double t) { return std::vector<Vector>{{t}, {1.0}}; }, 0.0,
                                      6.0, 61);
  const auto d = total_derivative_along(
      traj, [](const JetState& s) { return Vector{s.jets[0][0] * s.jets[0][0]}; }, 1, 3.0);
  EXPECT_NEAR(d[0], 6.0, 1e-9);
}

TEST(TotalDerivative, StencilMustFitInsideSpan) {
  const auto traj = testing::cos_trajectory(1, 0.0, 1.0);
  auto f = [](const JetState& s) { return s.jets[0]; };
  EXPECT_THROW(total_derivative_along(traj, f, 1, 0.0), SpanError);
  EXPECT_THROW(total_derivative_along(traj, f, 2, 1.0), SpanError);
  EXPECT_NO_THROW(total_derivative_along(traj, f, 0, 1.0));
}

TEST(ElResidual, ClosedFormSolutions) {
  const auto pu = make_pais_uhlenbeck(1.0, 2.0);
  const auto cos2 = testing::cos_trajectory(2, 0.0, 6.0);
  EXPECT_NEAR(el_residual(pu, cos2, 3.0)[0], 0.0, 1e-6);

  const auto cos1 = testing::cos_trajectory(1, 0.0, 6.0);
  EXPECT_NEAR(el_residual(make_harmonic(), cos1, 2.5)[0], 0.0, 1e-5);

  const auto line = sample_trajectory(
      1, [](double t) { return std::vector<Vector>{{1 + 2 * t, -t}, {2.0, -1.0}}; }, 0.0, 2.0, 21);
  const auto r = el_residual(make_free_particle(2), line, 1.0);
  EXPECT_NEAR(r[0], 0.0, 1e-9);
  EXPECT_NEAR(r[1], 0.0, 1e-9);
}

TEST(ElResidual, NonSolutionIsDetected) {
  const auto cos1 = testing::cos_trajectory(1, 0.0, 6.0);
  // q = cos t does not solve q'' = 0.
  EXPECT_GT(std::abs(el_residual(make_free_particle(), cos1, 1.0)[0]), 0.1);
}

// Integrated catalog trajectories satisfy their own Euler-Lagrange equation.
TEST(ElResidual, CatalogTrajectoriesAreSolutions) {
  struct Case {
    LagrangianSpec spec;
    JetState initial;
  };
  std::vector<Case> cases = {
      {make_harmonic(), {0.0, {{1.0}, {0.3}}}},
      {make_free_particle(2), {0.0, {{0.0, 1.0}, {1.0, -0.5}}}},
      {make_central_force(1.0, quadratic_radial()), {0.0, {{1.0, 0.2}, {-0.1, 0.9}}}},
      {make_viscous(1.0, 0.5, quadratic_potential(), 2), {0.0, {{1.0, -0.5}, {0.2, 0.4}}}},
      {make_pais_uhlenbeck(1.0, 2.0), {0.0, {{1.0}, {0.0}, {-1.0}, {0.0}}}},
      {make_pais_uhlenbeck(1.0, 2.0, 2), {0.0, {{1.0, 0.2}, {0.1, 1.0}, {-1.0, 0.3}, {0.5, -1.0}}}},
  };
  for (const auto& c : cases) {
    const auto traj = integrate(c.spec, c.initial, 10.0);
    double worst = 0.0;
    for (int i = 1; i <= 20; ++i) {
      const double t = 0.5 + 9.0 * (i - 1) / 19.0;
      worst = std::max(worst, norm(el_residual(c.spec, traj, t)));
    }
    EXPECT_LE(worst, 1e-4) << c.spec.name();
  }
}

TEST(StencilOptions, StepFollowsNoiseLevel) {
  const auto exact = testing::cos_trajectory(1, 0.0, 1.0);
  StencilOptions o;
  EXPECT_NEAR(o.step(1, exact), std::pow(1e-13, 0.2), 1e-15);
  o.noise = 1e-40;
  EXPECT_EQ(o.step(1, exact), o.min_step);
}

}  // namespace
}  // namespace nlcm
