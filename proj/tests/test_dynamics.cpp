#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "generators.hpp"
#include "nlch/diagnostics.hpp"
#include "nlch/dynamics.hpp"

using namespace nlch;
using nlch::testing::Gen;
using std::numbers::pi;

namespace {

struct Problem {
  SpectralSpace sp;
  Kernel k;
  Potential pot;
};

Problem problem(std::size_t n = 33, double sigma = 0.1) {
  auto sp = SpectralSpace::unit_interval(n);
  KernelSpec ks;
  ks.width = sigma;
  ks.mass = 10.0;
  auto k = build_kernel(ks, sp);
  return {sp, std::move(k), Potential::double_well()};
}

Field cosine(const SpectralSpace& sp, double a, double b, int k) {
  std::vector<double> v(sp.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a + b * std::cos(k * pi * sp.node(0, i));
  return Field(v);
}

}  // namespace

TEST(Params, Validation) {
  Params p;
  EXPECT_NO_THROW(p.validate());
  p.epsilon = 0.0;
  EXPECT_THROW(p.validate(), ParamError);
  p = Params{};
  p.alpha = 1.5;
  EXPECT_THROW(p.validate(), ParamError);
  p = Params{};
  p.delta = 0.2;
  EXPECT_THROW(p.validate(), ParamError);  // above delta0
  p = Params{};
  p.delta = 0.0;
  EXPECT_NO_THROW(p.validate());
  p.dt = -1;
  EXPECT_THROW(p.validate(), ParamError);
  p = Params{};
  p.xi = 1.0;
  EXPECT_THROW(p.validate(), ParamError);
  p = Params{};
  p.t_end = 1.0;
  p.dt = 1e-3;
  EXPECT_EQ(p.steps(), 1000u);
}

TEST(Params, RescaledViscosity) {
  EXPECT_DOUBLE_EQ(rescaled_viscosity(0.5, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(rescaled_viscosity(0.1, 0.0), 0.1);
}

TEST(Params, SchemeNames) {
  EXPECT_EQ(parse_scheme("imex"), Scheme::imex_stabilized);
  EXPECT_EQ(parse_scheme(to_string(Scheme::oracle_rk4)), Scheme::oracle_rk4);
  EXPECT_THROW(parse_scheme("euler"), ParamError);
}

TEST(Dynamics, ConstantStateIsExactFixedPoint) {
  const auto pr = problem();
  Params p;
  const State s0 = State::make(pr.sp, Field::constant(pr.sp, 0.3), Field::constant(pr.sp, -0.2));
  ImexStepper st(pr.k, pr.pot, p);
  State s = s0;
  for (int i = 0; i < 200; ++i) s = st.step(s);
  EXPECT_EQ(s.phi.vector(), s0.phi.vector());
  EXPECT_EQ(s.theta.vector(), s0.theta.vector());
}

TEST(Dynamics, HeatDecayOfThetaWhenDecoupled) {
  // delta = 0: eps theta_t = Lap theta, so a cosine mode decays by (1 + dt pi^2/eps)^-1 per step.
  const auto pr = problem();
  Params p;
  p.delta = 0.0;
  p.dt = 1e-3;
  p.epsilon = 0.1;
  const State s0 = State::make(pr.sp, Field::constant(pr.sp, 0.0), cosine(pr.sp, 0.0, 1.0, 1));
  ImexStepper st(pr.k, pr.pot, p);
  State s = s0;
  const int n = 50;
  for (int i = 0; i < n; ++i) s = st.step(s);
  const double factor = std::pow(1.0 + p.dt * pi * pi / p.epsilon, -n);
  for (std::size_t i = 0; i < s.theta.size(); ++i) EXPECT_NEAR(s.theta[i], factor * s0.theta[i], 1e-13);
}

TEST(Dynamics, DecoupledPhiIgnoresTheta) {
  const auto pr = problem();
  Params p;
  p.delta = 0.0;
  Gen g(5);
  const auto phi = g.smooth_field(pr.sp, 0.1, 0.3);
  State a = State::make(pr.sp, phi, Field::constant(pr.sp, 0.0));
  State b = State::make(pr.sp, phi, g.smooth_field(pr.sp, 0.2, 1.0));
  ImexStepper sa(pr.k, pr.pot, p), sb(pr.k, pr.pot, p);
  for (int i = 0; i < 100; ++i) {
    a = sa.step(a);
    b = sb.step(b);
  }
  EXPECT_EQ(a.phi.vector(), b.phi.vector());
}

TEST(Dynamics, RecoverMuSolvesEllipticProblem) {
  const auto pr = problem();
  Params p;
  Gen g(6);
  const State s = State::make(pr.sp, g.smooth_field(pr.sp, 0.1, 0.5), g.smooth_field(pr.sp, 0.0, 0.5));
  const auto mu = recover_mu(s, p, pr.k, pr.pot);
  // mu + alpha A_N mu = a phi - J*phi + F'(phi) - delta theta
  const auto Amu = pr.sp.apply_AN(mu.mu);
  const auto conv = pr.k.convolve(s.phi);
  for (std::size_t i = 0; i < s.phi.size(); ++i) {
    const double rhs = pr.k.a_field()[i] * s.phi[i] - conv[i] + pr.pot.dF(s.phi[i]) - p.delta * s.theta[i];
    EXPECT_NEAR(mu.mu[i] + p.alpha * Amu[i], rhs, 1e-10);
  }
  EXPECT_NEAR(mu.mean_mu, pr.sp.mean(mu.mu), 1e-13);
}

TEST(Dynamics, IncrementIsMinusDtLaplacianOfMu) {
  // With S = 0 the step is phi^{n+1} - phi^n = -dt A_N mu^{n+1/2} where the
  // viscous term uses the increment itself.
  const auto pr = problem();
  Params p;
  p.auto_stabilization = false;
  p.stabilization = 0.0;
  p.dt = 1e-3;
  Gen g(7);
  const State s = State::make(pr.sp, g.smooth_field(pr.sp, 0.0, 0.3), g.smooth_field(pr.sp, 0.0, 0.3));
  const State n = step_imex(s, p, pr.k, pr.pot);
  std::vector<double> d(s.phi.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (n.phi[i] - s.phi[i]) / p.dt;
  const auto conv = pr.k.convolve(s.phi);
  std::vector<double> mu(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    mu[i] = pr.k.a_field()[i] * s.phi[i] - conv[i] + pr.pot.dF(s.phi[i]) - p.delta * s.theta[i] + p.alpha * d[i];
  }
  const auto Amu = pr.sp.apply_AN(Field(mu));
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], -Amu[i], 1e-8 * (1 + std::abs(Amu[i])));
}

TEST(Dynamics, BlowUpReportsLastValidTime) {
  const auto pr = problem();
  Params p;
  p.auto_stabilization = false;
  State s = State::make(pr.sp, Field::constant(pr.sp, 0.0), Field::constant(pr.sp, 0.0));
  auto v = s.phi.vector();
  v[3] = 1e200;
  s = State::make(pr.sp, Field(v), s.theta, 0.25);
  try {
    step_imex(s, p, pr.k, pr.pot);
    FAIL() << "expected blow-up";
  } catch (const BlowUpError& e) {
    EXPECT_EQ(e.last_valid_time(), 0.25);
  }
}

TEST(Dynamics, IntegrateStopsWhenObserverSaysSo) {
  const auto pr = problem();
  Params p;
  p.t_end = 1.0;
  int calls = 0;
  const State s0 = State::make(pr.sp, Field::constant(pr.sp, 0.0), Field::constant(pr.sp, 0.0));
  const auto s = integrate(s0, p, pr.k, pr.pot, [&](const State&, const State&) { return ++calls < 5; });
  EXPECT_EQ(calls, 5);
  EXPECT_NEAR(s.t, 5 * p.dt, 1e-15);
}

TEST(Dynamics, MeanCap) {
  const auto pr = problem();
  const State s = State::make(pr.sp, Field::constant(pr.sp, 2.0), Field::constant(pr.sp, 0.0));
  EXPECT_THROW(check_mean_cap(pr.sp, s, 1.0), ParamError);
  EXPECT_NO_THROW(check_mean_cap(pr.sp, s, 3.0));
}

TEST(Dynamics, SteadyStateDetection) {
  const auto pr = problem();
  Params p;
  const State s0 = State::make(pr.sp, Field::constant(pr.sp, 0.1), Field::constant(pr.sp, 0.0));
  std::vector<State> traj{s0};
  integrate(s0, p, pr.k, pr.pot, [&](const State&, const State& n) {
    traj.push_back(n);
    return traj.size() < 80;
  });
  const auto ss = detect_steady_state(pr.sp, traj, p.dt, 1e-8);
  ASSERT_TRUE(ss.has_value());
  EXPECT_EQ(ss->step, 50u);
  std::vector<State> few(traj.begin(), traj.begin() + 5);
  EXPECT_THROW(detect_steady_state(pr.sp, few, p.dt, 1e-8), std::invalid_argument);
}

TEST(Dynamics, RescaledStepFreezesTheta) {
  const auto pr = problem();
  Params p;
  Gen g(8);
  const State s = State::make(pr.sp, g.smooth_field(pr.sp, 0.0, 0.3), g.smooth_field(pr.sp, 0.0, 0.3));
  const State n = rescaled_viscous_ch_step(s, 0.05, p, pr.k, pr.pot);
  EXPECT_EQ(n.theta.vector(), s.theta.vector());
  EXPECT_NE(n.phi.vector(), s.phi.vector());
}

// Properties over random data.

TEST(DynamicsProperty, MeansConservedExactly) {
  const auto pr = problem();
  for (int c = 0; c < 10; ++c) {
    Gen g(1400 + c);
    Params p;
    p.alpha = g.uniform(0.05, 1.0);
    p.epsilon = g.uniform(0.05, 1.0);
    p.delta0 = 1.0;
    p.delta = g.uniform(0.0, 1.0);
    const State s0 = State::make(pr.sp, g.smooth_field(pr.sp, g.uniform(-0.5, 0.5), 0.5),
                                 g.smooth_field(pr.sp, g.uniform(-0.5, 0.5), 0.5));
    ImexStepper st(pr.k, pr.pot, p);
    State s = s0;
    for (int i = 0; i < 300; ++i) {
      s = st.step(s);
      ASSERT_NEAR(pr.sp.mean(s.phi), s0.M0, 1e-14) << "seed " << 1400 + c;
      ASSERT_NEAR(pr.sp.mean(s.theta), s0.N0, 1e-14) << "seed " << 1400 + c;
    }
  }
}

TEST(DynamicsProperty, EnergyNonincreasingWithAutoStabilization) {
  const auto pr = problem();
  for (int c = 0; c < 10; ++c) {
    Gen g(1500 + c);
    Params p;
    p.dt = g.log_uniform(1e-4, 5e-3);
    p.alpha = g.uniform(0.05, 1.0);
    p.epsilon = g.uniform(0.05, 1.0);
    const State s0 = State::make(pr.sp, g.smooth_field(pr.sp, g.uniform(-0.3, 0.3), 0.5),
                                 g.smooth_field(pr.sp, 0.0, 0.5));
    ImexStepper st(pr.k, pr.pot, p);
    State s = s0;
    double e = energy_eps(s, p, pr.k, pr.pot);
    for (int i = 0; i < 300; ++i) {
      s = st.step(s);
      const double en = energy_eps(s, p, pr.k, pr.pot);
      ASSERT_LE(en - e, 1e-10) << "seed " << 1500 + c << " step " << i;
      e = en;
    }
  }
}

TEST(DynamicsProperty, DeterministicReplay) {
  const auto pr = problem();
  Gen g(1600);
  Params p;
  const State s0 = State::make(pr.sp, g.field(pr.sp, 0.01), Field::constant(pr.sp, 0.0));
  ImexStepper a(pr.k, pr.pot, p), b(pr.k, pr.pot, p);
  State x = s0, y = s0;
  for (int i = 0; i < 200; ++i) {
    x = a.step(x);
    y = b.step(y);
  }
  EXPECT_EQ(x.phi.vector(), y.phi.vector());
  EXPECT_EQ(x.theta.vector(), y.theta.vector());
}
