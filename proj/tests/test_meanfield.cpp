#include <gtest/gtest.h>

#include "agrisim/meanfield.hpp"

using namespace agrisim;
using namespace agrisim::mf;

namespace {

// Independent re-derivation of the vector field, written from the expanded
// algebra rather than the factored library forms.
MFDeriv rederive(const MFState& s, const MFParams& p) {
  const double A = s.A, P1 = s.P1, P3 = s.P3;
  const double P2 = 1.0 - P1 - P3;
  const double H = p.eta_F * (1.0 - A) + p.eta_A * A;

  MFDeriv d;
  d.dP3 = p.mu - p.mu * P3 - p.kappa * H * P3;
  d.dP1 = P1 * P2 * (p.delta_f0 + p.v * p.chi * A) + p.u * p.omega * A * P2 - p.mu * P1 +
          p.kappa * H * P3 * P1 / std::max(1.0 - P3, 1e-9);
  double s_val = 0.0;
  switch (p.s_form) {
    case SearchCostForm::InverseDensity: s_val = p.s_scale / std::max(P3, MFParams::kP3Floor); break;
    case SearchCostForm::Linear: s_val = 1.0 - P3; break;
    case SearchCostForm::Saturating: s_val = 1.0 / (1.0 + P3); break;
  }
  const double payoff_gap = (p.f1_0 - p.f2_0) * P1 - p.c_u * p.u * P2 - p.c_v * p.v +
                            p.c_s * s_val;
  d.dA = A * (1.0 - A) * payoff_gap;
  return d;
}

MFState random_simplex_state(Rng& rng) {
  MFState s;
  s.A = rng.uniform();
  const double p1 = rng.uniform(), p3 = rng.uniform();
  if (p1 + p3 > 1.0) {
    s.P1 = 1.0 - p1;
    s.P3 = 1.0 - p3;
  } else {
    s.P1 = p1;
    s.P3 = p3;
  }
  return s;
}

}  // namespace

TEST(Derivatives, MatchIndependentRederivation) {
  Rng rng(100);
  MFParams p;  // canonical parameters
  for (int i = 0; i < 100; ++i) {
    const MFState s = random_simplex_state(rng);
    const MFDeriv a = mf_derivatives(s, p);
    const MFDeriv b = rederive(s, p);
    EXPECT_NEAR(a.dA, b.dA, 1e-12);
    EXPECT_NEAR(a.dP1, b.dP1, 1e-12);
    EXPECT_NEAR(a.dP3, b.dP3, 1e-12);
  }
}

TEST(Derivatives, ReplicatorBoundariesAreExact) {
  Rng rng(101);
  MFParams p;
  for (double a : {0.0, 1.0}) {
    for (int i = 0; i < 20; ++i) {
      MFState s = random_simplex_state(rng);
      s.A = a;
      EXPECT_DOUBLE_EQ(mf_derivatives(s, p).dA, 0.0);
    }
  }
}

TEST(Derivatives, PayoffGapIsFreeOfSharedWildBenefit) {
  Rng rng(102);
  MFParams p1;
  MFParams p2;
  p2.b3 = 7.5;
  for (int i = 0; i < 50; ++i) {
    const MFState s = random_simplex_state(rng);
    const Payoffs a = mf_payoffs(s, p1);
    const Payoffs b = mf_payoffs(s, p2);
    EXPECT_NEAR(a.pi_A - a.pi_F, b.pi_A - b.pi_F, 1e-12);
  }
}

TEST(Derivatives, OffSimplexIsAHardError) {
  MFParams p;
  EXPECT_THROW(mf_derivatives({-0.01, 0.2, 0.3}, p), std::domain_error);
  EXPECT_THROW(mf_derivatives({0.5, 0.7, 0.5}, p), std::domain_error);
  EXPECT_NO_THROW(mf_derivatives({0.5, 0.2, 0.3}, p));
}

TEST(Params, ValidationEnforcesFitnessSplitConsistency) {
  MFParams p;
  p.f1_0 = 0.5;  // delta_f0 stays -0.6: inconsistent
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.f1_0 = 0.4;
  EXPECT_NO_THROW(p.validate());
}

TEST(Equilibria, ForagingBranchClosedForm) {
  MFParams p;  // mu = 1.2, kappa = 1, eta_F = 1
  const auto eqs = equilibria(p);
  bool found = false;
  for (const auto& eq : eqs) {
    if (eq.state.A == 0.0 && std::abs(eq.state.P1) < 1e-9) {
      found = true;
      EXPECT_NEAR(eq.state.P3, 6.0 / 11.0, 1e-12);  // mu/(mu + kappa*eta_F)
      EXPECT_EQ(eq.stability, Stability::Stable);
      EXPECT_LT(eq.max_real_eig, 0.0);
    }
  }
  EXPECT_TRUE(found);
}

TEST(Equilibria, AgriculturalBranchIsStableAtCanonicalParameters) {
  MFParams p;
  bool found = false;
  for (const auto& eq : equilibria(p)) {
    if (eq.state.A == 1.0 && eq.state.P1 > 0.1) {
      found = true;
      EXPECT_NEAR(eq.state.P3, 1.2 / (1.2 + 1.4), 1e-12);
      EXPECT_NEAR(eq.state.P1, 1.0 - 1.2 / (1.2 + 1.4), 1e-9);  // weed driven to zero
      EXPECT_EQ(eq.stability, Stability::Stable);
    }
  }
  EXPECT_TRUE(found);
}

TEST(Equilibria, ReportedStableStatesHaveNegativeEigenvalues) {
  MFParams p;
  for (const auto& eq : equilibria(p))
    if (eq.stability == Stability::Stable) EXPECT_LT(eq.max_real_eig, 0.0);
}

TEST(Integrate, EquilibriumIsStationary) {
  MFParams p;
  MFState eq{0.0, 0.0, p.mu / (p.mu + p.kappa * p.eta_F)};
  IntegratorOptions opt;
  opt.out_dt = 100.0;
  const Trajectory traj = integrate(eq, p, 1000.0, opt);
  for (const auto& pt : traj) {
    EXPECT_NEAR(pt.A, eq.A, 1e-6);
    EXPECT_NEAR(pt.P1, eq.P1, 1e-6);
    EXPECT_NEAR(pt.P3, eq.P3, 1e-6);
  }
}

TEST(Integrate, ExactBoundaryStartStaysOnBoundary) {
  MFParams p;
  MFState s{0.0, 0.3, 0.4};
  IntegratorOptions opt;
  opt.out_dt = 50.0;
  const Trajectory traj = integrate(s, p, 500.0, opt);
  for (const auto& pt : traj) EXPECT_DOUBLE_EQ(pt.A, 0.0);
}

TEST(Integrate, SimplexPreservedAlongRampTrajectory) {
  MFParams p;
  ForcingSchedule sched;
  IntegratorOptions opt;
  opt.out_dt = 5.0;
  const HysteresisResult res = hysteresis_sweep(p, sched, 0.5, opt);
  for (const auto& pt : res.traj) {
    EXPECT_GE(pt.A, -1e-9);
    EXPECT_LE(pt.A, 1.0 + 1e-9);
    EXPECT_GE(pt.P1, -1e-9);
    EXPECT_GE(pt.P3, -1e-9);
    EXPECT_LE(pt.P1 + pt.P3, 1.0 + 1e-6);
  }
}

TEST(Integrate, WildBenefitInvarianceOfTrajectories) {
  MFParams a;
  MFParams b;
  b.b3 = 5.0;
  const MFState init = initial_near_foraging(a, a.mu);
  IntegratorOptions opt;
  opt.out_dt = 10.0;
  const Trajectory ta = integrate(init, a, 300.0, opt);
  const Trajectory tb = integrate(init, b, 300.0, opt);
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    EXPECT_NEAR(ta[i].A, tb[i].A, 1e-8);
    EXPECT_NEAR(ta[i].P1, tb[i].P1, 1e-8);
    EXPECT_NEAR(ta[i].P3, tb[i].P3, 1e-8);
  }
}

TEST(Hysteresis, CanonicalRampLocksIn) {
  MFParams p;
  ForcingSchedule sched;
  IntegratorOptions opt;
  opt.out_dt = 20.0;
  const HysteresisResult res = hysteresis_sweep(p, sched, 0.5, opt);
  ASSERT_TRUE(res.mu_forward.has_value());
  EXPECT_EQ(res.down_crossings, 1);
  EXPECT_TRUE(res.locked_in);
  EXPECT_GT(*res.mu_forward, sched.mu_min);
  EXPECT_LT(*res.mu_forward, sched.mu_max);
  EXPECT_GT(res.a_end, 0.9);
  EXPECT_GT(res.p1_peak, 0.4);
  EXPECT_LT(res.p1_end, res.p1_peak);
}

TEST(Hysteresis, NoTransitionWhenRampStopsAboveBifurcation) {
  MFParams p;
  ForcingSchedule sched;
  sched.mu_min = 1.15;  // the A=0 branch stays stable this far
  // oracle: the foraging equilibrium is still attracting at mu_min
  MFParams at_min = p;
  at_min.mu = sched.mu_min;
  bool foraging_stable = false;
  for (const auto& eq : equilibria(at_min))
    if (eq.state.A == 0.0 && std::abs(eq.state.P1) < 1e-9 && eq.stability == Stability::Stable)
      foraging_stable = true;
  ASSERT_TRUE(foraging_stable);

  const HysteresisResult res = hysteresis_sweep(p, sched, 0.5);
  EXPECT_FALSE(res.mu_forward.has_value());
  EXPECT_FALSE(res.locked_in);
  EXPECT_LT(res.a_end, 0.05);
}

TEST(Hysteresis, AgricultureDominantAPrioriWithoutForcing) {
  MFParams p;
  p.c_v = 0.0;
  p.delta_f0 = 0.6;
  p.f1_0 = 1.6;  // keep the split consistent
  const MFState init{0.5, 0.3, p.mu / (p.mu + p.kappa * p.eta_F)};
  // oracle: agriculturalists already out-earn foragers at the start
  const Payoffs pay = mf_payoffs(init, p);
  ASSERT_GT(pay.pi_A, pay.pi_F);
  const Trajectory traj = integrate(init, p, 400.0);
  EXPECT_GT(traj.back().A, 0.99);
}

TEST(Hysteresis, ForwardTransitionBelowReverseRecovery) {
  // Forward transition mu from the canonical ramp.
  MFParams p;
  const HysteresisResult fwd = hysteresis_sweep(p, ForcingSchedule{}, 0.5);
  ASSERT_TRUE(fwd.mu_forward.has_value());

  // Reverse recovery: start near the agricultural equilibrium and ramp mu up
  // past the branch threshold. The up-leg must be brief enough that the
  // forager residue does not underflow before the branch destabilizes.
  ForcingSchedule up;
  up.mu_max = 1.8;
  up.mu_min = 1.2;
  up.t_down = 1e-3;
  up.t_up = 1500.0;
  MFState agri;
  agri.A = 0.99;
  agri.P3 = 1.2 / (1.2 + p.kappa * p.eta_A);
  agri.P1 = 1.0 - agri.P3;
  IntegratorOptions opt;
  opt.out_dt = 1.0;
  const Trajectory traj = integrate(agri, p, up, opt);
  double mu_recovery = -1.0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    if (traj[i - 1].A > 0.5 && traj[i].A <= 0.5) {
      mu_recovery = traj[i].mu;
      break;
    }
  }
  ASSERT_GT(mu_recovery, 0.0);
  EXPECT_LT(*fwd.mu_forward, mu_recovery);
  // the agricultural branch survives well past the forward threshold
  EXPECT_GT(mu_recovery, 1.3);
}

TEST(Integrate, StepBudgetExhaustionIsAHardError) {
  MFParams p;
  IntegratorOptions opt;
  opt.max_steps = 3;
  const MFState init = initial_near_foraging(p, p.mu);
  EXPECT_THROW(integrate(init, p, 1000.0, opt), std::runtime_error);
}

TEST(Schedule, TriangularShape) {
  ForcingSchedule sched;
  EXPECT_DOUBLE_EQ(sched.mu_at(0.0), 1.2);
  EXPECT_DOUBLE_EQ(sched.mu_at(2000.0), 1.0);
  EXPECT_DOUBLE_EQ(sched.mu_at(4000.0), 0.8);
  EXPECT_DOUBLE_EQ(sched.mu_at(6000.0), 1.0);
  EXPECT_DOUBLE_EQ(sched.mu_at(8000.0), 1.2);
  EXPECT_DOUBLE_EQ(sched.mu_at(9000.0), 1.2);
  ForcingSchedule bad;
  bad.mu_min = 1.3;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Csv, TrajectorySchema) {
  MFParams p;
  const MFState init = initial_near_foraging(p, p.mu);
  IntegratorOptions opt;
  opt.out_dt = 50.0;
  const Trajectory traj = integrate(init, p, 100.0, opt);
  const std::string path = ::testing::TempDir() + "mf_traj.csv";
  write_trajectory_csv(traj, path);
  std::ifstream f(path, std::ios::binary);
  std::string first;
  std::getline(f, first);
  EXPECT_EQ(first, "t,mu,A,P1,P2,P3,pi_A,pi_F");
  std::string all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  EXPECT_EQ(all.find('\r'), std::string::npos);
  std::remove(path.c_str());
}
