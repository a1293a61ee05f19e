#include <gtest/gtest.h>

#include <random>

#include "cctb/cctb.hpp"

using namespace cctb;

namespace {

DynamicsProfile ref() { return DynamicsProfile::closed_form(2.0, 4.0, 6.5); }

}  // namespace

TEST(Stall, DetectsLongSlowStretches) {
  std::vector<std::pair<double, double>> s;
  for (int k = 0; k <= 100; ++k) {
    const double t = k * 0.1;
    s.emplace_back(t, (t >= 2.0 && t <= 8.0) ? 0.0 : 3.0);
  }
  const auto out = detect_stall(s, 5.0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0].t_start, 2.0, 1e-9);
  EXPECT_NEAR(out[0].t_end, 8.0, 1e-9);
  EXPECT_TRUE(detect_stall(s, 6.5).empty());
}

TEST(Collision, FrontContactAndMergeOrderFlip) {
  WorldLayout l;
  l.ctx = make_context(ConfigType::Merging);
  l.x_f = 5.0;
  WorldState prev, cur;
  prev.ego = VehicleState{24.0, 5.0};
  cur.ego = VehicleState{25.0, 5.0};
  cur.front = prev.front = VehicleState{25.0};
  auto c = detect_collision(l, prev, cur);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->striker, Role::Ego);
  EXPECT_EQ(c->struck, Role::Front);

  l.x_f = kAbsent;
  prev = WorldState{};
  cur = WorldState{};
  prev.ego = VehicleState{21.0, 2.0};
  cur.ego = VehicleState{21.1, 2.0};
  prev.arriving = VehicleState{20.5, 8.0};
  cur.arriving = VehicleState{21.3, 8.0};
  c = detect_collision(l, prev, cur);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->striker, Role::Arriving);
  EXPECT_EQ(c->struck, Role::Ego);
}

TEST(Collision, CrossingBoxLaterEntrantStrikes) {
  WorldLayout l;
  l.ctx = make_context(ConfigType::CrossYield);
  WorldState prev, cur;
  prev.ego = VehicleState{9.0, 3.0};
  cur.ego = VehicleState{9.2, 3.0};
  prev.arriving = VehicleState{7.9, 8.0};
  cur.arriving = VehicleState{8.3, 8.0};
  const auto c = detect_collision(l, prev, cur);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->striker, Role::Arriving);
  cur.arriving = VehicleState{7.95, 8.0};
  EXPECT_FALSE(detect_collision(l, prev, cur));
}

TEST(Engine, AggressiveHitsAStaticFrontAtTheExit) {
  const auto p = ref();
  const auto ctx = make_context(ConfigType::Merging);
  PolicySpec spec;
  spec.kind = PolicyKind::Aggressive;
  const Trace tr = run_scenario(make_test_case(ctx, p, 0.0, kAbsent, 0.0), p, spec, SimConfig{});
  const Event* c = tr.find_event(EventKind::Collision);
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->vehicle, Role::Ego);
  EXPECT_EQ(c->other, Role::Front);
}

TEST(Engine, SameSeedSameTrace) {
  const auto p = ref();
  const auto ctx = make_context(ConfigType::Merging);
  PolicySpec spec;
  spec.kind = PolicyKind::Noisy;
  spec.sigma = 0.15;
  SimConfig sim;
  sim.seed = 1234;
  const TestCase tc = make_test_case(ctx, p, 2.0, 40.0, 10.0);
  EXPECT_EQ(run_scenario(tc, p, spec, sim), run_scenario(tc, p, spec, sim));
}

TEST(Engine, StatesStayPhysicalOnRandomCases) {
  const auto p = ref();
  std::mt19937 gen(77);
  std::uniform_real_distribution<double> ve(0.0, 6.5), xa(0.0, 80.0), xf(0.0, 40.0);
  const std::vector<ConfigType> types{ConfigType::Merging, ConfigType::LaneChange, ConfigType::CrossYield,
                                      ConfigType::CrossLight};
  const std::vector<PolicyKind> kinds{PolicyKind::SafeTwoPhase, PolicyKind::Aggressive, PolicyKind::Overcautious,
                                      PolicyKind::RedLightIgnorer};
  SimConfig sim;
  sim.t_max = 20.0;
  for (int i = 0; i < 40; ++i) {
    const auto ctx = make_context(types[gen() % types.size()]);
    PolicySpec spec;
    spec.kind = kinds[gen() % kinds.size()];
    const TestCase tc = make_test_case(ctx, p, ve(gen), xa(gen), xf(gen));
    const Trace tr = run_scenario(tc, p, spec, sim);
    ASSERT_FALSE(tr.snapshots.empty());
    for (std::size_t k = 1; k < tr.snapshots.size(); ++k) {
      const auto& a = tr.snapshots[k - 1].state.ego;
      const auto& b = tr.snapshots[k].state.ego;
      EXPECT_GE(b.v, 0.0);
      EXPECT_LE(b.v, 6.5 + 1e-12);
      EXPECT_GE(b.s, a.s);
      EXPECT_LE(b.v - a.v, 2.0 * sim.dt + 1e-9);
      EXPECT_GE(b.v - a.v, -4.0 * sim.dt - 1e-9);
      EXPECT_NEAR(tr.snapshots[k].t - tr.snapshots[k - 1].t, sim.dt, 1e-9);
    }
    // At most one collision, and it ends the run.
    int collisions = 0;
    for (const Event& e : tr.events) collisions += e.kind == EventKind::Collision;
    EXPECT_LE(collisions, 1);
    if (collisions == 1) {
      EXPECT_EQ(tr.find_event(EventKind::Collision)->t, tr.snapshots.back().t);
    }
  }
}

TEST(Engine, SafeTwoPhaseWithoutTrafficDrivesThrough) {
  const auto p = ref();
  for (ConfigType type : {ConfigType::Merging, ConfigType::CrossYield, ConfigType::CrossLight}) {
    const auto ctx = make_context(type);
    const Trace tr = run_scenario(make_test_case(ctx, p, 0.0, kAbsent, kAbsent), p, PolicySpec{}, SimConfig{});
    EXPECT_TRUE(tr.has_event(EventKind::ZoneExit, Role::Ego)) << to_string(type);
    EXPECT_FALSE(tr.find_event(EventKind::Collision)) << to_string(type);
  }
}

TEST(Engine, LayoutGeometry) {
  const auto p = ref();
  const auto lc = make_context(ConfigType::LaneChange);
  const TestCase tc = make_test_case(lc, p, 4.0, 30.0, 10.0);
  const WorldLayout l = make_layout(tc, p);
  EXPECT_DOUBLE_EQ(l.runout, 1.2 * 6.5 * 6.5 / 8.0 + 5.0);
  EXPECT_DOUBLE_EQ(l.claim_lead, 8.0);
  ASSERT_TRUE(l.inner_obstacle_s);
  EXPECT_DOUBLE_EQ(*l.inner_obstacle_s, 0.0);
  EXPECT_DOUBLE_EQ(l.front_s(), 23.5);
}

TEST(Engine, RejectsOutOfRangeCases) {
  const auto p = ref();
  const auto ctx = make_context(ConfigType::Merging);
  TestCase tc = make_test_case(ctx, p, 0.0, 10.0, 10.0);
  tc.v_e = 7.0;
  EXPECT_THROW(run_scenario(tc, p, PolicySpec{}, SimConfig{}), DomainError);
  tc.v_e = 0.0;
  tc.x_f = -1.0;
  EXPECT_THROW(run_scenario(tc, p, PolicySpec{}, SimConfig{}), DomainError);
  SimConfig bad;
  bad.t_stall = 100.0;
  EXPECT_THROW(validate(bad), ConfigError);
}

TEST(Engine, LightIsRecordedInEverySnapshot) {
  const auto p = ref();
  const auto ctx = make_context(ConfigType::CrossLight);
  PolicySpec spec;
  spec.kind = PolicyKind::Overcautious;
  SimConfig sim;
  sim.t_max = 8.0;
  const Trace tr = run_scenario(make_test_case(ctx, p, 0.0, kAbsent, kAbsent), p, spec, sim);
  for (const Snapshot& s : tr.snapshots) {
    ASSERT_TRUE(s.light);
    EXPECT_EQ(*s.light, light_phase(ctx, s.t, sim.dt));
  }
}
