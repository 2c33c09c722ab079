#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"
#include "throwflip/planar.hpp"
#include "throwflip/transfer.hpp"

using namespace throwflip;

TEST(Transfer, ShiftExamples) {
  const ReleaseState s{{0.5, 0.6, 0.0}, {1.0, 2.0, kTwoPi}};
  EXPECT_EQ(shift_release_state(s, {0.0}), s);
  const auto t = shift_release_state(s, {0.06});
  EXPECT_NEAR(t.pose.z, 0.6 - 0.06, 1e-15);
  EXPECT_EQ(t.pose.x, 0.5);
  EXPECT_NEAR(t.twist.vx - 1.0, 0.376991, 1e-6);
  EXPECT_EQ(t.twist.vz, 2.0);
}

TEST(Transfer, ShiftProperties) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> dh(-0.2, 0.2), h(0.05, 0.3);
  for (int i = 0; i < 10000; ++i) {
    const auto s = testutil::random_release(rng);
    const CoMShift shift{dh(rng)};
    const auto t = shift_release_state(s, shift);
    EXPECT_EQ(t.pose.theta, s.pose.theta);
    EXPECT_EQ(t.twist.omega, s.twist.omega);
    const auto back = shift_release_state(t, {-shift.dh});
    EXPECT_NEAR(back.pose.x, s.pose.x, 1e-12);
    EXPECT_NEAR(back.pose.z, s.pose.z, 1e-12);
    EXPECT_NEAR(back.twist.vx, s.twist.vx, 1e-12);
    EXPECT_NEAR(back.twist.vz, s.twist.vz, 1e-12);
    // Contact point (grasp) twist is unchanged when the lever grows by dh.
    const double hc = h(rng);
    const double th = s.pose.theta;
    const PlanarPose grasp{s.pose.x - hc * std::sin(th), s.pose.z + hc * std::cos(th), th};
    const auto c0 = contact_twist(s.twist, relative_coords(s.pose, grasp));
    const auto c1 = contact_twist(t.twist, relative_coords(t.pose, grasp));
    EXPECT_NEAR(c0.vx, c1.vx, 1e-12);
    EXPECT_NEAR(c0.vz, c1.vz, 1e-12);
  }
}

TEST(Transfer, ShiftMatchesShiftedPlant) {
  std::mt19937_64 rng(72);
  const PlantParams p;
  PlantParams q = p;
  q.h_com += 0.06;
  for (int i = 0; i < 500; ++i) {
    const auto c = testutil::random_command(rng);
    const auto a = shift_release_state(release_state(c, p), {0.06});
    const auto b = release_state(c, q);
    EXPECT_NEAR(a.pose.x, b.pose.x, 1e-12);
    EXPECT_NEAR(a.pose.z, b.pose.z, 1e-12);
    EXPECT_NEAR(a.twist.vx, b.twist.vx, 1e-12);
    EXPECT_NEAR(a.twist.vz, b.twist.vz, 1e-12);
  }
}

TEST(Transfer, SupportTransfer) {
  const Plant plant(PlantParams{}, 1.0);
  const auto source = summarize_trials(grid_sweep(SweepAxes{}, 5, plant, 1));
  ASSERT_EQ(source.size(), 27u);
  const auto same = transfer_support(source, {0.0});
  ASSERT_EQ(same.entries.size(), 27u);
  for (std::size_t i = 0; i < 27; ++i) {
    EXPECT_EQ(same.entries[i].landing, source[i].landing);
    EXPECT_EQ(same.entries[i].provenance, Provenance::Predicted);
  }
  const auto moved = transfer_support(source, {0.06});
  EXPECT_EQ(moved.entries.size() + moved.dropped, source.size());
  for (std::size_t i = 0; i < moved.entries.size(); ++i) {
    const auto& e = moved.entries[i];
    EXPECT_TRUE(std::isfinite(e.landing.x) && std::isfinite(e.landing.theta));
    const auto moved_by = landing_pose(e.release) - landing_pose(source[i].release);
    EXPECT_NEAR(e.landing.x, source[i].landing.x + moved_by.x, 1e-12);
    EXPECT_NEAR(e.landing.theta, source[i].landing.theta + moved_by.theta, 1e-12);
    if (source[i].release.twist.omega > 0) EXPECT_NE(e.landing.x, source[i].landing.x);
  }
}

TEST(Transfer, ZeroShiftReplaysSolvedTarget) {
  const Plant plant(PlantParams{}, 0.0);
  const auto source = summarize_trials(grid_sweep(SweepAxes{}, 1, plant, 1));
  const TargetSpec t{source[13].landing.x, source[13].landing.theta};
  const auto r = learn_transfer(source, {0.0}, t, LearnerConfig{}, plant, 3);
  ASSERT_EQ(r.iterations.size(), 1u);
  EXPECT_EQ(r.iterations[0].command, source[13].command);
  EXPECT_NEAR(r.iterations[0].mean_landing.x, source[13].landing.x, 1e-12);
  EXPECT_NEAR(r.iterations[0].mean_landing.theta, source[13].landing.theta, 1e-12);
  EXPECT_EQ(r.status, LearnStatus::Success);
}

TEST(Transfer, StagedProcedure) {
  const Plant plant(PlantParams{}, 1.0);
  const auto source = summarize_trials(grid_sweep(SweepAxes{}, 5, plant, 1));
  const auto shifted = plant.with_com_shift(0.06);
  const TargetSpec hard{1.3, 1.7 * std::numbers::pi, 0.001, 0.001};
  LearnerConfig cfg;
  cfg.max_iterations = 6;
  const auto r = learn_transfer(source, {0.06}, hard, cfg, shifted, 4);
  ASSERT_EQ(r.iterations.size(), 6u);
  const auto predicted = transfer_support(source, {0.06}).entries;
  const auto ranked = rank_entries(predicted, hard);
  EXPECT_EQ(r.iterations[0].command, predicted[ranked[0]].command);
  EXPECT_EQ(r.iterations[1].escape_level, 0);
  EXPECT_EQ(r.iterations[2].escape_level, 1);
  EXPECT_EQ(r.iterations[2].neighbors, (std::array<std::size_t, 3>{ranked[0], ranked[1], r.iterations[2].neighbors[2]}));
  EXPECT_EQ(r.executed_trials(), 18);
  const auto again = learn_transfer(source, {0.06}, hard, cfg, shifted, 4);
  for (std::size_t k = 0; k < r.iterations.size(); ++k) {
    EXPECT_EQ(r.iterations[k].command, again.iterations[k].command);
    EXPECT_EQ(r.iterations[k].error, again.iterations[k].error);
  }
}

TEST(Transfer, NeedsFourEntries) {
  const Plant plant(PlantParams{}, 0.0);
  const auto support = build_support(default_support_commands(), plant, 1, 0);
  const Dataset three(support.begin(), support.begin() + 3);
  EXPECT_THROW(learn_transfer(three, {0.06}, {1.2, 3.0}, LearnerConfig{}, plant, 0), InsufficientData);
}
