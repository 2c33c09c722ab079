#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "test_util.hpp"
#include "throwflip/ballistics.hpp"

using namespace throwflip;

TEST(Ballistics, FlyTimeExamples) {
  EXPECT_EQ(fly_time(0.0, 0.0, 0.0), 0.0);
  EXPECT_NEAR(fly_time(1.0, 0.0), 0.451523, 1e-6);
  EXPECT_NEAR(fly_time(1.0, 0.0), std::sqrt(2.0 / 9.81), 1e-15);
  EXPECT_NEAR(fly_time(0.0, 1.0), 0.203873, 1e-6);
  EXPECT_NEAR(fly_time(0.0, 1.0), 2.0 / 9.81, 1e-15);
}

TEST(Ballistics, FlyTimeErrors) {
  EXPECT_THROW(fly_time(0.0, 1.0, 1.0), NoLandingSolution);  // apex below the plane
  EXPECT_THROW(fly_time(0.0, -1.0, 0.5), NoLandingSolution);
  EXPECT_FALSE(try_fly_time(0.0, 1.0, 1.0).has_value());
  EXPECT_THROW(landing_pose({{0, 0, 0}, {1, 1, 0}}, 1.0), NoLandingSolution);
}

TEST(Ballistics, LandingExamples) {
  const ReleaseState a{{0, 1, 0}, {1, 0, kTwoPi}};
  const auto la = landing_pose(a);
  EXPECT_NEAR(la.x, 0.451523, 1e-6);
  EXPECT_NEAR(la.theta, 2.83700, 1e-5);
  const auto lb = landing_pose({{0.3, 0, 0.5}, {2.0, 0, 7.0}});
  EXPECT_EQ(lb, (LandingPose{0.3, 0.5}));
  EXPECT_EQ(landing_pose({{0, 1, 0}, {0, 0, 0}}), (LandingPose{0, 0}));
}

TEST(Ballistics, OracleExamples) {
  const auto a = integrate_flight_oracle({{0, 1, 0}, {1, 0, kTwoPi}});
  EXPECT_NEAR(a.x, std::sqrt(2.0 / 9.81), 1e-9);
  EXPECT_NEAR(a.theta, kTwoPi * std::sqrt(2.0 / 9.81), 1e-9);
  const auto drop = integrate_flight_oracle({{0, 1, 0}, {0, 0, 0}});
  EXPECT_NEAR(drop.x, 0.0, 1e-9);
  EXPECT_NEAR(drop.theta, 0.0, 1e-9);
  const auto arc = integrate_flight_oracle({{0, 0, 0}, {0.7, 1.0, 0}});
  EXPECT_NEAR(arc.x, 0.7 * 2.0 / 9.81, 1e-9);
  EXPECT_THROW(integrate_flight_oracle({{0, 0, 0}, {1, 1, 0}}, 1.0), NoLandingSolution);
  EXPECT_THROW(integrate_flight_oracle({{0, 1, 0}, {1, 1, 0}}, 0.0, 0.0), std::invalid_argument);
}

TEST(Ballistics, Properties) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 5000; ++i) {
    const auto s = testutil::random_release(rng);
    const double t = fly_time(s.pose.z, s.twist.vz);
    const auto l = landing_pose(s);
    // Linear angular kinematics.
    EXPECT_EQ(l.theta, s.pose.theta + s.twist.omega * t);
    // Monotone in z0.
    EXPECT_LE(t, fly_time(s.pose.z + 0.1, s.twist.vz));
  }
  for (double vz : {0.1, 0.5, 1.0, 3.0}) {
    EXPECT_NEAR(fly_time(0.0, vz), 2.0 * vz / kGravity, 1e-15);
  }
}

TEST(Ballistics, ClosedFormMatchesOracle) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 500; ++i) {
    const auto s = testutil::random_release(rng);
    const auto a = landing_pose(s);
    const auto b = integrate_flight_oracle(s);
    EXPECT_NEAR(a.x, b.x, 1e-8);
    EXPECT_NEAR(a.theta, b.theta, 1e-8);
  }
}

TEST(Ballistics, SerialParallelIdentical) {
  std::mt19937_64 rng(23);
  std::vector<ReleaseState> states;
  for (int i = 0; i < 2000; ++i) states.push_back(testutil::random_release(rng));
  states.push_back({{0, 0, 0}, {1, 1, 0}});
  const auto a = landing_poses_serial(states, 0.1);
  const auto b = landing_poses_parallel(states, 0.1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_FALSE(a.back().has_value());

  std::vector<ReleaseState> few(states.begin(), states.begin() + 100);
  EXPECT_EQ(oracle_landing_poses_serial(few), oracle_landing_poses_parallel(few));
}
