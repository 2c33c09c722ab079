#pragma once

// Gravity-only flight of the released object: flying time, the closed-form
// flowmap from release state to landing pose, and a fixed-step RK4
// integrator kept as an independent oracle for the closed form.

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "throwflip/planar.hpp"

namespace throwflip {

inline constexpr double kGravity = 9.81;  // m/s^2

/// Object pose and CoM twist at the instant of detach.
struct ReleaseState {
  PlanarPose pose;
  PlanarTwist twist;

  friend bool operator==(const ReleaseState&, const ReleaseState&) = default;
};

inline ReleaseState operator+(const ReleaseState& a, const ReleaseState& b) {
  return {a.pose + b.pose, a.twist + b.twist};
}
inline ReleaseState operator-(const ReleaseState& a, const ReleaseState& b) {
  return {a.pose - b.pose, a.twist - b.twist};
}
inline ReleaseState operator*(double k, const ReleaseState& s) {
  return {k * s.pose, k * s.twist};
}

/// Where and how the CoM crosses the landing height.
struct LandingPose {
  double x = 0.0;      // m
  double theta = 0.0;  // rad, unwrapped

  friend bool operator==(const LandingPose&, const LandingPose&) = default;
};

inline LandingPose operator+(const LandingPose& a, const LandingPose& b) {
  return {a.x + b.x, a.theta + b.theta};
}
inline LandingPose operator-(const LandingPose& a, const LandingPose& b) {
  return {a.x - b.x, a.theta - b.theta};
}
inline LandingPose operator*(double k, const LandingPose& l) { return {k * l.x, k * l.theta}; }

/// The parabola never reaches the landing plane.
class NoLandingSolution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time until z(t) = z_land on the descending branch. Throws
/// NoLandingSolution when vz^2 + 2 G (z0 - z_land) < 0.
double fly_time(double z0, double vz, double z_land = 0.0);
std::optional<double> try_fly_time(double z0, double vz, double z_land = 0.0);

/// Closed-form flowmap g: x + vx t, theta + omega t.
LandingPose landing_pose(const ReleaseState& release, double z_land = 0.0);
std::optional<LandingPose> try_landing_pose(const ReleaseState& release, double z_land = 0.0);

/// RK4 on (x, z, theta, vx, vz, omega) with step dt, linear interpolation
/// of the z = z_land crossing. Gives up after 10 s of simulated flight.
LandingPose integrate_flight_oracle(const ReleaseState& release, double z_land = 0.0,
                                    double dt = 1e-4);

// Batch kernels over many release states. The serial version is the
// reference; the OpenMP version must produce identical output.
// Entries that cannot land come back as std::nullopt.
std::vector<std::optional<LandingPose>> landing_poses_serial(std::span<const ReleaseState> states,
                                                             double z_land = 0.0);
std::vector<std::optional<LandingPose>> landing_poses_parallel(std::span<const ReleaseState> states,
                                                               double z_land = 0.0);

std::vector<LandingPose> oracle_landing_poses_serial(std::span<const ReleaseState> states,
                                                     double z_land = 0.0, double dt = 1e-4);
std::vector<LandingPose> oracle_landing_poses_parallel(std::span<const ReleaseState> states,
                                                       double z_land = 0.0, double dt = 1e-4);

}  // namespace throwflip
