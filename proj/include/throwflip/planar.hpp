#pragma once

// Planar pose/twist algebra for the throw-flip plane (x horizontal, z up).
// Orientations are unwrapped: theta keeps counting past 2*pi so that the
// number of flips survives every operation in this header.

#include <numbers>

namespace throwflip {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct PlanarPose {
  double x = 0.0;      // m
  double z = 0.0;      // m
  double theta = 0.0;  // rad, unwrapped

  friend bool operator==(const PlanarPose&, const PlanarPose&) = default;
};

struct PlanarTwist {
  double vx = 0.0;     // m/s
  double vz = 0.0;     // m/s
  double omega = 0.0;  // rad/s

  friend bool operator==(const PlanarTwist&, const PlanarTwist&) = default;
};

/// Object frame expressed relative to the hand frame, componentwise.
struct RelativeCoords {
  double xr = 0.0;
  double zr = 0.0;
  double thetar = 0.0;

  friend bool operator==(const RelativeCoords&, const RelativeCoords&) = default;
};

constexpr PlanarPose operator+(const PlanarPose& a, const PlanarPose& b) {
  return {a.x + b.x, a.z + b.z, a.theta + b.theta};
}
constexpr PlanarPose operator-(const PlanarPose& a, const PlanarPose& b) {
  return {a.x - b.x, a.z - b.z, a.theta - b.theta};
}
constexpr PlanarPose operator*(double k, const PlanarPose& p) {
  return {k * p.x, k * p.z, k * p.theta};
}
constexpr PlanarTwist operator+(const PlanarTwist& a, const PlanarTwist& b) {
  return {a.vx + b.vx, a.vz + b.vz, a.omega + b.omega};
}
constexpr PlanarTwist operator-(const PlanarTwist& a, const PlanarTwist& b) {
  return {a.vx - b.vx, a.vz - b.vz, a.omega - b.omega};
}
constexpr PlanarTwist operator*(double k, const PlanarTwist& t) {
  return {k * t.vx, k * t.vz, k * t.omega};
}

/// object - hand, no angle wrapping.
RelativeCoords relative_coords(const PlanarPose& object, const PlanarPose& hand);

/// Twist of the contact point located by `rel` on a body moving with
/// `object_twist` (twist taken at the CoM):
///   v^c = (vx + w * zr, vz - w * xr, w)
PlanarTwist contact_twist(const PlanarTwist& object_twist, const RelativeCoords& rel);

/// Inverse of contact_twist: the CoM twist whose contact point at `rel`
/// moves with `contact`.
PlanarTwist object_twist_from_contact(const PlanarTwist& contact, const RelativeCoords& rel);

/// Lifts an angle in [0, 2pi) to the representative of its residue class
/// closest to `prev_theta`; the result differs from `prev_theta` by a value
/// in (-pi, pi].
double unwrap_angle(double prev_theta, double raw_theta_mod_2pi);

bool is_finite(const PlanarPose& p);
bool is_finite(const PlanarTwist& t);

}  // namespace throwflip
