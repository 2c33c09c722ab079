#include "throwflip/planar.hpp"

#include <cmath>
#include <numbers>

namespace throwflip {

RelativeCoords relative_coords(const PlanarPose& object, const PlanarPose& hand) {
  return {object.x - hand.x, object.z - hand.z, object.theta - hand.theta};
}

PlanarTwist contact_twist(const PlanarTwist& object_twist, const RelativeCoords& rel) {
  const double w = object_twist.omega;
  return {object_twist.vx + w * rel.zr, object_twist.vz - w * rel.xr, w};
}

PlanarTwist object_twist_from_contact(const PlanarTwist& contact, const RelativeCoords& rel) {
  const double w = contact.omega;
  return {contact.vx - w * rel.zr, contact.vz + w * rel.xr, w};
}

double unwrap_angle(double prev_theta, double raw_theta_mod_2pi) {
  // Number of whole turns that brings raw closest to prev; the half-open
  // interval (-pi, pi] is enforced after rounding.
  double d = prev_theta - raw_theta_mod_2pi;
  double turns = std::round(d / kTwoPi);
  double out = raw_theta_mod_2pi + turns * kTwoPi;
  double diff = out - prev_theta;
  if (diff <= -std::numbers::pi) {
    out += kTwoPi;
  } else if (diff > std::numbers::pi) {
    out -= kTwoPi;
  }
  return out;
}

bool is_finite(const PlanarPose& p) {
  return std::isfinite(p.x) && std::isfinite(p.z) && std::isfinite(p.theta);
}

bool is_finite(const PlanarTwist& t) {
  return std::isfinite(t.vx) && std::isfinite(t.vz) && std::isfinite(t.omega);
}

}  // namespace throwflip
