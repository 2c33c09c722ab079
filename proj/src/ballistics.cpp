#include "throwflip/ballistics.hpp"

#include <array>
#include <cmath>
#include <cstddef>

namespace throwflip {

std::optional<double> try_fly_time(double z0, double vz, double z_land) {
  const double disc = vz * vz + 2.0 * kGravity * (z0 - z_land);
  if (!(disc >= 0.0)) {
    return std::nullopt;
  }
  // Below the plane and not climbing: the descending root lies in the past.
  if (z0 < z_land && vz <= 0.0) {
    return std::nullopt;
  }
  return (vz + std::sqrt(disc)) / kGravity;
}

double fly_time(double z0, double vz, double z_land) {
  if (auto t = try_fly_time(z0, vz, z_land)) {
    return *t;
  }
  throw NoLandingSolution("release state cannot reach the landing plane");
}

std::optional<LandingPose> try_landing_pose(const ReleaseState& release, double z_land) {
  const auto t = try_fly_time(release.pose.z, release.twist.vz, z_land);
  if (!t) {
    return std::nullopt;
  }
  return LandingPose{release.pose.x + release.twist.vx * *t,
                     release.pose.theta + release.twist.omega * *t};
}

LandingPose landing_pose(const ReleaseState& release, double z_land) {
  if (auto l = try_landing_pose(release, z_land)) {
    return *l;
  }
  throw NoLandingSolution("release state cannot reach the landing plane");
}

namespace {

using State = std::array<double, 6>;  // x, z, theta, vx, vz, omega

State derivative(const State& s) { return {s[3], s[4], s[5], 0.0, -kGravity, 0.0}; }

State axpy(const State& s, double h, const State& k) {
  State out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = s[i] + h * k[i];
  }
  return out;
}

State rk4_step(const State& s, double h) {
  const State k1 = derivative(s);
  const State k2 = derivative(axpy(s, 0.5 * h, k1));
  const State k3 = derivative(axpy(s, 0.5 * h, k2));
  const State k4 = derivative(axpy(s, h, k3));
  State out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

constexpr double kOracleHorizon = 10.0;  // s

}  // namespace

LandingPose integrate_flight_oracle(const ReleaseState& release, double z_land, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("integrate_flight_oracle: dt must be positive");
  }
  State s{release.pose.x,    release.pose.z,    release.pose.theta,
          release.twist.vx, release.twist.vz, release.twist.omega};
  if (s[1] == z_land && s[4] <= 0.0) {
    return {s[0], s[2]};
  }
  if (s[1] < z_land && s[4] <= 0.0) {
    throw NoLandingSolution("oracle: released below the plane and descending");
  }

  const auto steps = static_cast<std::size_t>(std::ceil(kOracleHorizon / dt));
  for (std::size_t k = 0; k < steps; ++k) {
    const State next = rk4_step(s, dt);
    if (s[1] >= z_land && next[1] < z_land) {
      // Linear interpolation seeds the crossing; secant iterations on the
      // sub-step length then pin it down by re-integrating from s.
      double h_lo = 0.0;
      double f_lo = s[1] - z_land;
      double h_hi = dt;
      double f_hi = next[1] - z_land;
      double h = dt * f_lo / (f_lo - f_hi);
      for (int it = 0; it < 60; ++it) {
        const double f = rk4_step(s, h)[1] - z_land;
        if (f == 0.0) {
          break;
        }
        if (f > 0.0) {
          h_lo = h;
          f_lo = f;
        } else {
          h_hi = h;
          f_hi = f;
        }
        const double h_new = h_lo + (h_hi - h_lo) * f_lo / (f_lo - f_hi);
        if (std::abs(h_new - h) <= 1e-17 || h_hi - h_lo <= 1e-17) {
          h = h_new;
          break;
        }
        h = h_new;
      }
      const State hit = rk4_step(s, h);
      return {hit[0], hit[2]};
    }
    s = next;
  }
  throw NoLandingSolution("oracle: no landing within the integration horizon");
}

std::vector<std::optional<LandingPose>> landing_poses_serial(std::span<const ReleaseState> states,
                                                             double z_land) {
  std::vector<std::optional<LandingPose>> out(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    out[i] = try_landing_pose(states[i], z_land);
  }
  return out;
}

std::vector<std::optional<LandingPose>> landing_poses_parallel(std::span<const ReleaseState> states,
                                                               double z_land) {
  std::vector<std::optional<LandingPose>> out(states.size());
  const auto n = static_cast<std::ptrdiff_t>(states.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = try_landing_pose(states[i], z_land);
  }
  return out;
}

std::vector<LandingPose> oracle_landing_poses_serial(std::span<const ReleaseState> states,
                                                     double z_land, double dt) {
  std::vector<LandingPose> out(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    out[i] = integrate_flight_oracle(states[i], z_land, dt);
  }
  return out;
}

std::vector<LandingPose> oracle_landing_poses_parallel(std::span<const ReleaseState> states,
                                                       double z_land, double dt) {
  std::vector<LandingPose> out(states.size());
  const auto n = static_cast<std::ptrdiff_t>(states.size());
  bool failed = false;
#pragma omp parallel for schedule(dynamic, 64) reduction(|| : failed)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = integrate_flight_oracle(states[i], z_land, dt);
    } catch (const NoLandingSolution&) {
      failed = true;
    }
  }
  if (failed) {
    throw NoLandingSolution("oracle: at least one state never lands");
  }
  return out;
}

}  // namespace throwflip
