#pragma once

// Seeded surrogate for the robot + gripper. A command (pitch, speed,
// damping) is mapped to a release state through a near-linear launch model
// with a braking-driven spin increment; flight is then the exact flowmap.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "throwflip/ballistics.hpp"
#include "throwflip/planar.hpp"

namespace throwflip {

/// Throw action u = (gamma, s, D).
struct Command {
  double pitch = 0.0;    // gamma, rad
  double speed = 1.0;    // s, dimensionless scale
  double damping = 0.0;  // D, dimensionless

  friend bool operator==(const Command&, const Command&) = default;
};

inline Command operator+(const Command& a, const Command& b) {
  return {a.pitch + b.pitch, a.speed + b.speed, a.damping + b.damping};
}
inline Command operator-(const Command& a, const Command& b) {
  return {a.pitch - b.pitch, a.speed - b.speed, a.damping - b.damping};
}
inline Command operator*(double k, const Command& c) {
  return {k * c.pitch, k * c.speed, k * c.damping};
}

struct CommandBounds {
  double pitch_min = -0.3;
  double pitch_max = 0.3;
  double speed_min = 0.7;
  double speed_max = 1.3;
  double damping_min = 0.0;
  double damping_max = 1.0;

  /// True when every component lies inside the box widened by `tol`.
  bool contains(const Command& c, double tol = 0.0) const;
  Command clamp(const Command& c) const;

  friend bool operator==(const CommandBounds&, const CommandBounds&) = default;
};

/// Per-component standard deviation of the additive release-state noise,
/// ordered (x, z, theta, vx, vz, omega).
using NoiseSigma = std::array<double, 6>;

struct PlantParams {
  double v0 = 2.2;                 // m/s, launch speed at s = 1, D = 0
  double phi0 = 58.0 * std::numbers::pi / 180.0;  // rad, launch angle at gamma = 0
  double k_gamma = 1.0;            // pitch -> launch angle gain
  double hand_theta0 = std::numbers::pi / 2.0;  // rad, hand orientation at gamma = 0
  double r_arm = 0.7;              // m, parasitic spin radius (omega_h = V / r_arm)
  double c_D = 2.5;                // rad/m, brake spin gain
  double c_loss = 0.2;             // speed lost per unit damping
  double tau_release = 0.05;       // s, hinge window
  double h_com = 0.12;             // m, grasp point -> CoM
  double release_x0 = 0.5;         // m, hand position at release
  double release_z0 = 0.6;         // m
  NoiseSigma noise_sigma{0.005, 0.005, 0.01, 0.05, 0.05, 0.3};
  CommandBounds bounds{};

  friend bool operator==(const PlantParams&, const PlantParams&) = default;
};

/// Throws std::invalid_argument when a field breaks its invariant.
void validate(const PlantParams& params);

/// Reads a flat JSON object. Missing keys keep their defaults, unknown keys
/// and malformed values throw ConfigError.
PlantParams load_plant_params(const std::filesystem::path& path);
PlantParams parse_plant_params(const std::string& json_text);
std::string to_json(const PlantParams& params);

/// 64-bit FNV-1a over the canonical JSON form; used in log headers.
std::uint64_t params_hash(const PlantParams& params);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Intermediate quantities of the deterministic release model, exposed for
/// tests and diagnostics.
struct ReleaseBreakdown {
  double launch_speed = 0.0;  // V
  double launch_angle = 0.0;  // phi
  PlanarPose hand_pose;
  PlanarTwist hand_twist;
  double spin_increment = 0.0;  // brake contribution to omega
  double pivot_angle = 0.0;     // rotation accumulated in the hinge window
  RelativeCoords lever;         // object CoM relative to the hand
  ReleaseState release;
};

ReleaseBreakdown release_breakdown(const Command& cmd, const PlantParams& params);

/// Mean release state plus `noise_scale` times Gaussian noise with the
/// plant's sigma. `gen_seed` seeds the noise stream; ignored when
/// noise_scale == 0. Out-of-box commands are clamped first.
ReleaseState release_state(const Command& cmd, const PlantParams& params,
                           double noise_scale = 0.0, std::uint64_t gen_seed = 0);

/// One executed throw.
struct TrialRecord {
  Command command;           // as executed (after clamping)
  Command requested;         // before clamping
  bool clamped = false;
  bool valid = true;         // false if the noisy release could not land
  ReleaseState release;
  LandingPose landing;
  std::int64_t trial_id = 0;
  std::uint64_t seed = 0;
};

/// Plant = parameters + noise level. Immutable after construction.
class Plant {
 public:
  explicit Plant(PlantParams params, double noise_scale = 1.0);

  const PlantParams& params() const { return params_; }
  double noise_scale() const { return noise_scale_; }

  /// Executes `cmd` once with the given stream seed. Same seed, same record.
  TrialRecord throw_once(const Command& cmd, std::uint64_t seed, std::int64_t trial_id = 0) const;

  /// Copy of this plant with the CoM moved by `dh` along the bar.
  Plant with_com_shift(double dh) const;

 private:
  PlantParams params_;
  double noise_scale_;
};

/// Deterministic stream seed for one trial of a campaign.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

struct SweepAxes {
  std::vector<double> pitch{-0.2, 0.0, 0.2};
  std::vector<double> speed{0.8, 1.0, 1.2};
  std::vector<double> damping{0.0, 0.5, 1.0};
};

/// Every command of the Cartesian product, each executed `reps` times,
/// ordered pitch-major then speed, damping, rep.
std::vector<TrialRecord> grid_sweep(const SweepAxes& axes, int reps, const Plant& plant,
                                    std::uint64_t seed);

}  // namespace throwflip
