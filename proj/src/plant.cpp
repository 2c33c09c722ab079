#include "throwflip/plant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"

namespace throwflip {

using nlohmann::json;

bool CommandBounds::contains(const Command& c, double tol) const {
  return c.pitch >= pitch_min - tol && c.pitch <= pitch_max + tol && c.speed >= speed_min - tol &&
         c.speed <= speed_max + tol && c.damping >= damping_min - tol &&
         c.damping <= damping_max + tol;
}

Command CommandBounds::clamp(const Command& c) const {
  return {std::clamp(c.pitch, pitch_min, pitch_max), std::clamp(c.speed, speed_min, speed_max),
          std::clamp(c.damping, damping_min, damping_max)};
}

void validate(const PlantParams& p) {
  const double scalars[] = {p.v0,     p.phi0,        p.k_gamma, p.hand_theta0, p.r_arm,
                            p.c_D,    p.c_loss,      p.tau_release, p.h_com, p.release_x0,
                            p.release_z0};
  for (double v : scalars) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("plant parameter is not finite");
    }
  }
  if (!(p.tau_release > 0.0)) throw std::invalid_argument("tau_release must be > 0");
  if (!(p.h_com > 0.0)) throw std::invalid_argument("h_com must be > 0");
  if (!(p.r_arm > 0.0)) throw std::invalid_argument("r_arm must be > 0");
  for (double s : p.noise_sigma) {
    if (!std::isfinite(s) || s < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  }
  const auto& b = p.bounds;
  if (!(b.pitch_min <= b.pitch_max && b.speed_min <= b.speed_max &&
        b.damping_min <= b.damping_max)) {
    throw std::invalid_argument("command bounds are inverted");
  }
}

namespace {

// Field table shared by the reader and the writer so both stay in sync.
struct ScalarField {
  const char* key;
  double PlantParams::*member;
};
struct BoundField {
  const char* key;
  double CommandBounds::*member;
};

constexpr ScalarField kScalarFields[] = {
    {"v0", &PlantParams::v0},
    {"phi0", &PlantParams::phi0},
    {"k_gamma", &PlantParams::k_gamma},
    {"hand_theta0", &PlantParams::hand_theta0},
    {"r_arm", &PlantParams::r_arm},
    {"c_D", &PlantParams::c_D},
    {"c_loss", &PlantParams::c_loss},
    {"tau_release", &PlantParams::tau_release},
    {"h_com", &PlantParams::h_com},
    {"release_x0", &PlantParams::release_x0},
    {"release_z0", &PlantParams::release_z0},
};

constexpr BoundField kBoundFields[] = {
    {"pitch_min", &CommandBounds::pitch_min},     {"pitch_max", &CommandBounds::pitch_max},
    {"speed_min", &CommandBounds::speed_min},     {"speed_max", &CommandBounds::speed_max},
    {"damping_min", &CommandBounds::damping_min}, {"damping_max", &CommandBounds::damping_max},
};

constexpr const char* kNoiseKey = "noise_sigma";

std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) {
    throw ConfigError("plant config: '" + key + "' must be a number");
  }
  return v.get<double>();
}

json to_json_object(const PlantParams& p) {
  json j = json::object();
  for (const auto& f : kScalarFields) j[f.key] = p.*f.member;
  j[kNoiseKey] = p.noise_sigma;
  for (const auto& f : kBoundFields) j[f.key] = p.bounds.*f.member;
  return j;
}

}  // namespace

PlantParams parse_plant_params(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("plant config: parse error at " + line_context(text, e.byte) + ": " +
                      e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("plant config: top level must be a JSON object");
  }

  PlantParams p;
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (const auto& f : kScalarFields) {
      if (key == f.key) {
        p.*f.member = as_number(value, key);
        known = true;
      }
    }
    for (const auto& f : kBoundFields) {
      if (key == f.key) {
        p.bounds.*f.member = as_number(value, key);
        known = true;
      }
    }
    if (key == kNoiseKey) {
      if (value.is_number()) {
        p.noise_sigma.fill(value.get<double>());
      } else if (value.is_array() && value.size() == 6) {
        for (std::size_t i = 0; i < 6; ++i) p.noise_sigma[i] = as_number(value[i], key);
      } else {
        throw ConfigError("plant config: 'noise_sigma' must be a number or a 6-element array");
      }
      known = true;
    }
    if (!known) {
      throw ConfigError("plant config: unknown key '" + key + "'");
    }
  }
  try {
    validate(p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("plant config: ") + e.what());
  }
  return p;
}

PlantParams load_plant_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open plant config " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plant_params(ss.str());
}

std::string to_json(const PlantParams& params) { return to_json_object(params).dump(2); }

std::uint64_t params_hash(const PlantParams& params) {
  const std::string canon = to_json_object(params).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ReleaseBreakdown release_breakdown(const Command& cmd, const PlantParams& p) {
  ReleaseBreakdown b;
  const double V = p.v0 * cmd.speed * (1.0 - p.c_loss * cmd.damping);
  const double phi = p.phi0 + p.k_gamma * cmd.pitch;
  b.launch_speed = V;
  b.launch_angle = phi;

  const double omega_hand = V / p.r_arm;  // parasitic coupling
  b.hand_twist = {V * std::cos(phi), V * std::sin(phi), omega_hand};
  b.spin_increment = p.c_D * cmd.damping * V;
  b.pivot_angle = 0.5 * b.spin_increment * p.tau_release;

  const double theta_hand = p.hand_theta0 + p.k_gamma * cmd.pitch;
  b.hand_pose = {p.release_x0, p.release_z0, theta_hand};
  const double theta_obj = theta_hand + b.pivot_angle;
  const PlanarPose object{p.release_x0 + p.h_com * std::sin(theta_obj),
                          p.release_z0 - p.h_com * std::cos(theta_obj), theta_obj};
  b.lever = relative_coords(object, b.hand_pose);

  // The contact point keeps the hand's linear velocity; the object spins at
  // the parasitic rate plus the brake increment.
  const PlanarTwist contact{b.hand_twist.vx, b.hand_twist.vz, omega_hand + b.spin_increment};
  b.release = {object, object_twist_from_contact(contact, b.lever)};
  return b;
}

ReleaseState release_state(const Command& cmd, const PlantParams& params, double noise_scale,
                           std::uint64_t gen_seed) {
  ReleaseState s = release_breakdown(params.bounds.clamp(cmd), params).release;
  if (noise_scale != 0.0) {
    std::mt19937_64 gen(gen_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto& sig = params.noise_sigma;
    s.pose.x += noise_scale * sig[0] * normal(gen);
    s.pose.z += noise_scale * sig[1] * normal(gen);
    s.pose.theta += noise_scale * sig[2] * normal(gen);
    s.twist.vx += noise_scale * sig[3] * normal(gen);
    s.twist.vz += noise_scale * sig[4] * normal(gen);
    s.twist.omega += noise_scale * sig[5] * normal(gen);
  }
  return s;
}

Plant::Plant(PlantParams params, double noise_scale)
    : params_(std::move(params)), noise_scale_(noise_scale) {
  validate(params_);
  if (!std::isfinite(noise_scale_) || noise_scale_ < 0.0) {
    throw std::invalid_argument("noise scale must be finite and >= 0");
  }
}

TrialRecord Plant::throw_once(const Command& cmd, std::uint64_t seed, std::int64_t trial_id) const {
  TrialRecord r;
  r.requested = cmd;
  r.command = params_.bounds.clamp(cmd);
  r.clamped = !(r.command == cmd);
  r.trial_id = trial_id;
  r.seed = seed;
  r.release = release_state(r.command, params_, noise_scale_, seed);
  if (auto l = try_landing_pose(r.release)) {
    r.landing = *l;
  } else {
    r.valid = false;
    r.landing = {std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN()};
  }
  return r;
}

Plant Plant::with_com_shift(double dh) const {
  PlantParams p = params_;
  p.h_com += dh;
  return Plant(p, noise_scale_);
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (c + 0x85157af5ULL));
  return h;
}

std::vector<TrialRecord> grid_sweep(const SweepAxes& axes, int reps, const Plant& plant,
                                    std::uint64_t seed) {
  if (axes.pitch.empty() || axes.speed.empty() || axes.damping.empty()) {
    throw std::invalid_argument("grid_sweep: empty axis");
  }
  if (reps < 1) {
    throw std::invalid_argument("grid_sweep: reps must be >= 1");
  }
  std::vector<TrialRecord> out;
  out.reserve(axes.pitch.size() * axes.speed.size() * axes.damping.size() *
              static_cast<std::size_t>(reps));
  std::int64_t id = 0;
  std::uint64_t cmd_index = 0;
  for (double g : axes.pitch) {
    for (double s : axes.speed) {
      for (double d : axes.damping) {
        for (int r = 0; r < reps; ++r) {
          const auto trial_seed = derive_seed(seed, 0x5eedULL, cmd_index, static_cast<std::uint64_t>(r));
          out.push_back(plant.throw_once({g, s, d}, trial_seed, id++));
        }
        ++cmd_index;
      }
    }
  }
  return out;
}

}  // namespace throwflip
