// throwflip: run sweep, learn, compare and transfer campaigns on the
// simulated throwing plant.
//
// Exit codes: 0 success, 1 usage error, 2 configuration error,
//             3 campaign failure.

#include <cmath>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "throwflip/campaign.hpp"

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Overrides {
  std::string spec_path;
  std::string plant_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> num_seeds;
  std::optional<std::string> out;
  std::optional<int> trials;
  std::optional<int> max_iters;
  std::vector<std::string> models;
  std::optional<double> mesh_min, mesh_max, mesh_step;
  bool cone_nonneg = false;
  std::optional<double> target_x, target_theta_deg;
  std::optional<double> eps_x, eps_theta_deg;
  std::optional<double> dh;
  std::optional<int> reps;
  std::optional<double> noise_scale;
  bool quiet = false;
};

void add_common(CLI::App* app, Overrides& o, bool learning) {
  app->add_option("--spec", o.spec_path, "Campaign spec JSON")->check(CLI::ExistingFile);
  app->add_option("--plant", o.plant_path, "Plant parameter JSON")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "Master seed (first seed when --num-seeds > 1)");
  app->add_option("--num-seeds", o.num_seeds, "Run seeds seed, seed+1, ...")->check(CLI::PositiveNumber);
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--noise-scale", o.noise_scale, "Multiplier on the plant noise")
      ->check(CLI::NonNegativeNumber);
  app->add_flag("-q,--quiet", o.quiet, "Do not print the summary table");
  if (!learning) {
    app->add_option("--reps", o.reps, "Throws per grid command")->check(CLI::PositiveNumber);
    return;
  }
  app->add_option("--trials-per-command", o.trials, "Throws per executed command (N)")
      ->check(CLI::PositiveNumber);
  app->add_option("--max-iters", o.max_iters, "Iteration budget (T)")->check(CLI::PositiveNumber);
  app->add_option("--model", o.models, "Model(s): m1, m2 (repeatable)");
  app->add_option("--mesh-min", o.mesh_min, "Cone mesh lower bound");
  app->add_option("--mesh-max", o.mesh_max, "Cone mesh upper bound");
  app->add_option("--mesh-step", o.mesh_step, "Cone mesh step");
  app->add_flag("--cone-nonneg", o.cone_nonneg, "Restrict cone coordinates to >= 0");
  app->add_option("--target-x", o.target_x, "Single target landing position [m]");
  app->add_option("--target-theta-deg", o.target_theta_deg, "Single target landing angle [deg]");
  app->add_option("--eps-x", o.eps_x, "Position tolerance [m]");
  app->add_option("--eps-theta-deg", o.eps_theta_deg, "Angle tolerance [deg]");
}

throwflip::CampaignSpec build_spec(throwflip::CampaignKind kind, const Overrides& o) {
  using namespace throwflip;
  CampaignSpec spec;
  if (!o.spec_path.empty()) {
    spec = load_campaign_spec(o.spec_path);
  } else {
    spec.targets = default_targets();
    if (kind == CampaignKind::Compare) spec.models = {ModelKind::M1, ModelKind::M2};
    if (kind == CampaignKind::Transfer) spec.learner.max_iterations = 9;
  }
  spec.kind = kind;
  if (!o.plant_path.empty()) {
    spec.plant = load_plant_params(o.plant_path);
    spec.plant_path = o.plant_path;
  }
  if (o.seed || o.num_seeds) {
    const std::uint64_t first = o.seed.value_or(spec.seeds.front());
    const int n = o.num_seeds.value_or(1);
    spec.seeds.clear();
    for (int i = 0; i < n; ++i) spec.seeds.push_back(first + static_cast<std::uint64_t>(i));
  }
  if (o.out) spec.out_dir = *o.out;
  if (o.noise_scale) spec.noise_scale = *o.noise_scale;
  if (o.reps) spec.sweep_reps = *o.reps;
  if (o.trials) spec.learner.trials_per_command = *o.trials;
  if (o.max_iters) spec.learner.max_iterations = *o.max_iters;
  if (!o.models.empty()) {
    spec.models.clear();
    for (const auto& m : o.models) {
      try {
        spec.models.push_back(parse_model(m));
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (o.mesh_min) spec.learner.mesh.min = *o.mesh_min;
  if (o.mesh_max) spec.learner.mesh.max = *o.mesh_max;
  if (o.mesh_step) spec.learner.mesh.step = *o.mesh_step;
  if (o.cone_nonneg) spec.learner.mesh.nonneg = true;
  if (o.target_x.has_value() != o.target_theta_deg.has_value()) {
    throw ConfigError("--target-x and --target-theta-deg must be given together");
  }
  if (o.target_x) {
    spec.targets = {TargetSpec{*o.target_x, *o.target_theta_deg * kDeg}};
  }
  for (auto& t : spec.targets) {
    if (o.eps_x) t.eps_x = *o.eps_x;
    if (o.eps_theta_deg) t.eps_theta = *o.eps_theta_deg * kDeg;
  }
  if (o.dh) spec.dh = *o.dh;
  spec.validate();
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace throwflip;
  CLI::App app{"Planar throw-and-flip simulation and command learning"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Overrides o;
  auto* sweep = app.add_subcommand("sweep", "Grid sweep of the plant (landing scatter)");
  add_common(sweep, o, false);
  auto* learn = app.add_subcommand("learn", "Learn a command for each target and seed");
  add_common(learn, o, true);
  auto* compare = app.add_subcommand("compare", "Paired model comparison on shared support sets");
  add_common(compare, o, true);
  auto* transfer =
      app.add_subcommand("transfer", "Reuse past data after a CoM shift vs learning from scratch");
  add_common(transfer, o, true);
  transfer->add_option("--dh", o.dh, "CoM shift along the bar [m]");
  transfer->add_option("--reps", o.reps, "Throws per command of the source sweep")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  CampaignKind kind = CampaignKind::Sweep;
  if (*learn) kind = CampaignKind::Learn;
  if (*compare) kind = CampaignKind::Compare;
  if (*transfer) kind = CampaignKind::Transfer;

  CampaignSpec spec;
  try {
    spec = build_spec(kind, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const CampaignOutput out = run_campaign(spec);
    write_outputs(out, spec.out_dir);
    if (!o.quiet) std::cout << out.table;
    std::cout << "wrote " << out.trial_rows << " trial rows to "
              << (spec.out_dir / (out.name + ".csv")).string() << "\n";
    if (out.failed_runs > 0) {
      std::cerr << "warning: " << out.failed_runs << " of " << out.total_runs
                << " runs failed\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "campaign failed: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
