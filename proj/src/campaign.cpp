#include "throwflip/campaign.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace throwflip {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double to_deg(double rad) { return rad / kDeg; }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double iterations_or_penalty(const std::optional<int>& it, int max_iterations) {
  return it ? static_cast<double>(*it) : static_cast<double>(max_iterations + 1);
}

std::string to_string(CampaignKind k) {
  switch (k) {
    case CampaignKind::Sweep: return "sweep";
    case CampaignKind::Learn: return "learn";
    case CampaignKind::Compare: return "compare";
    case CampaignKind::Transfer: return "transfer";
  }
  return "?";
}

CampaignKind parse_campaign_kind(const std::string& s) {
  if (s == "sweep") return CampaignKind::Sweep;
  if (s == "learn") return CampaignKind::Learn;
  if (s == "compare") return CampaignKind::Compare;
  if (s == "transfer") return CampaignKind::Transfer;
  throw ConfigError("unknown campaign kind '" + s + "'");
}

std::vector<TargetSpec> default_targets() {
  std::vector<TargetSpec> out;
  for (double x : {1.2, 1.4}) {
    for (double deg : {180.0, 360.0}) {
      out.push_back({x, deg * kDeg, 0.05, 45.0 * kDeg});
    }
  }
  return out;
}

void CampaignSpec::validate() const {
  if (seeds.empty()) throw ConfigError("campaign: seeds must be nonempty");
  if (kind != CampaignKind::Sweep && targets.empty()) {
    throw ConfigError("campaign: learning campaigns need at least one target");
  }
  if (kind == CampaignKind::Compare && models.size() < 2) {
    throw ConfigError("compare: select at least two models");
  }
  if (models.empty()) throw ConfigError("campaign: no model selected");
  try {
    learner.validate();
    for (const auto& t : targets) t.validate();
    throwflip::validate(plant);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("campaign: ") + e.what());
  }
  if (sweep_reps < 1) throw ConfigError("sweep: reps must be >= 1");
  if (sweep.pitch.empty() || sweep.speed.empty() || sweep.damping.empty()) {
    throw ConfigError("sweep: every axis needs at least one value");
  }
  if (kind != CampaignKind::Sweep && support.size() < 3) {
    throw ConfigError("campaign: support needs at least 3 commands");
  }
  if (!(noise_scale >= 0.0)) throw ConfigError("campaign: noise_scale must be >= 0");
  if (!std::isfinite(dh) || std::abs(dh) >= 1.0) throw ConfigError("transfer: |dh| must be < 1 m");
}

// ---------------------------------------------------------------------------
// Spec file

namespace {

std::vector<double> number_list(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("spec: '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("spec: '" + key + "' must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Command command_from(const json& v) {
  if (v.is_array() && v.size() == 3 && v[0].is_number() && v[1].is_number() && v[2].is_number()) {
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  }
  throw ConfigError("spec: a command is a [gamma, s, D] array");
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("spec: '" + key + "' must be a number");
  return v.get<double>();
}

void require_known(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, _] : obj.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* s) { return k == s; }) == keys.end()) {
      throw ConfigError("spec: unknown key '" + k + "' in " + where);
    }
  }
}

}  // namespace

CampaignSpec parse_campaign_spec(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1 + static_cast<std::size_t>(
                               std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(
                                                                          std::min(e.byte, text.size())),
                                          '\n'));
    throw ConfigError("spec: parse error on line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("spec: top level must be an object");
  require_known(doc,
                {"kind", "plant", "noise_scale", "targets", "eps_x", "eps_theta_deg", "models",
                 "seeds", "out", "trials_per_command", "max_iterations", "mesh", "support", "sweep",
                 "dh", "stagnation_margin"},
                "campaign spec");

  CampaignSpec spec;
  if (doc.contains("kind")) spec.kind = parse_campaign_kind(doc["kind"].get<std::string>());
  if (doc.contains("plant")) {
    const auto& p = doc["plant"];
    if (p.is_string()) {
      std::filesystem::path path = p.get<std::string>();
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      spec.plant = load_plant_params(path);
      spec.plant_path = path.string();
    } else if (p.is_object()) {
      spec.plant = parse_plant_params(p.dump());
    } else {
      throw ConfigError("spec: 'plant' must be a path or an object");
    }
  }
  if (doc.contains("noise_scale")) spec.noise_scale = number(doc["noise_scale"], "noise_scale");

  const double eps_x = doc.contains("eps_x") ? number(doc["eps_x"], "eps_x") : 0.05;
  const double eps_theta =
      (doc.contains("eps_theta_deg") ? number(doc["eps_theta_deg"], "eps_theta_deg") : 45.0) * kDeg;
  if (doc.contains("targets")) {
    if (!doc["targets"].is_array()) throw ConfigError("spec: 'targets' must be an array");
    for (const auto& t : doc["targets"]) {
      if (!t.is_object()) throw ConfigError("spec: each target is an object {x, theta_deg}");
      require_known(t, {"x", "theta_deg", "eps_x", "eps_theta_deg"}, "target");
      if (!t.contains("x") || !t.contains("theta_deg")) {
        throw ConfigError("spec: target needs 'x' and 'theta_deg'");
      }
      TargetSpec ts{number(t["x"], "x"), number(t["theta_deg"], "theta_deg") * kDeg, eps_x, eps_theta};
      if (t.contains("eps_x")) ts.eps_x = number(t["eps_x"], "eps_x");
      if (t.contains("eps_theta_deg")) ts.eps_theta = number(t["eps_theta_deg"], "eps_theta_deg") * kDeg;
      spec.targets.push_back(ts);
    }
  } else {
    spec.targets = default_targets();
    for (auto& t : spec.targets) {
      t.eps_x = eps_x;
      t.eps_theta = eps_theta;
    }
  }
  if (doc.contains("models")) {
    spec.models.clear();
    for (const auto& m : doc["models"]) {
      try {
        spec.models.push_back(parse_model(m.get<std::string>()));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("spec: ") + e.what());
      }
    }
  } else if (spec.kind == CampaignKind::Compare) {
    spec.models = {ModelKind::M1, ModelKind::M2};
  }
  if (doc.contains("seeds")) {
    spec.seeds.clear();
    for (const auto& s : doc["seeds"]) {
      if (!s.is_number_unsigned()) throw ConfigError("spec: seeds must be nonnegative integers");
      spec.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (doc.contains("out")) spec.out_dir = doc["out"].get<std::string>();
  if (doc.contains("trials_per_command")) {
    spec.learner.trials_per_command = doc["trials_per_command"].get<int>();
  }
  if (doc.contains("max_iterations")) {
    spec.learner.max_iterations = doc["max_iterations"].get<int>();
  } else if (spec.kind == CampaignKind::Transfer) {
    spec.learner.max_iterations = 9;
  }
  if (doc.contains("stagnation_margin")) {
    spec.learner.stagnation.min_improvement = number(doc["stagnation_margin"], "stagnation_margin");
  }
  if (doc.contains("mesh")) {
    const auto& m = doc["mesh"];
    require_known(m, {"min", "max", "step", "nonneg"}, "mesh");
    if (m.contains("min")) spec.learner.mesh.min = number(m["min"], "mesh.min");
    if (m.contains("max")) spec.learner.mesh.max = number(m["max"], "mesh.max");
    if (m.contains("step")) spec.learner.mesh.step = number(m["step"], "mesh.step");
    if (m.contains("nonneg")) spec.learner.mesh.nonneg = m["nonneg"].get<bool>();
  }
  if (doc.contains("support")) {
    spec.support.clear();
    for (const auto& c : doc["support"]) spec.support.push_back(command_from(c));
  }
  if (doc.contains("sweep")) {
    const auto& s = doc["sweep"];
    require_known(s, {"pitch", "speed", "damping", "reps"}, "sweep");
    if (s.contains("pitch")) spec.sweep.pitch = number_list(s["pitch"], "sweep.pitch");
    if (s.contains("speed")) spec.sweep.speed = number_list(s["speed"], "sweep.speed");
    if (s.contains("damping")) spec.sweep.damping = number_list(s["damping"], "sweep.damping");
    if (s.contains("reps")) spec.sweep_reps = s["reps"].get<int>();
  }
  if (doc.contains("dh")) spec.dh = number(doc["dh"], "dh");
  spec.validate();
  return spec;
}

CampaignSpec load_campaign_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_campaign_spec(ss.str(), path.parent_path());
  } catch (const json::exception& e) {
    throw ConfigError("spec " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV rendering

namespace {

constexpr const char* kCsvColumns =
    "campaign,phase,method,target_x,target_theta,seed,iteration,trial,gamma,speed,damping,"
    "clamped,valid,x_o,z_o,theta_o,vx_o,vz_o,omega_o,x_land,theta_land,error,within";

std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + 16, v, 16);
  return std::string(buf, res.ptr);
}

std::string csv_header(const CampaignSpec& spec) {
  std::string seeds;
  for (std::size_t i = 0; i < spec.seeds.size(); ++i) {
    if (i) seeds += ' ';
    seeds += std::to_string(spec.seeds[i]);
  }
  std::string h;
  h += std::string("# ") + kToolVersion + "\n";
  h += "# plant_hash=" + hex64(params_hash(spec.plant)) + "\n";
  h += "# seeds=" + seeds + "\n";
  h += std::string(kCsvColumns) + "\n";
  return h;
}

struct RowContext {
  std::string campaign;
  std::string phase;   // support | learn | sweep | source | bootstrap
  std::string method;  // m1 | m2 | m3 | m2-scratch | plant
  const TargetSpec* target = nullptr;
  std::uint64_t seed = 0;
  int iteration = 0;
};

void append_row(std::string& out, const RowContext& ctx, int trial, const TrialRecord& r) {
  const auto f = [](double v) { return format_double(v); };
  std::string row;
  row.reserve(256);
  row += ctx.campaign + ',' + ctx.phase + ',' + ctx.method + ',';
  row += (ctx.target ? f(ctx.target->x) : std::string()) + ',';
  row += (ctx.target ? f(ctx.target->theta) : std::string()) + ',';
  row += std::to_string(ctx.seed) + ',' + std::to_string(ctx.iteration) + ',' +
         std::to_string(trial) + ',';
  row += f(r.command.pitch) + ',' + f(r.command.speed) + ',' + f(r.command.damping) + ',';
  row += std::string(r.clamped ? "1" : "0") + ',' + (r.valid ? "1" : "0") + ',';
  const auto& s = r.release;
  row += f(s.pose.x) + ',' + f(s.pose.z) + ',' + f(s.pose.theta) + ',' + f(s.twist.vx) + ',' +
         f(s.twist.vz) + ',' + f(s.twist.omega) + ',';
  row += f(r.landing.x) + ',' + f(r.landing.theta) + ',';
  if (ctx.target && r.valid) {
    row += f(normalized_error(r.landing, *ctx.target)) + ',' +
           (ctx.target->within(r.landing) ? "1" : "0");
  } else {
    row += ",";
  }
  row += '\n';
  out += row;
}

std::size_t append_trials(std::string& out, RowContext ctx, const std::vector<TrialRecord>& trials,
                          int per_iteration) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const int trial = per_iteration > 0 ? static_cast<int>(i) % per_iteration : static_cast<int>(i);
    append_row(out, ctx, trial, trials[i]);
    ++n;
  }
  return n;
}

std::size_t append_learning(std::string& out, RowContext ctx, const LearningResult& r) {
  std::size_t n = 0;
  for (const auto& it : r.iterations) {
    ctx.iteration = it.iteration;
    for (std::size_t j = 0; j < it.trials.size(); ++j) {
      append_row(out, ctx, static_cast<int>(j), it.trials[j]);
      ++n;
    }
  }
  return n;
}

json target_json(const TargetSpec& t) {
  return {{"x", t.x}, {"theta_deg", to_deg(t.theta)}, {"eps_x", t.eps_x},
          {"eps_theta_deg", to_deg(t.eps_theta)}};
}

json run_json(const LearningResult& r, int max_iterations) {
  json it = json::array();
  for (const auto& log : r.iterations) {
    it.push_back({{"iteration", log.iteration},
                  {"alpha", {log.alpha.alpha1, log.alpha.alpha2}},
                  {"command", {log.command.pitch, log.command.speed, log.command.damping}},
                  {"predicted_error", log.predicted_error},
                  {"error", log.error},
                  {"mean_x", log.mean_landing.x},
                  {"mean_theta_deg", to_deg(log.mean_landing.theta)},
                  {"successes", log.successes},
                  {"escape_level", log.escape_level},
                  {"stagnated", log.stagnated}});
  }
  json j = {{"status", r.status == LearnStatus::Success ? "success" : "exhausted"},
            {"initial_error", r.initial_error},
            {"first_error", r.first_error()},
            {"min_error", r.min_error()},
            {"iterations_to_two", r.iterations_to_two ? json(*r.iterations_to_two) : json(nullptr)},
            {"iterations_to_all", r.iterations_to_all ? json(*r.iterations_to_all) : json(nullptr)},
            {"iterations_to_two_or_penalty", iterations_or_penalty(r.iterations_to_two, max_iterations)},
            {"iterations_to_all_or_penalty", iterations_or_penalty(r.iterations_to_all, max_iterations)},
            {"best_command", {r.best_command.pitch, r.best_command.speed, r.best_command.damping}},
            {"best_error", r.best_error},
            {"trials", r.executed_trials()},
            {"iterations", it}};
  return j;
}

json base_summary(const CampaignSpec& spec) {
  json j;
  j["tool"] = kToolVersion;
  j["campaign"] = to_string(spec.kind);
  j["plant_hash"] = hex64(params_hash(spec.plant));
  j["seeds"] = spec.seeds;
  j["noise_scale"] = spec.noise_scale;
  j["trials_per_command"] = spec.learner.trials_per_command;
  j["max_iterations"] = spec.learner.max_iterations;
  j["mesh"] = {{"min", spec.learner.mesh.min},
               {"max", spec.learner.mesh.max},
               {"step", spec.learner.mesh.step},
               {"nonneg", spec.learner.mesh.nonneg}};
  return j;
}

std::string fixed(double v, int prec = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string target_label(const TargetSpec& t) {
  return "(" + fixed(t.x, 2) + ", " + fixed(to_deg(t.theta), 0) + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// Campaigns

CampaignOutput run_sweep(const CampaignSpec& spec) {
  const Plant plant(spec.plant, spec.noise_scale);
  const std::uint64_t seed = spec.seeds.front();
  const auto trials = grid_sweep(spec.sweep, spec.sweep_reps, plant, seed);

  CampaignOutput out;
  out.name = "sweep";
  out.trials_csv = csv_header(spec);
  RowContext ctx{"sweep", "sweep", "plant", nullptr, seed, 0};
  out.trial_rows = append_trials(out.trials_csv, ctx, trials, spec.sweep_reps);
  out.total_runs = 1;

  // Per-command scatter statistics.
  json commands = json::array();
  std::string scatter = "gamma,speed,damping,n,mean_x,std_x,mean_theta_deg,std_theta_deg\n";
  std::ostringstream table;
  table << "command (gamma, s, D)        n   x_land [m]        theta_land [deg]\n";
  double max_flip = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < trials.size(); k += static_cast<std::size_t>(spec.sweep_reps)) {
    std::vector<double> xs, ths;
    for (int r = 0; r < spec.sweep_reps; ++r) {
      const auto& t = trials[k + static_cast<std::size_t>(r)];
      if (!t.valid) continue;
      xs.push_back(t.landing.x);
      ths.push_back(to_deg(t.landing.theta));
      max_flip = std::max(max_flip, to_deg(t.landing.theta - t.release.pose.theta));
    }
    const auto& c = trials[k].command;
    commands.push_back({{"command", {c.pitch, c.speed, c.damping}},
                        {"n", xs.size()},
                        {"mean_x", mean(xs)},
                        {"std_x", sample_std(xs)},
                        {"mean_theta_deg", mean(ths)},
                        {"std_theta_deg", sample_std(ths)}});
    scatter += format_double(c.pitch) + ',' + format_double(c.speed) + ',' +
               format_double(c.damping) + ',' + std::to_string(xs.size()) + ',' +
               format_double(mean(xs)) + ',' + format_double(sample_std(xs)) + ',' +
               format_double(mean(ths)) + ',' + format_double(sample_std(ths)) + '\n';
    table << "(" << fixed(c.pitch) << ", " << fixed(c.speed) << ", " << fixed(c.damping) << ")   "
          << xs.size() << "   " << fixed(mean(xs), 3) << " +- " << fixed(sample_std(xs), 3)
          << "   " << fixed(mean(ths), 1) << " +- " << fixed(sample_std(ths), 1) << "\n";
  }
  table << "trials: " << trials.size() << ", largest in-flight rotation: " << fixed(max_flip, 1)
        << " deg\n";

  json summary = base_summary(spec);
  summary["reps"] = spec.sweep_reps;
  summary["trials"] = trials.size();
  summary["commands"] = commands;
  summary["max_flight_rotation_deg"] = max_flip;
  out.summary_json = summary.dump(2) + "\n";
  out.table = table.str();
  out.extra_files.emplace_back("sweep_scatter.csv", scatter);
  return out;
}

namespace {

struct LearnCell {
  std::size_t target = 0;
  std::size_t seed = 0;
  std::vector<TrialRecord> support_trials;
  std::vector<LearningResult> results;  // one per model
  std::string error;
};

// Runs every (target, seed) cell with all requested models on a shared
// support set. Cells are independent; results land in fixed slots.
std::vector<LearnCell> run_learning_cells(const CampaignSpec& spec) {
  const Plant plant(spec.plant, spec.noise_scale);
  std::vector<LearnCell> cells;
  for (std::size_t t = 0; t < spec.targets.size(); ++t) {
    for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
      cells.push_back({t, s, {}, {}, {}});
    }
  }
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& cell = cells[static_cast<std::size_t>(i)];
    const auto seed = spec.seeds[cell.seed];
    try {
      const Dataset support = build_support(spec.support, plant, spec.learner.trials_per_command,
                                            seed, &cell.support_trials);
      for (ModelKind m : spec.models) {
        LearnerConfig cfg = spec.learner;
        cfg.model = m;
        cell.results.push_back(learn(support, spec.targets[cell.target], cfg, plant, seed));
      }
    } catch (const std::exception& e) {
      cell.error = e.what();
      cell.results.clear();
    }
  }
  return cells;
}

struct ModelStats {
  std::vector<double> initial, first, min, to_two, to_all;
  std::size_t runs = 0;
  std::size_t fail_two = 0;
  std::size_t fail_all = 0;

  void add(const LearningResult& r, int T) {
    initial.push_back(r.initial_error);
    first.push_back(r.first_error());
    min.push_back(r.min_error());
    to_two.push_back(iterations_or_penalty(r.iterations_to_two, T));
    to_all.push_back(iterations_or_penalty(r.iterations_to_all, T));
    ++runs;
    if (!r.iterations_to_two) ++fail_two;
    if (!r.iterations_to_all) ++fail_all;
  }

  json to_json() const {
    return {{"runs", runs},
            {"mean_initial_error", mean(initial)},
            {"mean_first_error", mean(first)},
            {"mean_min_error", mean(min)},
            {"mean_iterations_to_two", mean(to_two)},
            {"mean_iterations_to_all", mean(to_all)},
            {"failed_two", fail_two},
            {"failed_all", fail_all}};
  }
};

double reduction_percent(double baseline, double candidate) {
  return 100.0 * (1.0 - candidate / baseline);
}

}  // namespace

CampaignOutput run_learn(const CampaignSpec& spec) {
  const auto cells = run_learning_cells(spec);
  const int T = spec.learner.max_iterations;
  const int N = spec.learner.trials_per_command;

  CampaignOutput out;
  out.name = "learn";
  out.trials_csv = csv_header(spec);
  json runs = json::array();
  std::ostringstream table;
  table << "target         seed  model  initial  first  min    it(2/" << N << ")  it(" << N << "/"
        << N << ")  status\n";
  for (const auto& cell : cells) {
    const auto& target = spec.targets[cell.target];
    const auto seed = spec.seeds[cell.seed];
    RowContext sup{"learn", "support", "shared", &target, seed, 0};
    out.trial_rows += append_trials(out.trials_csv, sup, cell.support_trials, N);
    out.total_runs += spec.models.size();
    if (!cell.error.empty()) {
      out.failed_runs += spec.models.size();
      runs.push_back({{"target", target_json(target)}, {"seed", seed}, {"error", cell.error}});
      table << target_label(target) << "  " << seed << "  error: " << cell.error << "\n";
      continue;
    }
    for (std::size_t m = 0; m < spec.models.size(); ++m) {
      const auto& r = cell.results[m];
      RowContext ctx{"learn", "learn", to_string(spec.models[m]), &target, seed, 0};
      out.trial_rows += append_learning(out.trials_csv, ctx, r);
      json j = run_json(r, T);
      j["target"] = target_json(target);
      j["seed"] = seed;
      j["model"] = to_string(spec.models[m]);
      runs.push_back(j);
      const auto it_str = [&](const std::optional<int>& v) {
        return v ? std::to_string(*v) : std::string("failed");
      };
      table << target_label(target) << "  " << seed << "  " << to_string(spec.models[m]) << "     "
            << fixed(r.initial_error) << "     " << fixed(r.first_error()) << "   "
            << fixed(r.min_error()) << "   " << it_str(r.iterations_to_two) << "        "
            << it_str(r.iterations_to_all) << "        "
            << (r.status == LearnStatus::Success ? "success" : "exhausted") << "\n";
    }
  }
  json summary = base_summary(spec);
  summary["runs"] = runs;
  summary["trial_rows"] = out.trial_rows;
  out.summary_json = summary.dump(2) + "\n";
  out.table = table.str();
  return out;
}

CampaignOutput run_compare(const CampaignSpec& spec) {
  const auto cells = run_learning_cells(spec);
  const int T = spec.learner.max_iterations;
  const int N = spec.learner.trials_per_command;
  const std::size_t M = spec.models.size();

  CampaignOutput out;
  out.name = "compare";
  out.trials_csv = csv_header(spec);
  std::vector<std::vector<ModelStats>> per_target(spec.targets.size(), std::vector<ModelStats>(M));
  std::vector<ModelStats> pooled(M);
  for (const auto& cell : cells) {
    const auto& target = spec.targets[cell.target];
    const auto seed = spec.seeds[cell.seed];
    RowContext sup{"compare", "support", "shared", &target, seed, 0};
    out.trial_rows += append_trials(out.trials_csv, sup, cell.support_trials, N);
    out.total_runs += M;
    if (!cell.error.empty()) {
      out.failed_runs += M;
      continue;
    }
    for (std::size_t m = 0; m < M; ++m) {
      RowContext ctx{"compare", "learn", to_string(spec.models[m]), &target, seed, 0};
      out.trial_rows += append_learning(out.trials_csv, ctx, cell.results[m]);
      per_target[cell.target][m].add(cell.results[m], T);
      pooled[m].add(cell.results[m], T);
    }
  }

  // Baseline is the first model listed, candidate the last (m1 vs m2 by default).
  const auto reductions = [&](const std::vector<ModelStats>& stats) {
    json j;
    const auto& base = stats.front();
    const auto& cand = stats.back();
    j["baseline"] = to_string(spec.models.front());
    j["candidate"] = to_string(spec.models.back());
    j["iterations_to_two_reduction_percent"] =
        reduction_percent(mean(base.to_two), mean(cand.to_two));
    j["iterations_to_all_reduction_percent"] =
        reduction_percent(mean(base.to_all), mean(cand.to_all));
    j["first_error_reduction_percent"] = reduction_percent(mean(base.first), mean(cand.first));
    return j;
  };

  json targets = json::array();
  std::ostringstream table;
  table << "target        model  runs  initial  first  min    it(2/" << N << ")  it(" << N << "/"
        << N << ")  fail(2/" << N << ")\n";
  const auto table_rows = [&](const std::string& label, const std::vector<ModelStats>& stats) {
    for (std::size_t m = 0; m < M; ++m) {
      const auto& s = stats[m];
      table << label << "  " << to_string(spec.models[m]) << "     " << s.runs << "    "
            << fixed(mean(s.initial)) << "     " << fixed(mean(s.first)) << "   "
            << fixed(mean(s.min)) << "   " << fixed(mean(s.to_two)) << "     "
            << fixed(mean(s.to_all)) << "     " << s.fail_two << "\n";
    }
  };
  for (std::size_t t = 0; t < spec.targets.size(); ++t) {
    json j;
    j["target"] = target_json(spec.targets[t]);
    json models;
    for (std::size_t m = 0; m < M; ++m) models[to_string(spec.models[m])] = per_target[t][m].to_json();
    j["models"] = models;
    if (per_target[t].front().runs > 0) j["reduction"] = reductions(per_target[t]);
    targets.push_back(j);
    table_rows(target_label(spec.targets[t]), per_target[t]);
  }
  json pooled_json;
  for (std::size_t m = 0; m < M; ++m) pooled_json[to_string(spec.models[m])] = pooled[m].to_json();
  table_rows("pooled      ", pooled);

  json summary = base_summary(spec);
  summary["failure_penalty_iterations"] = T + 1;
  summary["targets"] = targets;
  summary["pooled"] = pooled_json;
  if (pooled.front().runs > 0) {
    summary["pooled_reduction"] = reductions(pooled);
    const auto red = reductions(pooled);
    table << "sample-complexity reduction (" << to_string(spec.models.back()) << " vs "
          << to_string(spec.models.front()) << "): iterations to 2/" << N << " "
          << fixed(red["iterations_to_two_reduction_percent"].get<double>(), 1) << "%, first-iteration error "
          << fixed(red["first_error_reduction_percent"].get<double>(), 1) << "%\n";
  }
  summary["failed_runs"] = out.failed_runs;
  summary["trial_rows"] = out.trial_rows;
  out.summary_json = summary.dump(2) + "\n";
  out.table = table.str();
  return out;
}

CampaignOutput run_transfer(const CampaignSpec& spec) {
  const Plant source_plant(spec.plant, spec.noise_scale);
  const Plant shifted_plant = source_plant.with_com_shift(spec.dh);
  const int T = spec.learner.max_iterations;
  const int N = spec.learner.trials_per_command;
  const CoMShift shift{spec.dh};

  // Past data on the original object: one sweep per seed.
  std::vector<std::vector<TrialRecord>> source_trials(spec.seeds.size());
  std::vector<Dataset> source(spec.seeds.size());
  for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
    source_trials[s] = grid_sweep(spec.sweep, spec.sweep_reps, source_plant,
                                  derive_seed(spec.seeds[s], 0x50ULL));
    source[s] = summarize_trials(source_trials[s]);
  }

  struct Cell {
    std::size_t target = 0, seed = 0;
    std::vector<TrialRecord> scratch_support;
    LearningResult transfer, scratch;
    std::string error;
  };
  std::vector<Cell> cells;
  for (std::size_t t = 0; t < spec.targets.size(); ++t) {
    for (std::size_t s = 0; s < spec.seeds.size(); ++s) cells.push_back({t, s, {}, {}, {}, {}});
  }
  LearnerConfig cfg = spec.learner;
  cfg.model = ModelKind::M2;
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& cell = cells[static_cast<std::size_t>(i)];
    const auto seed = spec.seeds[cell.seed];
    const auto& target = spec.targets[cell.target];
    try {
      cell.transfer = learn_transfer(source[cell.seed], shift, target, cfg, shifted_plant, seed);
      const Dataset support =
          build_support(spec.support, shifted_plant, N, seed, &cell.scratch_support);
      cell.scratch = learn(support, target, cfg, shifted_plant, seed);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  }

  CampaignOutput out;
  out.name = "transfer";
  out.trials_csv = csv_header(spec);
  for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
    RowContext ctx{"transfer", "source", "plant", nullptr, spec.seeds[s], 0};
    out.trial_rows += append_trials(out.trials_csv, ctx, source_trials[s], spec.sweep_reps);
  }
  ModelStats m3, m2;
  std::vector<double> to_all_m3, to_all_m2;
  std::size_t strictly_fewer = 0, pairs = 0;
  json runs = json::array();
  for (const auto& cell : cells) {
    const auto& target = spec.targets[cell.target];
    const auto seed = spec.seeds[cell.seed];
    out.total_runs += 2;
    if (!cell.error.empty()) {
      out.failed_runs += 2;
      runs.push_back({{"target", target_json(target)}, {"seed", seed}, {"error", cell.error}});
      continue;
    }
    RowContext ctx{"transfer", "learn", "m3", &target, seed, 0};
    out.trial_rows += append_learning(out.trials_csv, ctx, cell.transfer);
    RowContext sup{"transfer", "support", "m2-scratch", &target, seed, 0};
    out.trial_rows += append_trials(out.trials_csv, sup, cell.scratch_support, N);
    RowContext scr{"transfer", "learn", "m2-scratch", &target, seed, 0};
    out.trial_rows += append_learning(out.trials_csv, scr, cell.scratch);

    m3.add(cell.transfer, T);
    m2.add(cell.scratch, T);
    const double a = iterations_or_penalty(cell.transfer.iterations_to_all, T);
    const double b = iterations_or_penalty(cell.scratch.iterations_to_all, T);
    ++pairs;
    if (a < b) ++strictly_fewer;
    json j = {{"target", target_json(target)},
              {"seed", seed},
              {"m3", run_json(cell.transfer, T)},
              {"m2_scratch", run_json(cell.scratch, T)}};
    runs.push_back(j);
  }

  json summary = base_summary(spec);
  summary["dh"] = spec.dh;
  summary["failure_penalty_iterations"] = T + 1;
  summary["m3"] = m3.to_json();
  summary["m2_scratch"] = m2.to_json();
  summary["pairs"] = pairs;
  summary["pairs_m3_strictly_fewer"] = strictly_fewer;
  summary["fraction_m3_strictly_fewer"] =
      pairs ? static_cast<double>(strictly_fewer) / static_cast<double>(pairs) : 0.0;
  summary["iterations_to_all_reduction_percent"] =
      pairs ? reduction_percent(mean(m2.to_all), mean(m3.to_all)) : 0.0;
  summary["iterations_to_two_reduction_percent"] =
      pairs ? reduction_percent(mean(m2.to_two), mean(m3.to_two)) : 0.0;
  summary["runs"] = runs;
  summary["failed_runs"] = out.failed_runs;
  summary["trial_rows"] = out.trial_rows;
  out.summary_json = summary.dump(2) + "\n";

  std::ostringstream table;
  table << "CoM shift dh = " << fixed(spec.dh, 3) << " m, " << pairs << " paired runs, T = " << T
        << "\n";
  table << "method       initial  first  min    it(2/" << N << ")  it(" << N << "/" << N
        << ")  fail(" << N << "/" << N << ")\n";
  for (const auto& [name, s] : {std::pair<std::string, const ModelStats*>{"m3        ", &m3},
                                {"m2-scratch", &m2}}) {
    table << name << "   " << fixed(mean(s->initial)) << "     " << fixed(mean(s->first)) << "   "
          << fixed(mean(s->min)) << "   " << fixed(mean(s->to_two)) << "     "
          << fixed(mean(s->to_all)) << "     " << s->fail_all << "\n";
  }
  if (pairs) {
    table << "m3 strictly faster in " << strictly_fewer << "/" << pairs
          << " pairs; iterations to " << N << "/" << N << " reduced by "
          << fixed(summary["iterations_to_all_reduction_percent"].get<double>(), 1) << "%\n";
  }
  out.table = table.str();
  return out;
}

CampaignOutput run_campaign(const CampaignSpec& spec) {
  spec.validate();
  CampaignOutput out;
  switch (spec.kind) {
    case CampaignKind::Sweep: out = run_sweep(spec); break;
    case CampaignKind::Learn: out = run_learn(spec); break;
    case CampaignKind::Compare: out = run_compare(spec); break;
    case CampaignKind::Transfer: out = run_transfer(spec); break;
  }
  if (out.total_runs > 0 && out.failed_runs == out.total_runs) {
    throw CampaignFailure("every learning path failed");
  }
  return out;
}

void write_outputs(const CampaignOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << content;
  };
  write(out.name + ".csv", out.trials_csv);
  write(out.name + "_summary.json", out.summary_json);
  for (const auto& [name, content] : out.extra_files) write(name, content);
}

}  // namespace throwflip
