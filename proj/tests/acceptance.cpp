// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "json.hpp"
#include "test_util.hpp"
#include "throwflip/campaign.hpp"
#include "throwflip/planar.hpp"

#ifndef THROWFLIP_CLI_PATH
#define THROWFLIP_CLI_PATH "throwflip"
#endif

using namespace throwflip;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
  const auto start = Clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const std::chrono::duration<double> dt = Clock::now() - start;
  if (!v.pass) ++failures;
  std::ostringstream os;
  os.precision(3);
  os << (v.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << name << " (" << v.detail
     << "; " << std::fixed << dt.count() << " s)";
  std::cout << os.str() << std::endl;
}

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// 1. Closed-form flowmap vs numeric integration.
Verdict flowmap_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  std::vector<ReleaseState> states;
  for (int i = 0; i < 10000; ++i) states.push_back(testutil::random_release(rng));
  const auto closed = landing_poses_parallel(states);
  const auto oracle = oracle_landing_poses_parallel(states);
  double dx = 0, dth = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!closed[i]) return {false, "closed form found no landing for a sampled state"};
    dx = std::max(dx, std::abs(closed[i]->x - oracle[i].x));
    dth = std::max(dth, std::abs(closed[i]->theta - oracle[i].theta));
  }
  const double t = elapsed(start);
  return {dx < 1e-8 && dth < 1e-8 && t < 5.0,
          "10000 states, max |dx| = " + num(dx) + ", max |dtheta| = " + num(dth) + ", limit 1e-8, " +
              num(t, 3) + " s of 5 s"};
}

// 2. Flight time values.
Verdict flying_time() {
  const double a = fly_time(1.0, 0.0, 0.0);
  const double b = fly_time(0.0, 1.0, 0.0);
  return {std::abs(a - 0.451523) <= 1e-6 && std::abs(b - 0.203873) <= 1e-6,
          "fly_time(1,0,0) = " + num(a, 9) + ", fly_time(0,1,0) = " + num(b, 9)};
}

// 3. Plant trends and full-flip reachability.
Verdict plant_trends() {
  const auto start = Clock::now();
  const PlantParams p;
  const CommandBounds& b = p.bounds;
  const int n = 21;
  const auto ax = [&](double lo, double hi, int i) { return lo + (hi - lo) * i / (n - 1); };
  const auto land = [&](double g, double s, double d) { return landing_pose(release_state({g, s, d}, p)); };
  int violations = 0;
  double max_flip = -1e9;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k + 1 < n; ++k) {
        const double g0 = ax(b.pitch_min, b.pitch_max, k), g1 = ax(b.pitch_min, b.pitch_max, k + 1);
        const double s0 = ax(b.speed_min, b.speed_max, k), s1 = ax(b.speed_min, b.speed_max, k + 1);
        const double d0 = ax(b.damping_min, b.damping_max, k),
                     d1 = ax(b.damping_min, b.damping_max, k + 1);
        const double si = ax(b.speed_min, b.speed_max, i), dj = ax(b.damping_min, b.damping_max, j);
        const double gi = ax(b.pitch_min, b.pitch_max, i), sj = ax(b.speed_min, b.speed_max, j);
        auto a = land(g0, si, dj), c = land(g1, si, dj);
        if (!(c.x < a.x && c.theta > a.theta)) ++violations;
        a = land(gi, s0, dj), c = land(gi, s1, dj);
        if (!(c.x > a.x && c.theta > a.theta)) ++violations;
        a = land(gi, sj, d0), c = land(gi, sj, d1);
        if (!(c.x <= a.x && c.theta > a.theta)) ++violations;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const auto r = release_state({ax(b.pitch_min, b.pitch_max, i), ax(b.speed_min, b.speed_max, j),
                                      ax(b.damping_min, b.damping_max, k)},
                                     p);
        max_flip = std::max(max_flip, landing_pose(r).theta - r.pose.theta);
      }
    }
  }
  const double t = elapsed(start);
  return {violations == 0 && max_flip >= kTwoPi && t < 1.0,
          std::to_string(3 * n * n * (n - 1)) + " monotonicity checks, " + std::to_string(violations) +
              " violations, max in-flight rotation " + num(max_flip * 180 / kPi) + " deg"};
}

// 4. Sweep accounting and determinism.
Verdict sweep_accounting() {
  CampaignSpec s;
  s.kind = CampaignKind::Sweep;
  s.seeds = {11};
  const auto a = run_campaign(s);
  const auto b = run_campaign(s);
  s.seeds = {12};
  const auto c = run_campaign(s);
  const bool same = a.trials_csv == b.trials_csv && a.summary_json == b.summary_json;
  return {a.trial_rows == 135 && same && a.trials_csv != c.trials_csv,
          std::to_string(a.trial_rows) + " trials, rerun identical: " + (same ? "yes" : "no") +
              ", other seed differs: " + (a.trials_csv != c.trials_csv ? "yes" : "no")};
}

// 5. CoM shift keeps the grasp-point twist and is the identity at dh = 0.
Verdict shift_identity() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dh(-0.2, 0.2), h(0.05, 0.3);
  double worst = 0;
  bool exact = true, identity = true;
  for (int i = 0; i < 10000; ++i) {
    const auto s = testutil::random_release(rng);
    const double d = dh(rng), hc = h(rng);
    const auto t = shift_release_state(s, {d});
    exact = exact && t.pose.theta == s.pose.theta && t.twist.omega == s.twist.omega;
    identity = identity && shift_release_state(s, {0.0}) == s;
    const double th = s.pose.theta;
    const PlanarPose grasp{s.pose.x - hc * std::sin(th), s.pose.z + hc * std::cos(th), th};
    const auto c0 = contact_twist(s.twist, relative_coords(s.pose, grasp));
    const auto c1 = contact_twist(t.twist, relative_coords(t.pose, grasp));
    worst = std::max({worst, std::abs(c0.vx - c1.vx), std::abs(c0.vz - c1.vz)});
  }
  return {worst <= 1e-12 && exact && identity,
          "10000 states, max contact-twist change " + num(worst) + ", theta/omega exact: " +
              (exact ? "yes" : "no") + ", dh=0 identity: " + (identity ? "yes" : "no")};
}

// 6. Both models reproduce the stored vertices.
Verdict vertex_agreement() {
  std::mt19937_64 rng(6);
  const PlantParams p;
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    Dataset d;
    for (int k = 0; k < 3; ++k) {
      const auto c = testutil::random_command(rng);
      const auto r = release_state(c, p);
      d.push_back({c, r, landing_pose(r), 1, Provenance::Observed});
    }
    const auto n = make_triple(d, {0, 1, 2});
    const ConeCoordinate vertices[] = {{0, 0}, {1, 0}, {0, 1}};
    for (int k = 0; k < 3; ++k) {
      for (const auto& l : {predict_m1(n, vertices[k]), predict_m2(n, vertices[k])}) {
        worst = std::max({worst, std::abs(l.x - d[k].landing.x), std::abs(l.theta - d[k].landing.theta)});
      }
    }
  }
  return {worst <= 1e-9, "1000 triples, max vertex deviation " + num(worst)};
}

// 7. M2 needs fewer iterations than M1.
Verdict model_ordering() {
  const auto start = Clock::now();
  CampaignSpec s;
  s.kind = CampaignKind::Compare;
  s.models = {ModelKind::M1, ModelKind::M2};
  s.targets = default_targets();
  s.seeds.clear();
  for (std::uint64_t k = 0; k < 20; ++k) s.seeds.push_back(1000 + k);
  s.learner.max_iterations = 5;
  s.learner.trials_per_command = 3;
  const auto out = run_campaign(s);
  const auto j = nlohmann::json::parse(out.summary_json);
  const auto& m1 = j["pooled"]["m1"];
  const auto& m2 = j["pooled"]["m2"];
  const double it1 = m1["mean_iterations_to_two"], it2 = m2["mean_iterations_to_two"];
  const double e1 = m1["mean_first_error"], e2 = m2["mean_first_error"];
  const double red = j["pooled_reduction"]["iterations_to_two_reduction_percent"];
  const double t = elapsed(start);
  return {it2 < it1 && red >= 25.0 && e2 < e1 && t < 120.0,
          "80 paired runs, iterations to 2/3: m1 " + num(it1) + ", m2 " + num(it2) + ", reduction " +
              num(red, 3) + "% (need 25%), first-iteration error: m1 " + num(e1) + ", m2 " + num(e2)};
}

// 8. Transfer beats learning from scratch after a CoM shift.
Verdict transfer_ordering() {
  const auto start = Clock::now();
  CampaignSpec s;
  s.kind = CampaignKind::Transfer;
  s.targets = default_targets();
  s.seeds.clear();
  for (std::uint64_t k = 0; k < 20; ++k) s.seeds.push_back(2000 + k);
  s.learner.max_iterations = 9;
  s.dh = 0.06;
  const auto out = run_campaign(s);
  const auto j = nlohmann::json::parse(out.summary_json);
  const double frac = j["fraction_m3_strictly_fewer"];
  const double red = j["iterations_to_all_reduction_percent"];

  // Noiseless: 3/3 within three iterations for every target.
  const Plant source(s.plant, 0.0);
  const Plant shifted = source.with_com_shift(s.dh);
  const auto past = summarize_trials(grid_sweep(s.sweep, 1, source, 0));
  int worst = 0;
  for (const auto& target : s.targets) {
    const auto r = learn_transfer(past, {s.dh}, target, s.learner, shifted, 0);
    worst = std::max(worst, r.iterations_to_all.value_or(99));
  }
  const double t = elapsed(start);
  return {frac >= 0.8 && red >= 50.0 && worst <= 3 && t < 120.0,
          std::to_string(j["pairs"].get<int>()) + " pairs, m3 strictly faster in " + num(100 * frac, 3) +
              "% (need 80%), iterations to 3/3: m3 " + num(j["m3"]["mean_iterations_to_all"].get<double>()) +
              ", scratch m2 " + num(j["m2_scratch"]["mean_iterations_to_all"].get<double>()) +
              ", reduction " + num(red, 3) + "% (need 50%), noiseless m3 worst case " +
              std::to_string(worst) + " iterations (need 3)"};
}

// 9. CLI reruns are byte-identical.
std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Verdict cli_determinism() {
  const auto root = std::filesystem::temp_directory_path() / "throwflip_acceptance";
  std::filesystem::remove_all(root);
  int compared = 0, differing = 0;
  for (const std::string cmd : {"sweep", "learn", "compare", "transfer"}) {
    for (const std::string run : {"a", "b"}) {
      const auto dir = root / cmd / run;
      const std::string line = std::string("\"") + THROWFLIP_CLI_PATH + "\" " + cmd +
                               " --seed 5 --num-seeds 2 -q --out \"" + dir.string() + "\" > /dev/null";
      if (std::system(line.c_str()) != 0) return {false, "CLI failed: " + line};
    }
    for (const auto& entry : std::filesystem::directory_iterator(root / cmd / "a")) {
      ++compared;
      if (slurp(entry.path()) != slurp(root / cmd / "b" / entry.path().filename())) ++differing;
    }
  }
  std::filesystem::remove_all(root);
  return {compared >= 9 && differing == 0,
          std::to_string(compared) + " output files compared across 4 campaigns, " +
              std::to_string(differing) + " differ"};
}

// 10. A corrupted dataset row is overcome through neighbor re-selection.
Verdict corrupted_row_escape() {
  const Plant plant(PlantParams{}, 0.0);
  const auto support = build_support(default_support_commands(), plant, 3, 0);
  LearnerConfig cfg;
  cfg.max_iterations = 8;
  std::mt19937_64 rng(10);
  std::gamma_distribution<double> g(1.0, 1.0);
  int solved = 0, escaped = 0;
  const int runs = 20;
  for (int k = 0; k < runs; ++k) {
    double w[4], sum = 0;
    for (double& x : w) sum += (x = g(rng));
    LandingPose l{};
    for (int i = 0; i < 4; ++i) l = l + (w[i] / sum) * support[i].landing;
    const TargetSpec target{l.x, l.theta};

    // Mislabeled row: a real command whose recorded outcome is fabricated so
    // that it ranks third, between the two closest support entries and the rest.
    Dataset data = support;
    const auto ranked = rank_entries(support, target);
    const double e2 = normalized_error(support[ranked[1]].landing, target);
    const double e3 = normalized_error(support[ranked[2]].landing, target);
    const double radius = 0.5 * (e2 + e3);
    DatasetEntry bad = support[3];
    bad.command = 0.5 * (support[0].command + support[3].command);
    const auto truth = release_state(bad.command, plant.params());
    bad.release = truth;
    const double tf = fly_time(truth.pose.z, truth.twist.vz);
    const double dir = k * 0.7;
    bad.landing = {target.x + radius * target.eps_x * std::cos(dir),
                   target.theta + radius * target.eps_theta * std::sin(dir)};
    bad.release.twist.vx = (bad.landing.x - truth.pose.x) / tf;
    bad.release.twist.omega = (bad.landing.theta - truth.pose.theta) / tf;
    data.push_back(bad);

    const auto r = learn(data, target, cfg, plant, 0);
    if (r.status == LearnStatus::Success) ++solved;
    for (const auto& it : r.iterations) {
      if (it.escape_level > 0) {
        ++escaped;
        break;
      }
    }
  }
  return {solved == runs && escaped > 0,
          std::to_string(runs) + " in-hull targets with a corrupted row, solved within T=8: " +
              std::to_string(solved) + ", runs that used re-selection: " + std::to_string(escaped)};
}

}  // namespace

int main() {
  report(1, "flowmap matches numeric integration", flowmap_oracle);
  report(2, "flight time formula", flying_time);
  report(3, "plant trends and full flip", plant_trends);
  report(4, "grid sweep accounting", sweep_accounting);
  report(5, "CoM shift contact-twist identity", shift_identity);
  report(6, "model vertex agreement", vertex_agreement);
  report(7, "M2 vs M1 sample complexity", model_ordering);
  report(8, "transfer vs scratch after CoM shift", transfer_ordering);
  report(9, "CLI rerun determinism", cli_determinism);
  report(10, "stagnation escape with a corrupted row", corrupted_row_escape);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures;
}
