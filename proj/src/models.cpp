#include "throwflip/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace throwflip {

void TargetSpec::validate() const {
  if (!(eps_x > 0.0) || !(eps_theta > 0.0)) {
    throw std::invalid_argument("target tolerances must be positive");
  }
  if (!std::isfinite(x) || !std::isfinite(theta)) {
    throw std::invalid_argument("target pose must be finite");
  }
}

bool TargetSpec::within(const LandingPose& l) const {
  return std::abs(l.x - x) <= eps_x && std::abs(l.theta - theta) <= eps_theta;
}

DatasetEntry summarize_command(std::span<const TrialRecord> trials) {
  DatasetEntry e;
  ReleaseState release_sum{};
  LandingPose landing_sum{};
  for (const auto& t : trials) {
    e.command = t.command;
    if (!t.valid) continue;
    release_sum = release_sum + t.release;
    landing_sum = landing_sum + t.landing;
    ++e.trials;
  }
  if (e.trials == 0) {
    throw InsufficientData("summarize_command: no valid trial");
  }
  const double inv = 1.0 / e.trials;
  e.release = inv * release_sum;
  e.landing = inv * landing_sum;
  return e;
}

Dataset summarize_trials(std::span<const TrialRecord> trials) {
  std::vector<Command> order;
  std::vector<std::vector<TrialRecord>> groups;
  for (const auto& t : trials) {
    auto it = std::find(order.begin(), order.end(), t.command);
    if (it == order.end()) {
      order.push_back(t.command);
      groups.emplace_back();
      it = order.end() - 1;
    }
    groups[static_cast<std::size_t>(it - order.begin())].push_back(t);
  }
  Dataset out;
  for (const auto& g : groups) {
    const bool any_valid = std::any_of(g.begin(), g.end(), [](const auto& t) { return t.valid; });
    if (any_valid) out.push_back(summarize_command(g));
  }
  return out;
}

double normalized_error(const LandingPose& landing, const TargetSpec& target) {
  return std::hypot((landing.x - target.x) / target.eps_x,
                    (landing.theta - target.theta) / target.eps_theta);
}

std::vector<std::size_t> rank_entries(std::span<const DatasetEntry> dataset,
                                      const TargetSpec& target) {
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<double> err(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    err[i] = normalized_error(dataset[i].landing, target);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return err[a] < err[b]; });

  std::vector<std::size_t> out;
  for (std::size_t i : idx) {
    const bool repeat = std::any_of(out.begin(), out.end(), [&](std::size_t j) {
      return dataset[j].command == dataset[i].command;
    });
    if (!repeat) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> nearest_neighbors(std::span<const DatasetEntry> dataset,
                                           const TargetSpec& target, std::size_t k) {
  auto ranked = rank_entries(dataset, target);
  if (ranked.size() < k) {
    throw InsufficientData("nearest_neighbors: " + std::to_string(ranked.size()) +
                           " distinct commands, need " + std::to_string(k));
  }
  ranked.resize(k);
  return ranked;
}

bool is_degenerate(const Command& u1, const Command& u2, const Command& u3, double tol) {
  const Command a = u2 - u1;
  const Command b = u3 - u1;
  // |a x b| relative to |a||b|: zero iff the two rows are linearly dependent.
  const double cx = a.speed * b.damping - a.damping * b.speed;
  const double cy = a.damping * b.pitch - a.pitch * b.damping;
  const double cz = a.pitch * b.speed - a.speed * b.pitch;
  const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
  const double na = std::sqrt(a.pitch * a.pitch + a.speed * a.speed + a.damping * a.damping);
  const double nb = std::sqrt(b.pitch * b.pitch + b.speed * b.speed + b.damping * b.damping);
  if (na <= tol || nb <= tol) return true;
  return cross <= tol * na * nb;
}

NeighborTriple make_triple(std::span<const DatasetEntry> dataset,
                           const std::array<std::size_t, 3>& indices) {
  NeighborTriple n;
  for (std::size_t i = 0; i < 3; ++i) {
    if (indices[i] >= dataset.size()) {
      throw std::out_of_range("make_triple: index out of range");
    }
    n.entries[i] = dataset[indices[i]];
  }
  n.indices = indices;
  n.degenerate =
      is_degenerate(n.entries[0].command, n.entries[1].command, n.entries[2].command);
  return n;
}

Command delta_command(const NeighborTriple& n, ConeCoordinate a) {
  const auto& [e1, e2, e3] = n.entries;
  const double a0 = 1.0 - a.alpha1 - a.alpha2;
  return a0 * e1.command + a.alpha1 * e2.command + a.alpha2 * e3.command;
}

LandingPose predict_m1(const NeighborTriple& n, ConeCoordinate a) {
  const auto& [e1, e2, e3] = n.entries;
  const double a0 = 1.0 - a.alpha1 - a.alpha2;
  return a0 * e1.landing + a.alpha1 * e2.landing + a.alpha2 * e3.landing;
}

std::optional<LandingPose> try_predict_m2_anchored(const ReleaseState& anchor,
                                                   const NeighborTriple& n, ConeCoordinate a) {
  const auto& [e1, e2, e3] = n.entries;
  const ReleaseState s =
      anchor + a.alpha1 * (e2.release - e1.release) + a.alpha2 * (e3.release - e1.release);
  return try_landing_pose(s);
}

LandingPose predict_m2(const NeighborTriple& n, ConeCoordinate a) {
  // Barycentric form so that the vertices reproduce stored states exactly.
  const auto& [e1, e2, e3] = n.entries;
  const double a0 = 1.0 - a.alpha1 - a.alpha2;
  if (auto l = try_landing_pose(a0 * e1.release + a.alpha1 * e2.release + a.alpha2 * e3.release)) {
    return *l;
  }
  throw NoLandingSolution("predict_m2: interpolated release state cannot land");
}

std::string to_string(ModelKind m) { return m == ModelKind::M1 ? "m1" : "m2"; }

ModelKind parse_model(const std::string& s) {
  if (s == "m1" || s == "M1") return ModelKind::M1;
  if (s == "m2" || s == "M2") return ModelKind::M2;
  throw std::invalid_argument("unknown model '" + s + "' (expected m1 or m2)");
}

void MeshSpec::validate() const {
  if (!(step > 0.0) || !std::isfinite(min) || !std::isfinite(max) || !(min <= max)) {
    throw std::invalid_argument("mesh: need finite min <= max and step > 0");
  }
  if (nonneg && max < 0.0) {
    throw std::invalid_argument("mesh: nonneg mesh with max < 0 is empty");
  }
}

std::size_t MeshSpec::points_per_axis() const {
  return static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
}

double MeshSpec::value(std::size_t i) const { return min + static_cast<double>(i) * step; }

ConeProblem ConeProblem::standard(const NeighborTriple& n, ModelKind model,
                                  const CommandBounds& bounds) {
  ConeProblem p;
  p.neighbors = n;
  p.anchor_command = n.entries[0].command;
  p.anchor_release = n.entries[0].release;
  p.anchor_landing = n.entries[0].landing;
  p.model = model;
  p.bounds = bounds;
  return p;
}

std::optional<LandingPose> evaluate_candidate(const ConeProblem& p, ConeCoordinate a,
                                              Command* command_out) {
  const auto& [e1, e2, e3] = p.neighbors.entries;
  const Command u =
      p.anchor_command + a.alpha1 * (e2.command - e1.command) + a.alpha2 * (e3.command - e1.command);
  if (command_out) *command_out = u;
  if (!p.bounds.contains(u, p.bounds_tolerance)) {
    return std::nullopt;
  }
  if (p.model == ModelKind::M1) {
    return p.anchor_landing + a.alpha1 * (e2.landing - e1.landing) +
           a.alpha2 * (e3.landing - e1.landing);
  }
  return try_predict_m2_anchored(p.anchor_release, p.neighbors, a);
}

namespace {

struct Candidate {
  double error = std::numeric_limits<double>::infinity();
  double norm = std::numeric_limits<double>::infinity();
  ConeCoordinate alpha;
  Command command;
  LandingPose predicted;
  std::size_t feasible = 0;
  bool found = false;
};

// Total order on candidates; both kernels reduce with it so that the
// winner does not depend on evaluation order.
bool better(const Candidate& a, const Candidate& b) {
  if (!a.found) return false;
  if (!b.found) return true;
  if (a.error != b.error) return a.error < b.error;
  if (a.norm != b.norm) return a.norm < b.norm;
  if (a.alpha.alpha1 != b.alpha.alpha1) return a.alpha.alpha1 < b.alpha.alpha1;
  return a.alpha.alpha2 < b.alpha.alpha2;
}

void consider(const ConeProblem& p, const TargetSpec& target, ConeCoordinate a, Candidate& best) {
  Command u;
  const auto l = evaluate_candidate(p, a, &u);
  if (!l) return;
  ++best.feasible;
  Candidate c;
  c.error = normalized_error(*l, target);
  c.norm = std::hypot(a.alpha1, a.alpha2);
  c.alpha = a;
  c.command = u;
  c.predicted = *l;
  c.found = true;
  if (better(c, best)) {
    const auto feasible = best.feasible;
    best = c;
    best.feasible = feasible;
  }
}

ConeResult finish(const Candidate& best) {
  if (!best.found) {
    throw NoFeasibleCandidate("cone search: every mesh point was infeasible");
  }
  return {best.alpha, best.command, best.predicted, best.error, best.feasible};
}

}  // namespace

ConeResult cone_search_serial(const ConeProblem& p, const TargetSpec& target, const MeshSpec& mesh) {
  mesh.validate();
  const std::size_t n = mesh.points_per_axis();
  Candidate best;
  for (std::size_t i = 0; i < n; ++i) {
    const double a1 = mesh.value(i);
    if (mesh.nonneg && a1 < 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double a2 = mesh.value(j);
      if (mesh.nonneg && a2 < 0.0) continue;
      consider(p, target, {a1, a2}, best);
    }
  }
  return finish(best);
}

ConeResult cone_search_parallel(const ConeProblem& p, const TargetSpec& target,
                                const MeshSpec& mesh) {
  mesh.validate();
  const auto n = static_cast<std::ptrdiff_t>(mesh.points_per_axis());
  Candidate best;
#pragma omp parallel
  {
    Candidate local;
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t k = 0; k < n * n; ++k) {
      const double a1 = mesh.value(static_cast<std::size_t>(k / n));
      const double a2 = mesh.value(static_cast<std::size_t>(k % n));
      if (mesh.nonneg && (a1 < 0.0 || a2 < 0.0)) continue;
      consider(p, target, {a1, a2}, local);
    }
#pragma omp critical(throwflip_cone_reduce)
    {
      const auto feasible = best.feasible + local.feasible;
      if (better(local, best)) best = local;
      best.feasible = feasible;
    }
  }
  return finish(best);
}

ConeResult cone_search(const ConeProblem& p, const TargetSpec& target, const MeshSpec& mesh) {
  return cone_search_parallel(p, target, mesh);
}

}  // namespace throwflip
