#include "throwflip/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace throwflip {

ReleaseState shift_release_state(const ReleaseState& r, CoMShift shift) {
  const double th = r.pose.theta;
  const double w = r.twist.omega;
  const double s = std::sin(th);
  const double c = std::cos(th);
  ReleaseState out = r;
  out.pose.x += shift.dh * s;
  out.pose.z -= shift.dh * c;
  out.twist.vx += w * shift.dh * c;
  out.twist.vz += w * shift.dh * s;
  return out;
}

TransferredSupport transfer_support(std::span<const DatasetEntry> dataset, CoMShift shift) {
  TransferredSupport out;
  for (const auto& e : dataset) {
    DatasetEntry t = e;
    t.release = shift_release_state(e.release, shift);
    // The flowmap change is applied to the stored mean landing, so whatever
    // the flowmap does not explain in the source data carries over.
    const auto before = try_landing_pose(e.release);
    const auto after = try_landing_pose(t.release);
    if (!before || !after) {
      ++out.dropped;
      continue;
    }
    t.landing = e.landing + (*after - *before);
    t.provenance = Provenance::Predicted;
    out.entries.push_back(t);
  }
  return out;
}

namespace {

DatasetEntry observed_entry(const IterationLog& log) {
  return summarize_command(log.trials);
}

IterationLog anchored_step(const Dataset& predicted, const DatasetEntry& anchor, int level,
                           int iteration, const TargetSpec& target, const LearnerConfig& config,
                           const Plant& plant, std::uint64_t master_seed) {
  IterationLog log;
  log.iteration = iteration;
  const NeighborTriple triple = select_triple(predicted, target, level);
  ConeProblem problem;
  problem.neighbors = triple;
  problem.anchor_command = anchor.command;
  problem.anchor_release = anchor.release;
  problem.anchor_landing = anchor.landing;
  problem.model = ModelKind::M2;
  problem.bounds = plant.params().bounds;
  problem.bounds_tolerance = config.bounds_tolerance;
  const ConeResult found = cone_search(problem, target, config.mesh);

  log.escape_level = level;
  log.neighbors = triple.indices;
  log.degenerate_neighbors = triple.degenerate;
  log.alpha = found.alpha;
  log.predicted = found.predicted;
  log.predicted_error = found.predicted_error;
  execute_iteration(log, found.command, target, config, plant, master_seed);
  return log;
}

}  // namespace

LearningResult learn_transfer(std::span<const DatasetEntry> source_support, CoMShift shift,
                              const TargetSpec& target, const LearnerConfig& config,
                              const Plant& plant, std::uint64_t master_seed) {
  config.validate();
  target.validate();
  const TransferredSupport transferred = transfer_support(source_support, shift);
  const Dataset& predicted = transferred.entries;
  if (rank_entries(predicted, target).size() < 4) {
    throw InsufficientData("learn_transfer: transferred support needs at least 4 commands");
  }

  LearningResult result;
  const auto ranked = rank_entries(predicted, target);
  result.initial_error = normalized_error(predicted[ranked[0]].landing, target);

  Dataset observed;
  double prev = result.initial_error;
  auto finish_step = [&](IterationLog log) {
    const bool done = log.success_all;
    log.stagnated = log.error >= prev - config.stagnation.min_improvement;
    prev = log.error;
    const bool any_valid =
        std::any_of(log.trials.begin(), log.trials.end(), [](const auto& t) { return t.valid; });
    if (any_valid) observed.push_back(observed_entry(log));
    record_iteration(result, std::move(log));
    if (done) result.status = LearnStatus::Success;
    return done;
  };

  // 1st iteration: replay the closest transferred command.
  {
    IterationLog log;
    log.iteration = 1;
    log.neighbors = {ranked[0], ranked[1], ranked[2]};
    log.predicted = predicted[ranked[0]].landing;
    log.predicted_error = result.initial_error;
    execute_iteration(log, predicted[ranked[0]].command, target, config, plant, master_seed);
    if (finish_step(std::move(log)) || config.max_iterations == 1 || observed.empty()) {
      result.dataset = observed;
      return result;
    }
  }

  // 2nd and 3rd iterations: predicted deltas about the latest observation.
  for (int step = 2; step <= 3; ++step) {
    if (step > config.max_iterations) break;
    const int level = step - 2;
    IterationLog log = anchored_step(predicted, observed.back(), level, step, target, config, plant,
                                     master_seed);
    if (finish_step(std::move(log))) {
      result.dataset = observed;
      return result;
    }
    if (observed.empty()) break;
  }

  if (config.max_iterations <= 3) {
    result.dataset = observed;
    return result;
  }
  // From here on only observed data on the new object counts. If the
  // bootstrap repeated a command there may be fewer than three distinct
  // observations; the closest transferred entries then fill the gap.
  Dataset support = observed;
  for (std::size_t k = 0; rank_entries(support, target).size() < 3 && k < ranked.size(); ++k) {
    support.push_back(predicted[ranked[k]]);
  }
  continue_learning(result, support, target, config, plant, master_seed, 4, prev);
  return result;
}

}  // namespace throwflip
