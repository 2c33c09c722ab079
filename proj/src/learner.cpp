#include "throwflip/learner.hpp"

#include <algorithm>
#include <limits>

namespace throwflip {

void LearnerConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (trials_per_command < 1) throw std::invalid_argument("trials_per_command must be >= 1");
  mesh.validate();
}

int LearningResult::executed_trials() const {
  int n = 0;
  for (const auto& it : iterations) n += static_cast<int>(it.trials.size());
  return n;
}

double LearningResult::first_error() const {
  return iterations.empty() ? std::numeric_limits<double>::quiet_NaN() : iterations.front().error;
}

double LearningResult::min_error() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& it : iterations) m = std::min(m, it.error);
  return m;
}

std::vector<Command> default_support_commands() {
  return {{-0.25, 0.9, 0.0}, {0.25, 0.9, 0.0}, {0.0, 1.25, 0.0}, {0.0, 0.95, 0.6}};
}

Dataset build_support(std::span<const Command> commands, const Plant& plant, int trials_per_command,
                      std::uint64_t master_seed, std::vector<TrialRecord>* trials_out) {
  if (trials_per_command < 1) throw std::invalid_argument("build_support: N must be >= 1");
  Dataset out;
  std::int64_t id = 0;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    std::vector<TrialRecord> trials;
    for (int j = 0; j < trials_per_command; ++j) {
      const auto seed = derive_seed(master_seed, static_cast<std::uint64_t>(SeedStream::Support), k,
                                    static_cast<std::uint64_t>(j));
      trials.push_back(plant.throw_once(commands[k], seed, id++));
    }
    if (trials_out) trials_out->insert(trials_out->end(), trials.begin(), trials.end());
    const bool any_valid = std::any_of(trials.begin(), trials.end(), [](const auto& t) { return t.valid; });
    if (any_valid) out.push_back(summarize_command(trials));
  }
  return out;
}

NeighborTriple select_triple(std::span<const DatasetEntry> dataset, const TargetSpec& target,
                             int level) {
  const auto ranked = rank_entries(dataset, target);
  if (ranked.size() < 3) {
    throw InsufficientData("need at least 3 distinct commands, have " +
                           std::to_string(ranked.size()));
  }
  const auto& u1 = dataset[ranked[0]].command;
  const auto& u2 = dataset[ranked[1]].command;
  std::vector<std::size_t> usable;
  for (std::size_t k = 2; k < ranked.size(); ++k) {
    if (!is_degenerate(u1, u2, dataset[ranked[k]].command)) usable.push_back(ranked[k]);
  }
  const auto want = static_cast<std::size_t>(std::max(level, 0));
  if (want < usable.size()) {
    return make_triple(dataset, {ranked[0], ranked[1], usable[want]});
  }
  if (level == 0) {
    return make_triple(dataset, {ranked[0], ranked[1], ranked[2]});
  }
  throw InsufficientData("no fresh neighbor for re-selection level " + std::to_string(level));
}

NeighborTriple stagnation_escape(std::span<const DatasetEntry> dataset, const TargetSpec& target,
                                 int consecutive_stagnations) {
  return select_triple(dataset, target, std::max(consecutive_stagnations, 1));
}

void execute_iteration(IterationLog& log, const Command& cmd, const TargetSpec& target,
                       const LearnerConfig& config, const Plant& plant, std::uint64_t master_seed) {
  log.command = cmd;
  log.trials.clear();
  for (int j = 0; j < config.trials_per_command; ++j) {
    const auto seed = derive_seed(master_seed, static_cast<std::uint64_t>(SeedStream::Learning),
                                  static_cast<std::uint64_t>(log.iteration),
                                  static_cast<std::uint64_t>(j));
    log.trials.push_back(
        plant.throw_once(cmd, seed, static_cast<std::int64_t>(log.iteration) * 1000 + j));
  }
  LandingPose sum{};
  int valid = 0;
  log.successes = 0;
  for (const auto& t : log.trials) {
    if (!t.valid) continue;
    sum = sum + t.landing;
    ++valid;
    if (target.within(t.landing)) ++log.successes;
  }
  log.mean_landing = valid > 0 ? (1.0 / valid) * sum
                               : LandingPose{std::numeric_limits<double>::quiet_NaN(),
                                             std::numeric_limits<double>::quiet_NaN()};
  log.error = valid > 0 ? normalized_error(log.mean_landing, target)
                        : std::numeric_limits<double>::infinity();
  const int n = config.trials_per_command;
  log.success_two = log.successes >= std::min(2, n);
  log.success_all = log.successes == n;
}

namespace {

// Tries re-selection levels upward from `level` until the cone search finds
// a feasible candidate. Level 0 failures fall through to level 1 and on.
std::pair<NeighborTriple, ConeResult> search_with_escape(const Dataset& dataset,
                                                         const TargetSpec& target,
                                                         const LearnerConfig& config,
                                                         const CommandBounds& bounds, int& level) {
  for (;;) {
    NeighborTriple triple;
    try {
      triple = select_triple(dataset, target, level);
    } catch (const InsufficientData&) {
      if (level == 0) throw;
      // Re-selection exhausted: fall back to the regular triple once.
      level = 0;
      triple = select_triple(dataset, target, 0);
      auto problem = ConeProblem::standard(triple, config.model, bounds);
      problem.bounds_tolerance = config.bounds_tolerance;
      return {triple, cone_search(problem, target, config.mesh)};
    }
    auto problem = ConeProblem::standard(triple, config.model, bounds);
    problem.bounds_tolerance = config.bounds_tolerance;
    try {
      return {triple, cone_search(problem, target, config.mesh)};
    } catch (const NoFeasibleCandidate&) {
      ++level;
      try {
        (void)select_triple(dataset, target, level);
      } catch (const InsufficientData&) {
        throw NoFeasibleCandidate("cone search infeasible for every neighbor re-selection");
      }
    }
  }
}

}  // namespace

IterationLog run_iteration(Dataset& dataset, const TargetSpec& target, const LearnerConfig& config,
                           const Plant& plant, std::uint64_t master_seed, int iteration,
                           int escape_level) {
  IterationLog log;
  log.iteration = iteration;
  int level = escape_level;
  const auto [triple, found] =
      search_with_escape(dataset, target, config, plant.params().bounds, level);
  log.escape_level = level;
  log.neighbors = triple.indices;
  log.degenerate_neighbors = triple.degenerate;
  log.alpha = found.alpha;
  log.predicted = found.predicted;
  log.predicted_error = found.predicted_error;
  execute_iteration(log, found.command, target, config, plant, master_seed);

  const bool any_valid =
      std::any_of(log.trials.begin(), log.trials.end(), [](const auto& t) { return t.valid; });
  if (any_valid) {
    dataset.push_back(summarize_command(log.trials));
  }
  return log;
}

void record_iteration(LearningResult& result, IterationLog log) {
  if (log.success_two && !result.iterations_to_two) result.iterations_to_two = log.iteration;
  if (log.success_all && !result.iterations_to_all) result.iterations_to_all = log.iteration;
  if (result.iterations.empty() || log.error < result.best_error) {
    result.best_error = log.error;
    result.best_command = log.command;
  }
  result.iterations.push_back(std::move(log));
}

void continue_learning(LearningResult& result, Dataset dataset, const TargetSpec& target,
                       const LearnerConfig& config, const Plant& plant, std::uint64_t master_seed,
                       int first_iteration, double previous_error) {
  int level = 0;
  double prev = previous_error;
  for (int t = first_iteration; t <= config.max_iterations; ++t) {
    IterationLog log = run_iteration(dataset, target, config, plant, master_seed, t, level);
    const bool done = log.success_all;
    log.stagnated = log.error >= prev - config.stagnation.min_improvement;
    level = log.stagnated ? log.escape_level + 1 : 0;
    prev = log.error;
    record_iteration(result, std::move(log));
    if (done) {
      result.status = LearnStatus::Success;
      break;
    }
  }
  result.dataset = std::move(dataset);
}

LearningResult learn(const Dataset& support, const TargetSpec& target, const LearnerConfig& config,
                     const Plant& plant, std::uint64_t master_seed) {
  config.validate();
  target.validate();
  if (rank_entries(support, target).size() < 3) {
    throw InsufficientData("learn: support needs at least 3 distinct commands");
  }
  LearningResult result;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : support) best = std::min(best, normalized_error(e.landing, target));
  result.initial_error = best;
  continue_learning(result, support, target, config, plant, master_seed, 1, best);
  return result;
}

}  // namespace throwflip
