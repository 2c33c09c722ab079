#pragma once

// Iterative learning with cone search: pick three neighbors, search the
// local cone for the best predicted command, execute it N times, append
// the mean outcome, repeat until every trial lands inside the thresholds.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "throwflip/models.hpp"
#include "throwflip/plant.hpp"

namespace throwflip {

struct StagnationPolicy {
  /// Iteration t stagnates when err(t) >= err(t-1) - min_improvement.
  double min_improvement = 0.05;
};

struct LearnerConfig {
  int max_iterations = 5;      // T
  int trials_per_command = 3;  // N
  ModelKind model = ModelKind::M2;
  MeshSpec mesh{};
  StagnationPolicy stagnation{};
  double bounds_tolerance = 1e-9;

  void validate() const;
};

struct IterationLog {
  int iteration = 0;  // 1-based
  std::array<std::size_t, 3> neighbors{};
  bool degenerate_neighbors = false;
  int escape_level = 0;  // 0: regular triple, k: k-th neighbor re-selection
  ConeCoordinate alpha;
  Command command;
  LandingPose predicted;
  double predicted_error = 0.0;
  std::vector<TrialRecord> trials;
  LandingPose mean_landing;
  double error = 0.0;  // normalized error of mean_landing
  int successes = 0;
  bool success_two = false;  // at least min(2, N) trials inside
  bool success_all = false;
  bool stagnated = false;
};

enum class LearnStatus { Success, Exhausted };

struct LearningResult {
  std::vector<IterationLog> iterations;
  LearnStatus status = LearnStatus::Exhausted;
  double initial_error = 0.0;  // best entry of the starting dataset
  Command best_command;
  double best_error = 0.0;
  std::optional<int> iterations_to_two;
  std::optional<int> iterations_to_all;
  Dataset dataset;  // final dataset including all appended entries

  int executed_trials() const;
  double first_error() const;
  double min_error() const;
};

/// Stream tags for derive_seed, shared so paired runs see the same noise.
enum class SeedStream : std::uint64_t { Support = 1, Learning = 2 };

/// Executes each command N times and returns the per-command means.
Dataset build_support(std::span<const Command> commands, const Plant& plant, int trials_per_command,
                      std::uint64_t master_seed, std::vector<TrialRecord>* trials_out = nullptr);

/// Default four-command simplex.
std::vector<Command> default_support_commands();

/// Neighbor triple for the given re-selection level. Level 0 uses the 1st,
/// 2nd and 3rd closest distinct commands, level k replaces the 3rd by the
/// (3+k)-th. Third candidates that are collinear with the first two are
/// passed over; if none is usable at level 0 the plain 3rd is returned with
/// the degenerate flag set. Throws InsufficientData when the dataset cannot
/// furnish the requested triple.
NeighborTriple select_triple(std::span<const DatasetEntry> dataset, const TargetSpec& target,
                             int level);

/// Re-selection after stagnation: select_triple at level >= 1.
NeighborTriple stagnation_escape(std::span<const DatasetEntry> dataset, const TargetSpec& target,
                                 int consecutive_stagnations);

/// Executes `cmd` N times for iteration `iteration` and fills the outcome
/// fields of `log`.
void execute_iteration(IterationLog& log, const Command& cmd, const TargetSpec& target,
                       const LearnerConfig& config, const Plant& plant, std::uint64_t master_seed);

/// One loop body: neighbors, cone search, N executions, dataset append.
IterationLog run_iteration(Dataset& dataset, const TargetSpec& target, const LearnerConfig& config,
                           const Plant& plant, std::uint64_t master_seed, int iteration,
                           int escape_level = 0);

/// Full loop from a support dataset.
LearningResult learn(const Dataset& support, const TargetSpec& target, const LearnerConfig& config,
                     const Plant& plant, std::uint64_t master_seed);

/// Continues a loop whose first `first_iteration - 1` iterations already
/// happened (their logs are in `result`). `previous_error` seeds the
/// stagnation test.
void continue_learning(LearningResult& result, Dataset dataset, const TargetSpec& target,
                       const LearnerConfig& config, const Plant& plant, std::uint64_t master_seed,
                       int first_iteration, double previous_error);

/// Records bookkeeping (success flags, best command) for a new log.
void record_iteration(LearningResult& result, IterationLog log);

}  // namespace throwflip
