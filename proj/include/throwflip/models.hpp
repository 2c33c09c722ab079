#pragma once

// Local forward models built from the three nearest dataset entries, and
// the exhaustive cone search that inverts them.
//
// Model 1 interpolates landing poses directly in the command simplex.
// Model 2 interpolates release states and pushes them through the flowmap.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "throwflip/ballistics.hpp"
#include "throwflip/plant.hpp"

namespace throwflip {

struct TargetSpec {
  double x = 0.0;          // m
  double theta = 0.0;      // rad, unwrapped
  double eps_x = 0.05;     // m
  double eps_theta = 0.25 * std::numbers::pi;  // rad

  /// Throws std::invalid_argument unless both tolerances are positive.
  void validate() const;
  /// Per-axis threshold test used for trial success.
  bool within(const LandingPose& l) const;
};

enum class Provenance { Observed, Predicted };

/// One command with its mean outcome. Release and landing are the
/// arithmetic means over the command's valid trials.
struct DatasetEntry {
  Command command;
  ReleaseState release;
  LandingPose landing;
  int trials = 0;
  Provenance provenance = Provenance::Observed;
};

using Dataset = std::vector<DatasetEntry>;

/// Groups trials by command in first-seen order and averages each group.
/// Invalid trials are ignored; groups without a valid trial are dropped.
Dataset summarize_trials(std::span<const TrialRecord> trials);

/// Mean of `trials`, which must all share one command.
DatasetEntry summarize_command(std::span<const TrialRecord> trials);

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoFeasibleCandidate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double normalized_error(const LandingPose& landing, const TargetSpec& target);

/// Indices of the k entries whose mean landing is closest to the target,
/// ascending by normalized error; ties keep insertion order. Entries that
/// repeat an earlier command are skipped, so the result names k distinct
/// commands. Throws InsufficientData otherwise.
std::vector<std::size_t> nearest_neighbors(std::span<const DatasetEntry> dataset,
                                           const TargetSpec& target, std::size_t k);

/// Full distinct-command ranking (k = all).
std::vector<std::size_t> rank_entries(std::span<const DatasetEntry> dataset,
                                      const TargetSpec& target);

struct ConeCoordinate {
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  friend bool operator==(const ConeCoordinate&, const ConeCoordinate&) = default;
};

struct NeighborTriple {
  std::array<DatasetEntry, 3> entries;
  std::array<std::size_t, 3> indices{};  // positions in the source dataset
  bool degenerate = false;
};

/// Rank of the 2x3 matrix [u2 - u1; u3 - u1] is below two.
bool is_degenerate(const Command& u1, const Command& u2, const Command& u3,
                   double tol = 1e-9);

NeighborTriple make_triple(std::span<const DatasetEntry> dataset,
                           const std::array<std::size_t, 3>& indices);

/// u1 + a1 (u2 - u1) + a2 (u3 - u1)
Command delta_command(const NeighborTriple& n, ConeCoordinate alpha);

/// Model 1: q1 + a1 (q2 - q1) + a2 (q3 - q1) on landing poses.
LandingPose predict_m1(const NeighborTriple& n, ConeCoordinate alpha);

/// Model 2: flowmap of the interpolated release state. Throws
/// NoLandingSolution when that state cannot reach the plane.
LandingPose predict_m2(const NeighborTriple& n, ConeCoordinate alpha);

/// Model 2 with the interpolation origin replaced by `anchor` while the
/// difference vectors still come from `n`. Reduces to predict_m2 when the
/// anchor equals the first neighbor's release state.
std::optional<LandingPose> try_predict_m2_anchored(const ReleaseState& anchor,
                                                   const NeighborTriple& n, ConeCoordinate alpha);

enum class ModelKind { M1, M2 };

std::string to_string(ModelKind m);
ModelKind parse_model(const std::string& s);

/// Rectangular alpha mesh; both axes share min/max/step.
struct MeshSpec {
  double min = -1.0;
  double max = 2.0;
  double step = 0.05;
  bool nonneg = false;  // drop points with a negative coordinate

  void validate() const;
  std::size_t points_per_axis() const;
  double value(std::size_t i) const;
};

/// What the cone search inverts: an anchor (command, release, landing) and
/// the neighbor triple supplying the two difference directions. For the
/// standard models the anchor is the first neighbor.
struct ConeProblem {
  NeighborTriple neighbors;
  Command anchor_command;
  ReleaseState anchor_release;
  LandingPose anchor_landing;
  ModelKind model = ModelKind::M2;
  CommandBounds bounds{};
  double bounds_tolerance = 1e-9;  // candidates further outside are skipped

  static ConeProblem standard(const NeighborTriple& n, ModelKind model,
                              const CommandBounds& bounds);
};

struct ConeResult {
  ConeCoordinate alpha;
  Command command;
  LandingPose predicted;
  double predicted_error = 0.0;
  std::size_t feasible = 0;  // mesh points that survived the filters
};

/// Prediction at a single alpha; nullopt when infeasible.
std::optional<LandingPose> evaluate_candidate(const ConeProblem& p, ConeCoordinate alpha,
                                              Command* command_out = nullptr);

/// Exhaustive mesh evaluation. Minimizes predicted normalized error; ties go
/// to the smaller |alpha|, then to the lexicographically smaller alpha.
/// Throws NoFeasibleCandidate when every point is skipped.
ConeResult cone_search_serial(const ConeProblem& p, const TargetSpec& target, const MeshSpec& mesh);
ConeResult cone_search_parallel(const ConeProblem& p, const TargetSpec& target,
                                const MeshSpec& mesh);

/// Dispatches to the parallel kernel.
ConeResult cone_search(const ConeProblem& p, const TargetSpec& target, const MeshSpec& mesh);

}  // namespace throwflip
