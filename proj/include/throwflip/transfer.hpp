#pragma once

// Reuse of a dataset gathered with one CoM offset for an object whose CoM
// sits dh further along the bar. The contact-point twist is assumed to be
// unchanged, so each release state can be re-expressed at the new CoM and
// flown again.

#include <cstdint>

#include "throwflip/learner.hpp"
#include "throwflip/models.hpp"

namespace throwflip {

struct CoMShift {
  double dh = 0.0;  // m, signed, along the bar away from the grasp point
};

/// q + dh (sin th, -cos th, 0),  v + w dh (cos th, sin th, 0).
ReleaseState shift_release_state(const ReleaseState& release, CoMShift shift);

struct TransferredSupport {
  Dataset entries;  // provenance Predicted
  std::size_t dropped = 0;  // entries whose shifted state could not land
};

/// Each entry keeps its command; its release state is shifted and its landing
/// moved by g(shifted release) - g(release).
TransferredSupport transfer_support(std::span<const DatasetEntry> dataset, CoMShift shift);

/// Staged bootstrap on the shifted plant followed by regular learning:
///   1. execute the closest transferred command;
///   2. cone search over the 3 closest transferred entries, anchored at the
///      observed outcome of step 1;
///   3. the same with the 1st, 2nd and 4th closest, anchored at step 2;
///   4. regular learning on a support set made of the three observations.
/// `plant` is the shifted plant; the learner only knows `shift`.
LearningResult learn_transfer(std::span<const DatasetEntry> source_support, CoMShift shift,
                              const TargetSpec& target, const LearnerConfig& config,
                              const Plant& plant, std::uint64_t master_seed);

}  // namespace throwflip
