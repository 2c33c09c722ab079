#pragma once

// Reproducible simulation campaigns (sweep, learn, compare, transfer).
// Every campaign is a pure function of its spec: outputs are rendered into
// strings first and only then written, so reruns are byte-identical.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "throwflip/learner.hpp"
#include "throwflip/plant.hpp"
#include "throwflip/transfer.hpp"

namespace throwflip {

inline constexpr const char* kToolVersion = "throwflip 0.3.0";

enum class CampaignKind { Sweep, Learn, Compare, Transfer };

std::string to_string(CampaignKind k);
CampaignKind parse_campaign_kind(const std::string& s);

struct CampaignSpec {
  CampaignKind kind = CampaignKind::Learn;
  PlantParams plant{};
  std::string plant_path;  // informational; empty when defaults are used
  double noise_scale = 1.0;
  std::vector<TargetSpec> targets;
  std::vector<ModelKind> models{ModelKind::M2};
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out_dir = "out";
  LearnerConfig learner{};
  std::vector<Command> support = default_support_commands();
  SweepAxes sweep{};
  int sweep_reps = 5;
  double dh = 0.06;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// The four targets (1.2 m, 180 deg), (1.2, 360), (1.4, 180), (1.4, 360)
/// with tolerance (0.05 m, 45 deg).
std::vector<TargetSpec> default_targets();

/// Reads a CampaignSpec JSON document. Unknown keys are rejected. Angles
/// are given in degrees (`theta_deg`, `eps_theta_deg`).
CampaignSpec parse_campaign_spec(const std::string& json_text,
                                 const std::filesystem::path& base_dir = {});
CampaignSpec load_campaign_spec(const std::filesystem::path& path);

/// Rendered outputs of one campaign.
struct CampaignOutput {
  std::string name;           // file stem, e.g. "compare"
  std::string trials_csv;     // one row per executed trial
  std::string summary_json;   // aggregates
  std::string table;          // human-readable summary for stdout
  std::vector<std::pair<std::string, std::string>> extra_files;  // (filename, content)
  std::size_t trial_rows = 0;
  std::size_t failed_runs = 0;
  std::size_t total_runs = 0;
};

/// Campaign-level failure, e.g. every learning path errored.
class CampaignFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

CampaignOutput run_sweep(const CampaignSpec& spec);
CampaignOutput run_learn(const CampaignSpec& spec);
CampaignOutput run_compare(const CampaignSpec& spec);
CampaignOutput run_transfer(const CampaignSpec& spec);
CampaignOutput run_campaign(const CampaignSpec& spec);

/// Writes <out>/<name>.csv, <out>/<name>_summary.json and the extra files.
void write_outputs(const CampaignOutput& out, const std::filesystem::path& dir);

/// Iterations-to-threshold with failures counted as max_iterations + 1.
double iterations_or_penalty(const std::optional<int>& it, int max_iterations);

/// Shortest round-trip decimal form, '.' separator.
std::string format_double(double v);

}  // namespace throwflip
