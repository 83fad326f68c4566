#pragma once

#include <filesystem>
#include <string>

#include "mosal/clustering.hpp"
#include "mosal/dynamic_removal.hpp"
#include "mosal/labeling.hpp"
#include "mosal/tracking.hpp"

namespace mosal {

/// Every tunable of the five-stage pipeline, with the published defaults.
struct PipelineConfig {
  RemovalConfig removal;
  ClusteringConfig clustering;
  TrackingConfig tracking;
  LabelingConfig labeling;
  unsigned threads = 0;          // 0 = hardware concurrency
  double cleanmap_voxel = 0.1;   // output thinning for clean-map [m]

  bool operator==(const PipelineConfig&) const = default;

  void validate() const;
};

/// `key = value` lines, `#` comments. Unknown keys are an error, never a
/// silent ignore.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

/// One `key value` override, e.g. from a CLI flag: "tracking.t_d=3".
void apply_config_override(PipelineConfig& cfg, const std::string& assignment);

/// parse_config(serialize_config(c)) == c, bit-exact.
std::string serialize_config(const PipelineConfig& cfg);

/// Environment overrides: key `a.b_c` maps to MOSAL_CFG_A__B_C.
void apply_env_overrides(PipelineConfig& cfg);

inline constexpr const char* kEnvPrefix = "MOSAL_CFG_";

}  // namespace mosal
