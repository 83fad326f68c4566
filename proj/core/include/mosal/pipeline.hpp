#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mosal/config.hpp"
#include "mosal/evaluation.hpp"
#include "mosal/labeling.hpp"

namespace mosal {

struct StageTimings {
  double aggregate_s = 0.0;
  double proposals_s = 0.0;
  double clustering_s = 0.0;
  double tracking_s = 0.0;
  double painting_s = 0.0;
};

struct PipelineOptions {
  // When set, proposals and instances are cached under this directory and
  // reused on a rerun, so later stages can be iterated independently.
  std::filesystem::path cache_dir;
};

struct PipelineResult {
  std::vector<LabelSet> labels;                 // one per scan
  std::vector<Track> tracks;                    // all finalized tracks
  std::vector<TrackVerdict> verdicts;           // one per track
  std::vector<std::vector<std::pair<int, BoundingBox>>> scan_boxes;
  std::size_t proposal_points = 0;
  std::size_t instance_count = 0;
  StageTimings timings;

  std::size_t moving_track_count() const;
  std::string summary() const;
};

/// Runs proposals -> clustering -> tracking -> verdicts -> painting over an
/// in-memory sequence. Scans stay in the sensor frame; poses map each scan
/// into the shared world frame.
PipelineResult run_pipeline(std::span<const Scan> scans,
                            const PoseSequence& poses,
                            const PipelineConfig& cfg,
                            const PipelineOptions& options = {});

/// Aggregates Static-labeled points into a voxel-thinned map written as
/// ASCII `x y z` lines.
void clean_map(std::span<const Scan> scans, const PoseSequence& poses,
               std::span<const LabelSet> labels, double voxel,
               const std::filesystem::path& out_path);

}  // namespace mosal
