#pragma once

#include <vector>

#include "mosal/dataset_io.hpp"
#include "mosal/tracking.hpp"

namespace mosal {

struct LabelingConfig {
  enum class TrajectoryMode { PathLength, Displacement };
  // Path length over filtered centers by default; net first-to-last
  // displacement as the alternative.
  TrajectoryMode mode = TrajectoryMode::PathLength;

  bool operator==(const LabelingConfig&) const = default;
};

struct TrackVerdict {
  int track_id = -1;
  bool moving = false;
  double trajectory_length = 0.0;
  double max_side = 0.0;
};

/// Accumulated trajectory over the filtered (posterior) world-frame centers.
double trajectory_length(const Track& track,
                         LabelingConfig::TrajectoryMode mode =
                             LabelingConfig::TrajectoryMode::PathLength);

/// Moving iff the accumulated trajectory exceeds the largest box side seen
/// anywhere in the track's history.
TrackVerdict classify_track(const Track& track, const LabelingConfig& cfg);

/// A point is Moving iff it falls inside (1e-6 m inflation) any sensor-frame
/// box of a Moving-verdict track observed at this scan.
LabelSet paint_labels(const Scan& scan,
                      const std::vector<TrackVerdict>& verdicts,
                      const std::vector<std::pair<int, BoundingBox>>& boxes);

inline constexpr double kPaintInflation = 1e-6;

}  // namespace mosal
