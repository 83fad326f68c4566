#include "mosal/labeling.hpp"

#include <algorithm>
#include <unordered_set>

namespace mosal {

double trajectory_length(const Track& track,
                         LabelingConfig::TrajectoryMode mode) {
  if (track.history.empty()) {
    throw ValidationError("track has no history");
  }
  if (mode == LabelingConfig::TrajectoryMode::Displacement) {
    return (track.history.back().center - track.history.front().center).norm();
  }
  double acc = 0.0;
  for (std::size_t i = 1; i < track.history.size(); ++i) {
    acc += (track.history[i].center - track.history[i - 1].center).norm();
  }
  return acc;
}

TrackVerdict classify_track(const Track& track, const LabelingConfig& cfg) {
  TrackVerdict verdict;
  verdict.track_id = track.id;
  verdict.trajectory_length = trajectory_length(track, cfg.mode);
  double max_side = 0.0;
  for (const auto& obs : track.history) {
    max_side = std::max(max_side, obs.world_box.max_side());
  }
  verdict.max_side = max_side;
  verdict.moving = verdict.trajectory_length > verdict.max_side;
  return verdict;
}

LabelSet paint_labels(const Scan& scan,
                      const std::vector<TrackVerdict>& verdicts,
                      const std::vector<std::pair<int, BoundingBox>>& boxes) {
  std::unordered_set<int> moving_ids;
  for (const auto& v : verdicts) {
    if (v.moving) moving_ids.insert(v.track_id);
  }
  std::vector<const BoundingBox*> moving_boxes;
  for (const auto& [track_id, box] : boxes) {
    if (moving_ids.count(track_id)) moving_boxes.push_back(&box);
  }

  LabelSet out;
  out.labels.assign(scan.points.size(), Label::Static);
  if (moving_boxes.empty()) return out;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const Eigen::Vector3d p = scan.points[i].vec();
    for (const BoundingBox* box : moving_boxes) {
      if (box->contains(p, kPaintInflation)) {
        out.labels[i] = Label::Moving;
        break;
      }
    }
  }
  return out;
}

}  // namespace mosal
