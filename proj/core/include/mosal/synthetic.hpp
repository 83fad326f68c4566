#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mosal/dataset_io.hpp"
#include "mosal/geometry.hpp"

namespace mosal {

/// One simulated rigid box, static (speed 0, single waypoint) or moving
/// along a waypoint polyline at constant speed. Waypoints are box-center
/// positions; a box that reaches the end of its polyline parks there.
struct BoxSpec {
  Eigen::Vector3d extents = {4.0, 1.8, 1.5};  // l, w, h
  double density = 50.0;                      // surface samples per m^2
  double speed = 0.0;                         // m/s along the polyline
  double yaw = 0.0;                           // heading when not moving
  std::vector<Eigen::Vector3d> waypoints;     // center positions
  int hidden_from = -1;  // inclusive scan range with no returns (occlusion)
  int hidden_to = -2;

  bool hidden_at(int scan) const {
    return scan >= hidden_from && scan <= hidden_to;
  }
};

struct GroundSpec {
  Eigen::Vector2d min = {-80.0, -80.0};
  Eigen::Vector2d max = {80.0, 80.0};
  double density = 1.5;   // samples per m^2
  double sigma_z = 0.0;   // static surface roughness (fixed per position)
};

struct SensorSpec {
  double max_range = 70.0;
  double sigma_z = 0.0;        // per-return noise in the sensor frame
  bool occlusion = false;      // nearest-return-per-angular-bin filter
  double az_res_deg = 0.4;
  double elev_res_deg = 1.0;
};

struct PoseNoiseSpec {
  double sigma_t = 0.0;        // per-axis translation noise [m]
  double sigma_yaw_deg = 0.0;  // yaw noise [deg]
};

struct EgoSpec {
  std::vector<Eigen::Vector3d> waypoints = {{0.0, 0.0, 1.8}};
  double speed = 0.0;
  double yaw = 0.0;  // heading when stationary
};

struct SceneSpec {
  std::uint64_t seed = 1;
  int n_scans = 100;
  double dt = 0.1;
  GroundSpec ground;
  SensorSpec sensor;
  PoseNoiseSpec pose_noise;
  EgoSpec ego;
  std::vector<BoxSpec> static_boxes;
  std::vector<BoxSpec> moving_boxes;

  void validate() const;
};

/// Provenance ids: ground is -1, static box i is i, moving box j is
/// static_boxes.size() + j.
struct SyntheticSequence {
  std::vector<Scan> scans;          // sensor frame
  PoseSequence true_poses;          // exact ego poses
  PoseSequence reported_poses;      // true poses + configured pose noise
  std::vector<LabelSet> truth;
  std::vector<std::vector<int>> provenance;
};

/// Box center pose along its polyline at elapsed time tau; parked boxes
/// report zero instantaneous speed.
struct BoxPose {
  Eigen::Vector3d center;
  double yaw = 0.0;
  double speed = 0.0;
};
BoxPose box_pose_at(const BoxSpec& box, double tau);

Transform ego_pose_at(const EgoSpec& ego, double tau);

/// Moving-truth threshold on instantaneous speed [m/s].
inline constexpr double kMovingSpeedThreshold = 0.05;

SyntheticSequence generate_sequence(const SceneSpec& spec, int n_scans,
                                    double dt);
SyntheticSequence generate_sequence(const SceneSpec& spec);

/// Writes scans/, labels/ (ground truth) and poses.txt (reported poses)
/// under out_dir in the dataset_io formats.
void write_sequence(const SyntheticSequence& seq,
                    const std::filesystem::path& out_dir);

SceneSpec parse_scene(const std::string& text);
SceneSpec load_scene(const std::filesystem::path& path);

}  // namespace mosal
