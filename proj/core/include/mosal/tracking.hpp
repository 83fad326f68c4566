#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "mosal/clustering.hpp"
#include "mosal/geometry.hpp"

namespace mosal {

struct TrackingConfig {
  double dt = 0.1;  // seconds per scan
  double alpha_d = 1.0;
  double alpha_o = 1.0;
  double alpha_v = 1.0;
  double t_d = 2.0;   // center distance gate [m]
  double t_o = 0.95;  // 1 - IoU gate
  double t_v = 0.7;   // volume change gate
  int n_old = 5;      // coasting horizon [scans]
  double q_pos = 0.01;
  double q_vel = 0.25;
  double q_ext = 0.01;  // also yaw
  double r_pos = 0.04;
  double r_ext = 0.04;
  double r_yaw = 0.01;
  double init_vel_var = 25.0;

  bool operator==(const TrackingConfig&) const = default;
};

// State layout: [cx cy cz vx vy vz l w h yaw], world frame.
using StateVec = Eigen::Matrix<double, 10, 1>;
using StateCov = Eigen::Matrix<double, 10, 10>;

struct TrackState {
  StateVec mean = StateVec::Zero();
  StateCov cov = StateCov::Zero();

  Eigen::Vector3d center() const { return mean.head<3>(); }
  Eigen::Vector3d velocity() const { return mean.segment<3>(3); }
  double speed() const { return velocity().norm(); }
  BoundingBox box() const;
};

enum class TrackStatus : std::uint8_t { Active, Deactivated };

struct TrackObservation {
  int scan_index = 0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // posterior mean
  BoundingBox world_box;
  BoundingBox sensor_box;
  std::uint32_t instance_index = 0;
};

struct Track {
  int id = -1;
  TrackState state;
  TrackStatus status = TrackStatus::Active;
  int frames_since_seen = 0;
  std::vector<TrackObservation> history;
};

/// Re-expresses a sensor-frame box in the world frame through the scan pose.
BoundingBox ego_compensate(const BoundingBox& sensor_box, const Transform& pose);

/// Constant-velocity prediction: center moves by velocity*dt, covariance is
/// pushed through the linear model and inflated by the process noise.
TrackState predict(const TrackState& state, double dt,
                   const TrackingConfig& cfg);

/// Measurement update with (center, extents, yaw) of a world-frame box. The
/// measured yaw is wrapped to the pi/2 branch nearest the predicted yaw
/// (swapping l/w on odd branches) before the update. The gain uses a
/// rank-revealing pseudo-inverse so zero-noise configurations stay exact.
TrackState kalman_update(const TrackState& predicted, const BoundingBox& meas,
                         const TrackingConfig& cfg);

TrackState init_track_state(const BoundingBox& meas, const TrackingConfig& cfg);

struct CostComponents {
  double c_d = 0.0;  // Euclidean center distance
  double c_o = 0.0;  // 1 - IoU
  double c_v = 0.0;  // 1 - min(vol)/max(vol)
};

CostComponents cost_components(const BoundingBox& instance_box,
                               const BoundingBox& predicted_box);

/// Flag_add: any component beyond its threshold rejects the association.
bool gate_rejects(const CostComponents& c, const TrackingConfig& cfg);

struct CostMatrix {
  Eigen::MatrixXd cost;  // rows: new instances, cols: tracked instances
  std::vector<CostComponents> components;  // row-major

  const CostComponents& at(Eigen::Index i, Eigen::Index j) const {
    return components[static_cast<std::size_t>(i * cost.cols() + j)];
  }
};

CostMatrix build_cost_matrix(std::span<const BoundingBox> instances,
                             std::span<const BoundingBox> predicted,
                             const TrackingConfig& cfg);

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col)
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
};

/// Minimum-cost one-to-one assignment over a rectangular matrix. The matrix
/// is padded square with a sentinel of 10 * (max entry + 1); sentinel matches
/// come back unmatched.
Assignment hungarian_assign(const Eigen::MatrixXd& cost);

/// Sequential multi-object tracker over ego-compensated instances.
class Tracker {
 public:
  explicit Tracker(const TrackingConfig& cfg) : cfg_(cfg) {}

  /// Consumes one scan's instances (sensor frame). Returns the track id
  /// assigned to each instance.
  std::vector<int> step(int scan_index, const std::vector<Instance>& instances,
                        const Transform& pose);

  /// Retires every remaining track; afterwards all() holds the full set.
  void finish();

  const std::vector<Track>& live() const { return live_; }
  const std::vector<Track>& finalized() const { return finalized_; }

  /// Finalized tracks followed by live ones (valid after finish()).
  std::vector<const Track*> all() const;

 private:
  TrackingConfig cfg_;
  std::vector<Track> live_;
  std::vector<Track> finalized_;
  int next_id_ = 0;

  Track make_track(int scan_index, const Instance& instance,
                   const BoundingBox& world_box, std::uint32_t instance_index);
};

}  // namespace mosal
