#include "mosal/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mosal {

namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;
constexpr double kMinExtent = 0.01;

using MeasVec = Eigen::Matrix<double, 7, 1>;
using MeasCov = Eigen::Matrix<double, 7, 7>;
using MeasJac = Eigen::Matrix<double, 7, 10>;

MeasJac measurement_matrix() {
  MeasJac h = MeasJac::Zero();
  h(0, 0) = h(1, 1) = h(2, 2) = 1.0;  // center
  h(3, 6) = h(4, 7) = h(5, 8) = 1.0;  // extents
  h(6, 9) = 1.0;                      // yaw
  return h;
}

MeasCov measurement_noise(const TrackingConfig& cfg) {
  MeasVec d;
  d << cfg.r_pos, cfg.r_pos, cfg.r_pos, cfg.r_ext, cfg.r_ext, cfg.r_ext,
      cfg.r_yaw;
  return d.asDiagonal();
}

void clamp_extents(StateVec& x) {
  for (int i = 6; i <= 8; ++i) x(i) = std::max(x(i), kMinExtent);
}

}  // namespace

BoundingBox TrackState::box() const {
  BoundingBox b;
  b.center = center();
  b.length = std::max(mean(6), kMinExtent);
  b.width = std::max(mean(7), kMinExtent);
  b.height = std::max(mean(8), kMinExtent);
  b.yaw = mean(9);
  b.confidence = 1.0;
  return b;
}

BoundingBox ego_compensate(const BoundingBox& sensor_box,
                           const Transform& pose) {
  BoundingBox out = sensor_box;
  out.center = pose.apply(sensor_box.center);
  out.yaw = sensor_box.yaw + pose.yaw();
  out.canonicalize();
  return out;
}

TrackState predict(const TrackState& state, double dt,
                   const TrackingConfig& cfg) {
  if (dt <= 0.0) throw ValidationError("predict needs dt > 0");
  StateCov f = StateCov::Identity();
  f(0, 3) = f(1, 4) = f(2, 5) = dt;
  StateVec q_diag;
  q_diag << cfg.q_pos, cfg.q_pos, cfg.q_pos, cfg.q_vel, cfg.q_vel, cfg.q_vel,
      cfg.q_ext, cfg.q_ext, cfg.q_ext, cfg.q_ext;
  TrackState out;
  out.mean = f * state.mean;
  out.cov = f * state.cov * f.transpose();
  out.cov += StateCov(q_diag.asDiagonal());
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

TrackState kalman_update(const TrackState& predicted, const BoundingBox& meas,
                         const TrackingConfig& cfg) {
  // Fold the rectangle symmetry: pick the yaw branch nearest the prediction.
  const double yaw_pred = predicted.mean(9);
  const long k = std::lround((yaw_pred - meas.yaw) / kHalfPi);
  const double yaw_meas = meas.yaw + static_cast<double>(k) * kHalfPi;
  double l = meas.length;
  double w = meas.width;
  if (k % 2 != 0) std::swap(l, w);

  MeasVec z;
  z << meas.center.x(), meas.center.y(), meas.center.z(), l, w, meas.height,
      yaw_meas;

  static const MeasJac h = measurement_matrix();
  const MeasCov r = measurement_noise(cfg);
  const MeasVec innovation = z - h * predicted.mean;
  const MeasCov s = h * predicted.cov * h.transpose() + r;
  // Rank-revealing pseudo-inverse keeps the zero-noise limit exact instead
  // of blowing up on a singular innovation covariance.
  const MeasCov s_pinv =
      s.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::Matrix<double, 10, 7> gain =
      predicted.cov * h.transpose() * s_pinv;

  TrackState out;
  out.mean = predicted.mean + gain * innovation;
  clamp_extents(out.mean);
  const StateCov ikh = StateCov::Identity() - gain * h;
  out.cov = ikh * predicted.cov * ikh.transpose() +
            gain * r * gain.transpose();  // Joseph form
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

TrackState init_track_state(const BoundingBox& meas,
                            const TrackingConfig& cfg) {
  TrackState s;
  s.mean << meas.center.x(), meas.center.y(), meas.center.z(), 0.0, 0.0, 0.0,
      meas.length, meas.width, meas.height, meas.yaw;
  clamp_extents(s.mean);
  StateVec d;
  d << cfg.r_pos, cfg.r_pos, cfg.r_pos, cfg.init_vel_var, cfg.init_vel_var,
      cfg.init_vel_var, cfg.r_ext, cfg.r_ext, cfg.r_ext, cfg.r_yaw;
  s.cov = d.asDiagonal();
  return s;
}

CostComponents cost_components(const BoundingBox& instance_box,
                               const BoundingBox& predicted_box) {
  CostComponents c;
  c.c_d = (instance_box.center - predicted_box.center).norm();
  c.c_o = 1.0 - box_iou(instance_box, predicted_box);
  const double va = instance_box.volume();
  const double vb = predicted_box.volume();
  const double vmax = std::max(va, vb);
  c.c_v = vmax > 0.0 ? 1.0 - std::min(va, vb) / vmax : 0.0;
  return c;
}

bool gate_rejects(const CostComponents& c, const TrackingConfig& cfg) {
  return c.c_d > cfg.t_d || c.c_o > cfg.t_o || c.c_v > cfg.t_v;
}

CostMatrix build_cost_matrix(std::span<const BoundingBox> instances,
                             std::span<const BoundingBox> predicted,
                             const TrackingConfig& cfg) {
  if (cfg.alpha_d < 0.0 || cfg.alpha_o < 0.0 || cfg.alpha_v < 0.0) {
    throw ValidationError("cost weights must be non-negative");
  }
  CostMatrix m;
  const Eigen::Index rows = static_cast<Eigen::Index>(instances.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(predicted.size());
  m.cost.resize(rows, cols);
  m.components.resize(static_cast<std::size_t>(rows * cols));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const CostComponents c = cost_components(instances[i], predicted[j]);
      m.components[static_cast<std::size_t>(i * cols + j)] = c;
      m.cost(i, j) = cfg.alpha_d * c.c_d + cfg.alpha_o * c.c_o +
                     cfg.alpha_v * c.c_v;
    }
  }
  return m;
}

Assignment hungarian_assign(const Eigen::MatrixXd& cost) {
  Assignment out;
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) {
    for (int i = 0; i < rows; ++i) out.unmatched_rows.push_back(i);
    for (int j = 0; j < cols; ++j) out.unmatched_cols.push_back(j);
    return out;
  }
  if (!cost.allFinite()) {
    throw ValidationError("cost matrix entries must be finite");
  }

  const int n = std::max(rows, cols);
  const double sentinel = 10.0 * (cost.maxCoeff() + 1.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, sentinel);
  a.topLeftCorner(rows, cols) = cost;

  // Shortest augmenting path with potentials, O(n^3), exact.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // col -> row
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] +=
              delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<char> row_matched(static_cast<std::size_t>(rows), 0);
  std::vector<char> col_matched(static_cast<std::size_t>(cols), 0);
  for (int j = 1; j <= n; ++j) {
    const int i = match[static_cast<std::size_t>(j)];
    const int row = i - 1;
    const int col = j - 1;
    if (row >= rows || col >= cols) continue;           // padding
    if (a(row, col) >= sentinel) continue;              // sentinel match
    out.pairs.emplace_back(row, col);
    row_matched[static_cast<std::size_t>(row)] = 1;
    col_matched[static_cast<std::size_t>(col)] = 1;
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (int i = 0; i < rows; ++i) {
    if (!row_matched[static_cast<std::size_t>(i)]) out.unmatched_rows.push_back(i);
  }
  for (int j = 0; j < cols; ++j) {
    if (!col_matched[static_cast<std::size_t>(j)]) out.unmatched_cols.push_back(j);
  }
  return out;
}

Track Tracker::make_track(int scan_index, const Instance& instance,
                          const BoundingBox& world_box,
                          std::uint32_t instance_index) {
  Track t;
  t.id = next_id_++;
  t.state = init_track_state(world_box, cfg_);
  t.status = TrackStatus::Active;
  t.frames_since_seen = 0;
  t.history.push_back({scan_index, t.state.center(), world_box, instance.box,
                       instance_index});
  return t;
}

std::vector<int> Tracker::step(int scan_index,
                               const std::vector<Instance>& instances,
                               const Transform& pose) {
  // Motion model runs for every retained track, matched or not, so a
  // reappearing object can still meet its coasted prediction.
  for (auto& track : live_) {
    track.state = predict(track.state, cfg_.dt, cfg_);
  }

  std::vector<BoundingBox> world_boxes;
  world_boxes.reserve(instances.size());
  for (const auto& inst : instances) {
    world_boxes.push_back(ego_compensate(inst.box, pose));
  }
  std::vector<BoundingBox> predicted_boxes;
  predicted_boxes.reserve(live_.size());
  for (const auto& track : live_) predicted_boxes.push_back(track.state.box());

  const CostMatrix costs =
      build_cost_matrix(world_boxes, predicted_boxes, cfg_);
  const Assignment assignment = hungarian_assign(costs.cost);

  std::vector<int> instance_track(instances.size(), -1);
  std::vector<char> track_seen(live_.size(), 0);

  for (const auto& [i, j] : assignment.pairs) {
    const CostComponents& c = costs.at(i, j);
    if (gate_rejects(c, cfg_)) {
      // Eq. 8: suspicious association spawns a fresh filter, the old track
      // keeps coasting.
      Track t = make_track(scan_index, instances[static_cast<std::size_t>(i)],
                           world_boxes[static_cast<std::size_t>(i)],
                           static_cast<std::uint32_t>(i));
      instance_track[static_cast<std::size_t>(i)] = t.id;
      live_.push_back(std::move(t));
      continue;
    }
    Track& track = live_[static_cast<std::size_t>(j)];
    track.state = kalman_update(track.state,
                                world_boxes[static_cast<std::size_t>(i)], cfg_);
    track.status = TrackStatus::Active;
    track.frames_since_seen = 0;
    track.history.push_back({scan_index, track.state.center(),
                             world_boxes[static_cast<std::size_t>(i)],
                             instances[static_cast<std::size_t>(i)].box,
                             static_cast<std::uint32_t>(i)});
    track_seen[static_cast<std::size_t>(j)] = 1;
    instance_track[static_cast<std::size_t>(i)] = track.id;
  }

  for (int i : assignment.unmatched_rows) {
    Track t = make_track(scan_index, instances[static_cast<std::size_t>(i)],
                         world_boxes[static_cast<std::size_t>(i)],
                         static_cast<std::uint32_t>(i));
    instance_track[static_cast<std::size_t>(i)] = t.id;
    live_.push_back(std::move(t));
  }

  std::vector<Track> kept;
  kept.reserve(live_.size());
  for (std::size_t j = 0; j < live_.size(); ++j) {
    Track& track = live_[j];
    if (j < track_seen.size() && !track_seen[j]) {
      track.status = TrackStatus::Deactivated;
      ++track.frames_since_seen;
    }
    if (track.frames_since_seen > cfg_.n_old) {
      finalized_.push_back(std::move(track));
    } else {
      kept.push_back(std::move(track));
    }
  }
  live_ = std::move(kept);
  return instance_track;
}

void Tracker::finish() {
  for (auto& track : live_) finalized_.push_back(std::move(track));
  live_.clear();
}

std::vector<const Track*> Tracker::all() const {
  std::vector<const Track*> out;
  out.reserve(finalized_.size() + live_.size());
  for (const auto& t : finalized_) out.push_back(&t);
  for (const auto& t : live_) out.push_back(&t);
  return out;
}

}  // namespace mosal
