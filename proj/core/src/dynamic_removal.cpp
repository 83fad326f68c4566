#include "mosal/dynamic_removal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "mosal/parallel.hpp"

namespace mosal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct CellStats {
  float z_lo = std::numeric_limits<float>::max();
  float z_hi = std::numeric_limits<float>::lowest();
  std::uint32_t count = 0;

  void add(double z) {
    const float zf = static_cast<float>(z);
    z_lo = std::min(z_lo, zf);
    z_hi = std::max(z_hi, zf);
    ++count;
  }
  float occupancy() const { return count ? z_hi - z_lo : 0.0f; }
};

std::uint64_t voxel_key(const Point3& p, double inv_voxel) {
  const auto qx = static_cast<std::int64_t>(std::floor(p.x * inv_voxel));
  const auto qy = static_cast<std::int64_t>(std::floor(p.y * inv_voxel));
  const auto qz = static_cast<std::int64_t>(std::floor(p.z * inv_voxel));
  std::uint64_t h = 1469598103934665603ull;
  for (std::int64_t v : {qx, qy, qz}) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ull;
  }
  return h;
}

struct Plane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;  // normal . p = offset on the plane

  double distance(const Point3& p) const {
    return std::abs(normal.x() * p.x + normal.y() * p.y + normal.z() * p.z -
                    offset);
  }
};

bool plane_from_three(const Point3& a, const Point3& b, const Point3& c,
                      Plane& out) {
  const Eigen::Vector3d u = b.vec() - a.vec();
  const Eigen::Vector3d v = c.vec() - a.vec();
  Eigen::Vector3d n = u.cross(v);
  const double len = n.norm();
  if (len < 1e-9) return false;
  n /= len;
  if (n.z() < 0.0) n = -n;
  out.normal = n;
  out.offset = n.dot(a.vec());
  return true;
}

Plane refine_plane(std::span<const Point3> pts,
                   const std::vector<std::uint32_t>& inliers) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (auto i : inliers) centroid += pts[i].vec();
  centroid /= static_cast<double>(inliers.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto i : inliers) {
    const Eigen::Vector3d d = pts[i].vec() - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Eigen::Vector3d n = es.eigenvectors().col(0);
  if (n.z() < 0.0) n = -n;
  Plane p;
  p.normal = n;
  p.offset = n.dot(centroid);
  return p;
}

}  // namespace

VolumeGrid::VolumeGrid(double r_voi, int n_rings, int n_sectors)
    : r_voi_(r_voi),
      ring_width_(r_voi / n_rings),
      sector_width_(kTwoPi / n_sectors),
      n_rings_(n_rings),
      n_sectors_(n_sectors) {
  if (r_voi <= 0.0 || n_rings < 1 || n_sectors < 1) {
    throw ValidationError("invalid volume grid parameters");
  }
}

int VolumeGrid::cell_index(double dx, double dy) const {
  const double r2 = dx * dx + dy * dy;
  if (r2 >= r_voi_ * r_voi_) return -1;
  const double r = std::sqrt(r2);
  int ring = static_cast<int>(r / ring_width_);
  if (ring >= n_rings_) ring = n_rings_ - 1;
  double az = std::atan2(dy, dx);
  if (az < 0.0) az += kTwoPi;
  int sector = static_cast<int>(az / sector_width_);
  if (sector >= n_sectors_) sector = n_sectors_ - 1;
  return ring * n_sectors_ + sector;
}

void VolumeGrid::neighbors(int cell, std::vector<int>& out) const {
  out.clear();
  const int ring = ring_of(cell);
  const int sector = sector_of(cell);
  for (int dr = -1; dr <= 1; ++dr) {
    const int r = ring + dr;
    if (r < 0 || r >= n_rings_) continue;
    for (int ds = -1; ds <= 1; ++ds) {
      if (dr == 0 && ds == 0) continue;
      const int s = (sector + ds + n_sectors_) % n_sectors_;
      out.push_back(cell_of(r, s));
    }
  }
}

double pseudo_occupancy(std::span<const double> z_values) {
  if (z_values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(z_values.begin(), z_values.end());
  return *hi - *lo;
}

std::size_t DynamicProposal::count() const {
  return static_cast<std::size_t>(
      std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

MapCloud aggregate_map(std::span<const Scan> scans, const PoseSequence& poses,
                       double thinning_voxel, unsigned threads) {
  if (scans.size() != poses.poses.size()) {
    throw ValidationError("scan count " + std::to_string(scans.size()) +
                          " != pose count " +
                          std::to_string(poses.poses.size()));
  }
  MapCloud map;
  map.scan_offsets.resize(scans.size() + 1, 0);
  for (std::size_t t = 0; t < scans.size(); ++t) {
    map.scan_offsets[t + 1] = map.scan_offsets[t] + scans[t].points.size();
  }
  const std::size_t total = map.scan_offsets.back();
  map.points.resize(total);
  map.origin.resize(total);

  parallel_for(scans.size(), threads, [&](std::size_t t) {
    const Transform& pose = poses.poses[t];
    std::size_t out = map.scan_offsets[t];
    const auto& pts = scans[t].points;
    for (std::size_t i = 0; i < pts.size(); ++i, ++out) {
      if (!pts[i].finite()) {
        throw ValidationError("non-finite point " + std::to_string(i) +
                              " in scan " + std::to_string(t));
      }
      map.points[out] = pose.apply(pts[i]);
      map.origin[out] = {static_cast<std::uint32_t>(t),
                         static_cast<std::uint32_t>(i)};
    }
  });

  map.occupancy_rep.assign(total, 1);
  if (thinning_voxel > 0.0) {
    // Keep up to two representatives per voxel, from different scans, so the
    // occupancy side still covers every voxel after the query scan's own
    // points are excluded.
    constexpr std::uint32_t kDone = 0xffffffffu;
    const double inv = 1.0 / thinning_voxel;
    std::unordered_map<std::uint64_t, std::uint32_t> seen;
    seen.reserve(total / 4 + 16);
    for (std::size_t i = 0; i < total; ++i) {
      auto& slot = seen[voxel_key(map.points[i], inv)];
      const std::uint32_t tag = map.origin[i].scan + 1;
      if (slot == 0) {
        slot = tag;
      } else if (slot != kDone && slot != tag) {
        slot = kDone;
      } else {
        map.occupancy_rep[i] = 0;
      }
    }
  }
  return map;
}

RatioOutcome scan_ratio_test(const MapCloud& map, std::size_t t,
                             const Eigen::Vector3d& sensor_origin,
                             const RemovalConfig& cfg) {
  const VolumeGrid grid(cfg.r_voi, cfg.n_rings, cfg.n_sectors);
  const double ox = sensor_origin.x();
  const double oy = sensor_origin.y();
  const double oz = sensor_origin.z();

  RatioOutcome out;
  out.query_index = static_cast<int>(t);

  std::vector<CellStats> query_stats(grid.n_cells());
  std::vector<CellStats> map_stats(grid.n_cells());

  const auto query = map.scan_block(t);
  const std::size_t q_begin = map.scan_offsets[t];
  const std::size_t q_end = map.scan_offsets[t + 1];

  std::vector<std::int32_t> query_cells(query.size());
  for (std::size_t i = 0; i < query.size(); ++i) {
    const int cell = grid.cell_index(query[i].x - ox, query[i].y - oy);
    query_cells[i] = cell;
    if (cell >= 0) query_stats[cell].add(query[i].z - oz);
  }

  // Map side: everything but the query scan, optionally only the voxel
  // thinning representatives.
  std::vector<std::int32_t> map_cells(map.size(), -1);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (i >= q_begin && i < q_end) continue;
    const int cell = grid.cell_index(map.points[i].x - ox, map.points[i].y - oy);
    map_cells[i] = cell;
    if (cell >= 0 && map.occupancy_rep[i]) {
      map_stats[cell].add(map.points[i].z - oz);
    }
  }

  out.cell_dynamic.assign(static_cast<std::size_t>(grid.n_cells()), 0);
  out.occupancy_query.resize(static_cast<std::size_t>(grid.n_cells()));
  out.occupancy_map.resize(static_cast<std::size_t>(grid.n_cells()));
  bool any_dynamic = false;
  for (int c = 0; c < grid.n_cells(); ++c) {
    const double o_q = query_stats[c].occupancy();
    const double o_m = map_stats[c].occupancy();
    out.occupancy_query[c] = static_cast<float>(o_q);
    out.occupancy_map[c] = static_cast<float>(o_m);
    std::uint8_t d = 0;
    if (o_m > cfg.h_min && o_q < cfg.tau_ratio * o_m) d |= 1;  // map taller
    if (o_q > cfg.h_min && o_m < cfg.tau_ratio * o_q) d |= 2;  // query taller
    out.cell_dynamic[c] = d;
    any_dynamic |= d != 0;
  }
  if (!any_dynamic) return out;

  for (std::size_t i = 0; i < query.size(); ++i) {
    const int cell = query_cells[i];
    if (cell >= 0 && out.cell_dynamic[cell] != 0) {
      out.flagged_query.push_back(static_cast<std::uint32_t>(i));
    }
  }
  for (std::size_t i = 0; i < map.size(); ++i) {
    const int cell = map_cells[i];
    if (cell >= 0 && out.cell_dynamic[cell] != 0) {
      out.flagged_map.push_back(map.origin[i]);
    }
  }
  return out;
}

DynamicProposal propose_for_scan(const MapCloud& map, std::size_t t,
                                 const Eigen::Vector3d& sensor_origin,
                                 const RemovalConfig& cfg) {
  const auto outcome = scan_ratio_test(map, t, sensor_origin, cfg);
  DynamicProposal proposal;
  proposal.scan_index = static_cast<int>(t);
  proposal.flags.assign(map.scan_block(t).size(), 0);
  for (auto i : outcome.flagged_query) proposal.flags[i] = 1;
  return proposal;
}

std::vector<DynamicProposal> compute_proposals(std::span<const Scan> scans,
                                               const PoseSequence& poses,
                                               const MapCloud& map,
                                               const RemovalConfig& cfg,
                                               unsigned threads) {
  if (scans.size() != poses.poses.size()) {
    throw ValidationError("scan/pose count mismatch");
  }
  const std::size_t n = scans.size();
  const unsigned workers = resolve_threads(threads);

  // Worker-local masks merged in a fixed order keep the result independent
  // of scheduling.
  std::vector<std::vector<std::vector<std::uint8_t>>> local(workers);
  std::vector<std::size_t> worker_of_block;

  const std::size_t chunk = (n + workers - 1) / workers;
  parallel_for_blocks(n, workers, [&](std::size_t begin, std::size_t end) {
    const std::size_t w = begin / chunk;
    auto& masks = local[w];
    masks.resize(n);
    for (std::size_t t = 0; t < n; ++t) masks[t].assign(scans[t].points.size(), 0);
    for (std::size_t t = begin; t < end; ++t) {
      const auto outcome =
          scan_ratio_test(map, t, poses.poses[t].translation(), cfg);
      for (auto i : outcome.flagged_query) masks[t][i] = 1;
      for (const auto& ref : outcome.flagged_map) {
        masks[ref.scan][ref.point] = 1;
      }
    }
  });

  std::vector<DynamicProposal> proposals(n);
  for (std::size_t t = 0; t < n; ++t) {
    proposals[t].scan_index = static_cast<int>(t);
    proposals[t].flags.assign(scans[t].points.size(), 0);
  }
  for (unsigned w = 0; w < workers; ++w) {
    if (local[w].empty()) continue;
    for (std::size_t t = 0; t < n; ++t) {
      auto& dst = proposals[t].flags;
      const auto& src = local[w][t];
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] |= src[i];
    }
  }

  parallel_for(n, threads, [&](std::size_t t) {
    proposals[t] = revert_ground(proposals[t], map.scan_block(t),
                                 poses.poses[t].translation(), cfg);
  });
  return proposals;
}

DynamicProposal revert_ground(const DynamicProposal& proposal,
                              std::span<const Point3> scan_world,
                              const Eigen::Vector3d& sensor_origin,
                              const RemovalConfig& cfg) {
  DynamicProposal out = proposal;
  if (out.flags.size() != scan_world.size()) {
    throw ValidationError("proposal flag count does not match scan");
  }
  const VolumeGrid grid(cfg.r_voi, cfg.n_rings, cfg.n_sectors);
  const double ox = sensor_origin.x();
  const double oy = sensor_origin.y();

  // Bucket the scan by cell.
  std::vector<std::vector<std::uint32_t>> cell_points(
      static_cast<std::size_t>(grid.n_cells()));
  std::vector<int> flagged_cells;
  for (std::size_t i = 0; i < scan_world.size(); ++i) {
    const int cell = grid.cell_index(scan_world[i].x - ox, scan_world[i].y - oy);
    if (cell < 0) continue;
    cell_points[cell].push_back(static_cast<std::uint32_t>(i));
    if (out.flags[i] && (flagged_cells.empty() || flagged_cells.back() != cell)) {
      flagged_cells.push_back(cell);
    }
  }
  std::sort(flagged_cells.begin(), flagged_cells.end());
  flagged_cells.erase(std::unique(flagged_cells.begin(), flagged_cells.end()),
                      flagged_cells.end());

  const double cos_max_tilt =
      std::cos(cfg.ground_max_tilt_deg * std::numbers::pi / 180.0);
  std::vector<int> nbrs;
  std::vector<std::uint32_t> candidates;
  std::vector<std::uint32_t> inliers, best_inliers;

  for (int seed_cell : flagged_cells) {
    auto& members = cell_points[seed_cell];
    if (members.size() < 3) continue;

    // Lowest-z quartile as ground seed candidates.
    candidates = members;
    std::sort(candidates.begin(), candidates.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                return scan_world[a].z < scan_world[b].z ||
                       (scan_world[a].z == scan_world[b].z && a < b);
              });
    const std::size_t quartile = (candidates.size() + 3) / 4;
    if (quartile < 3) continue;  // too few ground candidates, skip this cell
    candidates.resize(quartile);

    // Ground is the lowest surface in the cell: keep only the bottom slab of
    // the quartile so a dense object underside cannot outvote sparse ground
    // returns. A slope stays recoverable because the clearing pass below
    // walks the whole cell, not just the seeds.
    const double slab_top =
        scan_world[candidates.front()].z + 2.0 * cfg.d_ground;
    while (candidates.size() > 3 && scan_world[candidates.back()].z > slab_top) {
      candidates.pop_back();
    }
    if (scan_world[candidates.back()].z > slab_top) continue;

    std::mt19937 rng(static_cast<std::uint32_t>(
        0x9e3779b9u ^ (static_cast<std::uint32_t>(out.scan_index) * 2654435761u) ^
        static_cast<std::uint32_t>(seed_cell)));
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);

    // The ground is the lowest surface: every hypothesis must explain the
    // cell's lowest point, otherwise a box underside outvotes sparse ground.
    const std::uint32_t anchor = candidates.front();

    best_inliers.clear();
    Plane best_plane;
    for (int it = 0; it < cfg.ransac_iters; ++it) {
      const std::uint32_t a = candidates[pick(rng)];
      const std::uint32_t b = candidates[pick(rng)];
      const std::uint32_t c = candidates[pick(rng)];
      if (a == b || b == c || a == c) continue;
      Plane plane;
      if (!plane_from_three(scan_world[a], scan_world[b], scan_world[c], plane)) {
        continue;
      }
      if (plane.distance(scan_world[anchor]) > cfg.d_ground) continue;
      inliers.clear();
      for (auto idx : candidates) {
        if (plane.distance(scan_world[idx]) <= cfg.d_ground) {
          inliers.push_back(idx);
        }
      }
      if (inliers.size() > best_inliers.size()) {
        best_inliers = inliers;
        best_plane = plane;
      }
    }
    if (best_inliers.size() < 3) continue;
    Plane plane = refine_plane(scan_world, best_inliers);
    if (plane.distance(scan_world[anchor]) > cfg.d_ground) plane = best_plane;
    if (plane.normal.z() < cos_max_tilt) continue;  // not near-vertical normal

    // Clear ground flags in the seed cell, then grow into adjacent cells as
    // long as they keep touching the plane.
    std::deque<int> frontier{seed_cell};
    std::unordered_set<int> visited{seed_cell};
    while (!frontier.empty()) {
      const int cell = frontier.front();
      frontier.pop_front();
      std::size_t near_plane = 0;
      for (auto idx : cell_points[cell]) {
        if (plane.distance(scan_world[idx]) <= cfg.d_ground) {
          ++near_plane;
          if (out.flags[idx]) out.flags[idx] = 0;
        }
      }
      if (cell != seed_cell && near_plane < 3) continue;  // stop growing here
      grid.neighbors(cell, nbrs);
      for (int nb : nbrs) {
        if (visited.insert(nb).second && !cell_points[nb].empty()) {
          frontier.push_back(nb);
        }
      }
    }
  }
  return out;
}

}  // namespace mosal
