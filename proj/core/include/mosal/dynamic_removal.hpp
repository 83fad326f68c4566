#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mosal/dataset_io.hpp"
#include "mosal/geometry.hpp"

namespace mosal {

struct RemovalConfig {
  double r_voi = 80.0;         // VOI radius around the query pose [m]
  int n_rings = 20;            // radial bins
  int n_sectors = 60;          // azimuthal bins
  double tau_ratio = 0.2;      // occupancy ratio threshold
  double h_min = 0.2;          // minimum occupancy to trust a cell [m]
  double d_ground = 0.15;      // point-to-plane distance for ground [m]
  double ground_max_tilt_deg = 30.0;
  double map_voxel = 0.1;      // occupancy-side thinning voxel, 0 = off
  int ransac_iters = 50;

  bool operator==(const RemovalConfig&) const = default;
};

/// Radial/azimuthal binning of the volume of interest around a query pose.
class VolumeGrid {
 public:
  VolumeGrid(double r_voi, int n_rings, int n_sectors);

  /// Cell index for a world xy offset from the grid origin, -1 outside VOI.
  int cell_index(double dx, double dy) const;

  int n_cells() const { return n_rings_ * n_sectors_; }
  int n_rings() const { return n_rings_; }
  int n_sectors() const { return n_sectors_; }
  int cell_of(int ring, int sector) const { return ring * n_sectors_ + sector; }
  int ring_of(int cell) const { return cell / n_sectors_; }
  int sector_of(int cell) const { return cell % n_sectors_; }

  /// Up to 8 neighbors: ring +-1 clamped, sector +-1 wrapped.
  void neighbors(int cell, std::vector<int>& out) const;

 private:
  double r_voi_;
  double ring_width_;
  double sector_width_;
  int n_rings_;
  int n_sectors_;
};

/// Max minus min height over a cell's points, 0 for an empty cell.
double pseudo_occupancy(std::span<const double> z_values);

struct MapPointRef {
  std::uint32_t scan = 0;
  std::uint32_t point = 0;
};

/// Aggregated world-frame map with per-point provenance. Points are stored
/// in scan order, so scan t occupies [scan_offsets[t], scan_offsets[t+1]).
struct MapCloud {
  std::vector<Point3> points;
  std::vector<MapPointRef> origin;
  std::vector<std::size_t> scan_offsets;
  // Points participating in the occupancy (ratio-test) side after voxel
  // thinning; label-bearing points themselves are never thinned.
  std::vector<std::uint8_t> occupancy_rep;

  std::size_t size() const { return points.size(); }
  std::span<const Point3> scan_block(std::size_t t) const {
    return {points.data() + scan_offsets[t],
            scan_offsets[t + 1] - scan_offsets[t]};
  }
};

MapCloud aggregate_map(std::span<const Scan> scans, const PoseSequence& poses,
                       double thinning_voxel = 0.0, unsigned threads = 1);

/// Candidate dynamic flags for one scan, positional like labels.
struct DynamicProposal {
  int scan_index = 0;
  std::vector<std::uint8_t> flags;

  std::size_t count() const;
};

/// Everything one query's ratio test produced. flagged_query holds indices
/// into scan t (the query's own provenance); flagged_map holds dynamic-cell
/// points of the other scans, accumulated across queries by the driver.
struct RatioOutcome {
  int query_index = 0;
  std::vector<std::uint8_t> cell_dynamic;  // bit 0: map taller, bit 1: query taller
  std::vector<float> occupancy_query;
  std::vector<float> occupancy_map;
  std::vector<std::uint32_t> flagged_query;
  std::vector<MapPointRef> flagged_map;
};

/// Pseudo-occupancy discrepancy test of scan t against the rest of the map.
/// A cell is dynamic when one side's occupancy exceeds h_min and the other
/// side's falls below tau_ratio of it. The query's own points are excluded
/// from the map side, otherwise the query-taller case could never fire.
RatioOutcome scan_ratio_test(const MapCloud& map, std::size_t t,
                             const Eigen::Vector3d& sensor_origin,
                             const RemovalConfig& cfg);

/// Single-query proposal for scan t (its own flagged points only).
DynamicProposal propose_for_scan(const MapCloud& map, std::size_t t,
                                 const Eigen::Vector3d& sensor_origin,
                                 const RemovalConfig& cfg);

/// Full pipeline stage: runs the ratio test for every query and accumulates
/// dynamic-cell evidence onto every scan via provenance, then reverts ground.
std::vector<DynamicProposal> compute_proposals(std::span<const Scan> scans,
                                               const PoseSequence& poses,
                                               const MapCloud& map,
                                               const RemovalConfig& cfg,
                                               unsigned threads = 1);

/// Un-flags ground-plane points inside flagged cells (RANSAC plane fit over
/// the lowest-z quartile, near-vertical normals only, region growth into
/// adjacent cells). Only ever clears flags.
DynamicProposal revert_ground(const DynamicProposal& proposal,
                              std::span<const Point3> scan_world,
                              const Eigen::Vector3d& sensor_origin,
                              const RemovalConfig& cfg);

}  // namespace mosal
