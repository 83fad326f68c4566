#pragma once

#include <cstdint>
#include <vector>

#include "mosal/dynamic_removal.hpp"
#include "mosal/geometry.hpp"

namespace mosal {

struct ClusteringConfig {
  std::vector<double> eps_ladder = {2.0, 1.0, 0.5, 0.25};
  int min_pts = 5;
  int n_min = 5;        // minimum points per instance
  double t_size = 20.0;  // maximum box side per instance [m]

  bool operator==(const ClusteringConfig&) const = default;
};

/// Point-index subset of one scan belonging to one cluster.
struct Segment {
  std::vector<std::uint32_t> indices;
  int cluster_id = -1;
};

struct Instance {
  Segment segment;
  BoundingBox box;
};

struct DbscanResult {
  std::vector<Segment> clusters;
  std::vector<std::uint32_t> noise;
};

/// Density-reachability clustering over 3D Euclidean distance with a
/// uniform-grid index of cell size eps. The eps-neighborhood includes the
/// point itself. Border points join their nearest core point (ties broken
/// by lexicographic coordinates), which makes the partition independent of
/// input order.
DbscanResult dbscan(const std::vector<Point3>& points,
                    const std::vector<std::uint32_t>& subset, double eps,
                    int min_pts);

/// Runs dbscan down the eps ladder: clusters whose box exceeds t_size on the
/// longest side are re-clustered at the next smaller eps until the ladder is
/// exhausted. Noise is discarded.
std::vector<Segment> multi_eps_cluster(const std::vector<Point3>& points,
                                       const std::vector<std::uint32_t>& subset,
                                       const ClusteringConfig& cfg);

/// Drops undersized/oversized segments and fits a bounding box per survivor.
std::vector<Instance> segments_to_instances(const std::vector<Segment>& segments,
                                            const std::vector<Point3>& points,
                                            const ClusteringConfig& cfg);

/// Full per-scan stage: proposal flags -> instances.
std::vector<Instance> cluster_proposal(const Scan& scan,
                                       const DynamicProposal& proposal,
                                       const ClusteringConfig& cfg);

}  // namespace mosal
