#include "mosal/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace mosal {

namespace {

struct GridIndex {
  double inv_cell;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets;

  static std::uint64_t key(std::int64_t x, std::int64_t y, std::int64_t z) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int64_t v : {x, y, z}) {
      h ^= static_cast<std::uint64_t>(v) * 0x9e3779b97f4a7c15ull;
      h = (h << 13) | (h >> 51);
      h *= 1099511628211ull;
    }
    return h;
  }

  std::int64_t coord(double v) const {
    return static_cast<std::int64_t>(std::floor(v * inv_cell));
  }

  GridIndex(const std::vector<Point3>& points,
            const std::vector<std::uint32_t>& subset, double cell)
      : inv_cell(1.0 / cell) {
    buckets.reserve(subset.size());
    for (auto idx : subset) {
      const auto& p = points[idx];
      buckets[key(coord(p.x), coord(p.y), coord(p.z))].push_back(idx);
    }
  }

  template <typename Fn>
  void for_candidates(const Point3& p, Fn&& fn) const {
    const std::int64_t cx = coord(p.x);
    const std::int64_t cy = coord(p.y);
    const std::int64_t cz = coord(p.z);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = buckets.find(key(cx + dx, cy + dy, cz + dz));
          if (it == buckets.end()) continue;
          for (auto idx : it->second) fn(idx);
        }
      }
    }
  }
};

double dist2(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

bool lex_less(const Point3& a, const Point3& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

}  // namespace

DbscanResult dbscan(const std::vector<Point3>& points,
                    const std::vector<std::uint32_t>& subset, double eps,
                    int min_pts) {
  if (eps <= 0.0) throw ValidationError("dbscan eps must be positive");
  if (min_pts < 1) throw ValidationError("dbscan min_pts must be >= 1");

  DbscanResult result;
  if (subset.empty()) return result;

  const GridIndex grid(points, subset, eps);
  const double eps2 = eps * eps;

  // Dense remap of subset ids.
  std::unordered_map<std::uint32_t, std::uint32_t> dense;
  dense.reserve(subset.size());
  for (std::uint32_t i = 0; i < subset.size(); ++i) dense[subset[i]] = i;

  std::vector<std::vector<std::uint32_t>> neighbors(subset.size());
  for (std::uint32_t i = 0; i < subset.size(); ++i) {
    const auto& p = points[subset[i]];
    grid.for_candidates(p, [&](std::uint32_t idx) {
      if (dist2(p, points[idx]) <= eps2) neighbors[i].push_back(idx);
    });
  }

  std::vector<char> core(subset.size(), 0);
  for (std::uint32_t i = 0; i < subset.size(); ++i) {
    core[i] = neighbors[i].size() >= static_cast<std::size_t>(min_pts);
  }

  // Connected components over core points.
  constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> cluster_of(subset.size(), kUnassigned);
  std::uint32_t next_cluster = 0;
  std::vector<std::uint32_t> stack;
  for (std::uint32_t i = 0; i < subset.size(); ++i) {
    if (!core[i] || cluster_of[i] != kUnassigned) continue;
    const std::uint32_t cid = next_cluster++;
    cluster_of[i] = cid;
    stack.assign(1, i);
    while (!stack.empty()) {
      const std::uint32_t cur = stack.back();
      stack.pop_back();
      for (auto raw : neighbors[cur]) {
        const std::uint32_t j = dense.at(raw);
        if (core[j] && cluster_of[j] == kUnassigned) {
          cluster_of[j] = cid;
          stack.push_back(j);
        }
      }
    }
  }

  // Border points join the nearest core neighbor.
  for (std::uint32_t i = 0; i < subset.size(); ++i) {
    if (core[i]) continue;
    double best_d = std::numeric_limits<double>::infinity();
    std::uint32_t best_core = kUnassigned;
    const auto& p = points[subset[i]];
    for (auto raw : neighbors[i]) {
      const std::uint32_t j = dense.at(raw);
      if (!core[j]) continue;
      const double d = dist2(p, points[raw]);
      if (d < best_d ||
          (d == best_d && best_core != kUnassigned &&
           lex_less(points[raw], points[subset[best_core]]))) {
        best_d = d;
        best_core = j;
      }
    }
    if (best_core != kUnassigned) cluster_of[i] = cluster_of[best_core];
  }

  result.clusters.resize(next_cluster);
  for (std::uint32_t c = 0; c < next_cluster; ++c) {
    result.clusters[c].cluster_id = static_cast<int>(c);
  }
  for (std::uint32_t i = 0; i < subset.size(); ++i) {
    if (cluster_of[i] == kUnassigned) {
      result.noise.push_back(subset[i]);
    } else {
      result.clusters[cluster_of[i]].indices.push_back(subset[i]);
    }
  }
  return result;
}

namespace {

void cluster_recursive(const std::vector<Point3>& points,
                       const std::vector<std::uint32_t>& subset,
                       const ClusteringConfig& cfg, std::size_t level,
                       std::vector<Segment>& out) {
  const auto res = dbscan(points, subset, cfg.eps_ladder[level], cfg.min_pts);
  for (const auto& cluster : res.clusters) {
    if (level + 1 < cfg.eps_ladder.size()) {
      const BoundingBox box = fit_bounding_box(points, cluster.indices);
      if (box.max_side() > cfg.t_size) {
        cluster_recursive(points, cluster.indices, cfg, level + 1, out);
        continue;
      }
    }
    out.push_back(cluster);
  }
}

}  // namespace

std::vector<Segment> multi_eps_cluster(const std::vector<Point3>& points,
                                       const std::vector<std::uint32_t>& subset,
                                       const ClusteringConfig& cfg) {
  if (cfg.eps_ladder.empty()) {
    throw ValidationError("eps ladder must not be empty");
  }
  if (!std::is_sorted(cfg.eps_ladder.rbegin(), cfg.eps_ladder.rend())) {
    throw ValidationError("eps ladder must be sorted descending");
  }
  std::vector<Segment> segments;
  cluster_recursive(points, subset, cfg, 0, segments);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    segments[i].cluster_id = static_cast<int>(i);
  }
  return segments;
}

std::vector<Instance> segments_to_instances(const std::vector<Segment>& segments,
                                            const std::vector<Point3>& points,
                                            const ClusteringConfig& cfg) {
  std::vector<Instance> instances;
  for (const auto& seg : segments) {
    if (seg.indices.size() < static_cast<std::size_t>(cfg.n_min)) continue;
    BoundingBox box = fit_bounding_box(points, seg.indices);
    if (box.max_side() > cfg.t_size) continue;
    instances.push_back({seg, box});
  }
  return instances;
}

std::vector<Instance> cluster_proposal(const Scan& scan,
                                       const DynamicProposal& proposal,
                                       const ClusteringConfig& cfg) {
  if (proposal.flags.size() != scan.points.size()) {
    throw ValidationError("proposal does not match scan point count");
  }
  std::vector<std::uint32_t> flagged;
  for (std::uint32_t i = 0; i < proposal.flags.size(); ++i) {
    if (proposal.flags[i]) flagged.push_back(i);
  }
  const auto segments = multi_eps_cluster(scan.points, flagged, cfg);
  return segments_to_instances(segments, scan.points, cfg);
}

}  // namespace mosal
