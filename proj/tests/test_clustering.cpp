#include <doctest.h>

#include <random>

#include "mosal/clustering.hpp"
#include "oracles.hpp"

using namespace mosal;

namespace {

std::vector<std::uint32_t> all_indices(std::size_t n) {
  std::vector<std::uint32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  return idx;
}

std::vector<Point3> random_cloud(std::size_t n, std::uint64_t seed,
                                 double span = 10.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-span, span);
  std::vector<Point3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.push_back({u(rng), u(rng), u(rng), 0.f});
  return pts;
}

// Dense blob of points around a center, spacing well under any test eps.
void add_blob(std::vector<Point3>& pts, double cx, double cy, double cz,
              int nx, int ny, double step) {
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      pts.push_back({cx + i * step, cy + j * step, cz, 0.f});
    }
  }
}

auto canonical(const std::vector<Segment>& segments) {
  std::vector<std::vector<std::uint32_t>> clusters;
  for (const auto& s : segments) clusters.push_back(s.indices);
  return oracles::canonical_partition(std::move(clusters));
}

auto canonical(const DbscanResult& result) {
  std::vector<std::vector<std::uint32_t>> clusters;
  for (const auto& s : result.clusters) clusters.push_back(s.indices);
  return oracles::canonical_partition(std::move(clusters));
}

}  // namespace

TEST_SUITE_BEGIN("clustering");

TEST_CASE("two groups far apart become two clusters") {
  std::vector<Point3> pts;
  add_blob(pts, 0, 0, 0, 3, 3, 0.5);
  add_blob(pts, 10, 0, 0, 3, 3, 0.5);
  const auto result = dbscan(pts, all_indices(pts.size()), 2.0, 5);
  CHECK(result.clusters.size() == 2);
  CHECK(result.noise.empty());
}

TEST_CASE("chain within eps is one cluster") {
  std::vector<Point3> pts;
  for (int i = 0; i < 30; ++i) pts.push_back({i * 0.9, 0, 0, 0.f});
  const auto result = dbscan(pts, all_indices(pts.size()), 1.0, 2);
  CHECK(result.clusters.size() == 1);
  CHECK(result.clusters[0].indices.size() == 30);
}

TEST_CASE("matches the naive reference on random clouds") {
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = random_cloud(200, 1000 + trial);
    const auto subset = all_indices(pts.size());
    for (double eps : {2.0, 1.0, 0.5, 0.25}) {
      const auto fast = dbscan(pts, subset, eps, 5);
      const auto naive = oracles::naive_dbscan(pts, subset, eps, 5);
      CHECK(canonical(fast) == oracles::canonical_partition(naive.clusters));
      auto fast_noise = fast.noise;
      auto naive_noise = naive.noise;
      std::sort(fast_noise.begin(), fast_noise.end());
      std::sort(naive_noise.begin(), naive_noise.end());
      CHECK(fast_noise == naive_noise);
    }
  }
}

TEST_CASE("partition is invariant under point order permutation") {
  auto pts = random_cloud(150, 42, 4.0);
  const auto base = dbscan(pts, all_indices(pts.size()), 1.0, 4);

  // Permute: cluster identity must survive as sets of coordinates.
  std::vector<std::uint32_t> perm = all_indices(pts.size());
  std::mt19937_64 rng(7);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Point3> shuffled(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) shuffled[i] = pts[perm[i]];
  const auto permuted = dbscan(shuffled, all_indices(pts.size()), 1.0, 4);

  auto key = [](const std::vector<Point3>& ps,
                const std::vector<std::uint32_t>& idx) {
    std::vector<std::tuple<double, double, double>> coords;
    for (auto i : idx) coords.emplace_back(ps[i].x, ps[i].y, ps[i].z);
    std::sort(coords.begin(), coords.end());
    return coords;
  };
  std::vector<std::vector<std::tuple<double, double, double>>> a, b;
  for (const auto& c : base.clusters) a.push_back(key(pts, c.indices));
  for (const auto& c : permuted.clusters) b.push_back(key(shuffled, c.indices));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("coverage: clusters plus noise equals the input subset") {
  const auto pts = random_cloud(120, 77, 3.0);
  const auto subset = all_indices(pts.size());
  const auto result = dbscan(pts, subset, 0.8, 4);
  std::vector<std::uint32_t> seen = result.noise;
  for (const auto& c : result.clusters) {
    seen.insert(seen.end(), c.indices.begin(), c.indices.end());
  }
  std::sort(seen.begin(), seen.end());
  CHECK(seen == subset);

  // Disjointness comes with coverage: no index may repeat.
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("multi_eps splits oversized merges at the next level") {
  // Two 12 m objects end to end with a 1.5 m gap: merged at eps=2 into a
  // ~25 m cluster that exceeds t_size, split apart at eps=1.
  std::vector<Point3> pts;
  add_blob(pts, 0, 0, 0, 30, 4, 0.4);      // ~12 m long
  add_blob(pts, 13.2, 0, 0, 30, 4, 0.4);   // next one, 1.5 m gap
  ClusteringConfig cfg;
  cfg.eps_ladder = {2.0, 1.0, 0.5, 0.25};
  cfg.t_size = 20.0;

  const auto merged = dbscan(pts, all_indices(pts.size()), 2.0, cfg.min_pts);
  CHECK(merged.clusters.size() == 1);  // sanity: first level really merges

  const auto segments = multi_eps_cluster(pts, all_indices(pts.size()), cfg);
  CHECK(segments.size() == 2);
}

TEST_CASE("multi_eps keeps compact objects identical across ladders") {
  std::vector<Point3> pts;
  add_blob(pts, 0, 0, 0, 8, 8, 0.3);
  ClusteringConfig deep;
  deep.eps_ladder = {2.0, 1.0, 0.5, 0.25};
  ClusteringConfig shallow;
  shallow.eps_ladder = {2.0};
  const auto a = multi_eps_cluster(pts, all_indices(pts.size()), deep);
  const auto b = multi_eps_cluster(pts, all_indices(pts.size()), shallow);
  CHECK(canonical(a) == canonical(b));
}

TEST_CASE("multi_eps rejects a bad ladder") {
  const auto pts = random_cloud(10, 1);
  ClusteringConfig cfg;
  cfg.eps_ladder = {};
  CHECK_THROWS_AS(multi_eps_cluster(pts, all_indices(pts.size()), cfg),
                  ValidationError);
  cfg.eps_ladder = {1.0, 2.0};
  CHECK_THROWS_AS(multi_eps_cluster(pts, all_indices(pts.size()), cfg),
                  ValidationError);
}

TEST_CASE("instance filtering enforces N_min and T_size") {
  ClusteringConfig cfg;  // n_min = 5, t_size = 20

  std::vector<Point3> pts;
  add_blob(pts, 0, 0, 0, 2, 2, 0.3);  // 4 points: below N_min
  Segment tiny;
  tiny.indices = all_indices(4);
  CHECK(segments_to_instances({tiny}, pts, cfg).empty());

  // A 30 m long segment is dropped by T_size.
  pts.clear();
  for (int i = 0; i < 100; ++i) pts.push_back({i * 0.3, 0.1 * (i % 3), 0, 0.f});
  Segment log;
  log.indices = all_indices(pts.size());
  CHECK(segments_to_instances({log}, pts, cfg).empty());

  // A 50-point 4 m segment is kept and its box contains every point.
  pts.clear();
  add_blob(pts, 0, 0, 0, 10, 5, 0.4);
  Segment ok;
  ok.indices = all_indices(pts.size());
  const auto instances = segments_to_instances({ok}, pts, cfg);
  REQUIRE(instances.size() == 1);
  for (auto i : instances[0].segment.indices) {
    CHECK(instances[0].box.contains(pts[i].vec(), 1e-6));
  }
}

TEST_CASE("multi_eps instances never violate the size filters") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  std::vector<Point3> pts;
  for (int i = 0; i < 400; ++i) pts.push_back({u(rng), u(rng), 0.0, 0.f});
  ClusteringConfig cfg;
  const auto segments = multi_eps_cluster(pts, all_indices(pts.size()), cfg);
  const auto instances = segments_to_instances(segments, pts, cfg);
  for (const auto& inst : instances) {
    CHECK(inst.segment.indices.size() >= static_cast<std::size_t>(cfg.n_min));
    CHECK(inst.box.max_side() <= cfg.t_size);
  }
}

TEST_SUITE_END();
