#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mosal/pipeline.hpp"
#include "mosal/synthetic.hpp"

using namespace mosal;
namespace fs = std::filesystem;

namespace {

SceneSpec smoke_scene() {
  SceneSpec spec;
  spec.seed = 21;
  spec.n_scans = 40;
  spec.dt = 0.1;
  spec.ground.min = {-40, -20};
  spec.ground.max = {40, 20};
  spec.ground.density = 1.2;
  spec.ground.sigma_z = 0.01;
  spec.sensor.max_range = 60.0;
  spec.sensor.sigma_z = 0.005;
  spec.ego.speed = 2.0;
  spec.ego.waypoints = {{-10, 0, 1.8}, {10, 0, 1.8}};

  BoxSpec parked;  // adjacent to the ego path, never moves
  parked.waypoints = {{5.0, 5.0, 1.05}};
  parked.yaw = 0.1;
  parked.density = 60.0;
  spec.static_boxes.push_back(parked);

  BoxSpec mover;  // drives the other way past the ego
  mover.speed = 4.0;
  mover.density = 60.0;
  mover.waypoints = {{25.0, -4.0, 1.05}, {-25.0, -4.0, 1.05}};
  spec.moving_boxes.push_back(mover);
  return spec;
}

double pipeline_iou(const SyntheticSequence& seq, const PipelineResult& result) {
  std::vector<ConfusionCounts> counts;
  for (std::size_t t = 0; t < seq.scans.size(); ++t) {
    counts.push_back(confusion_counts(result.labels[t], seq.truth[t]));
  }
  return sequence_report(counts).aggregate_iou.value;
}

}  // namespace

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("labels a small synthetic street scene well") {
  const SceneSpec scene = smoke_scene();
  const auto seq = generate_sequence(scene);
  PipelineConfig cfg;
  cfg.threads = 2;

  const auto result = run_pipeline(seq.scans, seq.reported_poses, cfg);
  REQUIRE(result.labels.size() == seq.scans.size());

  const double iou = pipeline_iou(seq, result);
  CHECK(iou >= 0.85);

  // The parked car never crosses the moving rule.
  CHECK(result.moving_track_count() >= 1);
  for (const auto& v : result.verdicts) {
    if (!v.moving) continue;
    CHECK(v.trajectory_length > v.max_side);
  }

  const std::string text = result.summary();
  CHECK(text.find("tracks = ") != std::string::npos);
  CHECK(text.find("time_tracking_s = ") != std::string::npos);
}

TEST_CASE("all-static scene labels everything static") {
  SceneSpec scene = smoke_scene();
  scene.moving_boxes.clear();
  scene.n_scans = 15;
  const auto seq = generate_sequence(scene);
  PipelineConfig cfg;
  cfg.threads = 2;
  const auto result = run_pipeline(seq.scans, seq.reported_poses, cfg);
  for (const auto& labels : result.labels) {
    CHECK(labels.moving_count() == 0);
  }
}

TEST_CASE("pipeline rejects mismatched inputs") {
  const auto seq = generate_sequence(smoke_scene(), 3, 0.1);
  PipelineConfig cfg;
  PoseSequence short_poses;
  short_poses.poses = {Transform()};
  CHECK_THROWS_AS(run_pipeline(seq.scans, short_poses, cfg), ValidationError);
  CHECK_THROWS_AS(run_pipeline({}, short_poses, cfg), ValidationError);
}

TEST_CASE("cache reruns reproduce the labels") {
  SceneSpec scene = smoke_scene();
  scene.n_scans = 12;
  const auto seq = generate_sequence(scene);
  PipelineConfig cfg;
  cfg.threads = 1;

  const fs::path cache =
      fs::temp_directory_path() / ("mosal_cache_" + std::to_string(::getpid()));
  fs::remove_all(cache);
  PipelineOptions options;
  options.cache_dir = cache;

  const auto first = run_pipeline(seq.scans, seq.reported_poses, cfg, options);
  CHECK(fs::exists(cache / "proposals" / "000000.prop"));
  CHECK(fs::exists(cache / "instances" / "000000.inst"));

  const auto second = run_pipeline(seq.scans, seq.reported_poses, cfg, options);
  REQUIRE(first.labels.size() == second.labels.size());
  for (std::size_t t = 0; t < first.labels.size(); ++t) {
    CHECK(first.labels[t].labels == second.labels[t].labels);
  }
  fs::remove_all(cache);
}

TEST_CASE("clean_map drops moving points and validates inputs") {
  SceneSpec scene = smoke_scene();
  scene.n_scans = 10;
  const auto seq = generate_sequence(scene);

  const fs::path out =
      fs::temp_directory_path() / ("mosal_map_" + std::to_string(::getpid()));

  // With truth labels, no moving-box point may survive.
  clean_map(seq.scans, seq.reported_poses, seq.truth, 0.0, out);
  std::size_t lines = 0;
  {
    std::ifstream in(out);
    std::string line;
    while (std::getline(in, line)) ++lines;
  }
  std::size_t static_points = 0, total_points = 0;
  for (std::size_t t = 0; t < seq.scans.size(); ++t) {
    static_points += seq.truth[t].size() - seq.truth[t].moving_count();
    total_points += seq.truth[t].size();
  }
  CHECK(lines == static_points);
  CHECK(lines < total_points);

  // Voxel thinning shrinks the file.
  clean_map(seq.scans, seq.reported_poses, seq.truth, 0.2, out);
  std::size_t thinned = 0;
  {
    std::ifstream in(out);
    std::string line;
    while (std::getline(in, line)) ++thinned;
  }
  CHECK(thinned < lines);

  CHECK_THROWS_AS(clean_map({}, {}, {}, 0.1, out), ValidationError);

  // A label set that does not pair with its scan is rejected.
  auto bad = seq.truth;
  bad[0].labels.pop_back();
  CHECK_THROWS_AS(
      clean_map(seq.scans, seq.reported_poses, bad, 0.1, out),
      ValidationError);
  fs::remove(out);
}

TEST_SUITE_END();
