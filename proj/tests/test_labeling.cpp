#include <doctest.h>

#include "mosal/labeling.hpp"

using namespace mosal;

namespace {

Track track_with_centers(const std::vector<Eigen::Vector3d>& centers,
                         double l = 4.0, double w = 1.8, double h = 1.5) {
  Track t;
  t.id = 1;
  int scan = 0;
  for (const auto& c : centers) {
    TrackObservation obs;
    obs.scan_index = scan++;
    obs.center = c;
    obs.world_box.center = c;
    obs.world_box.length = l;
    obs.world_box.width = w;
    obs.world_box.height = h;
    obs.sensor_box = obs.world_box;
    t.history.push_back(obs);
  }
  return t;
}

BoundingBox cube_at(double x, double y, double z, double side) {
  BoundingBox b;
  b.center = {x, y, z};
  b.length = b.width = b.height = side;
  return b;
}

}  // namespace

TEST_SUITE_BEGIN("labeling");

TEST_CASE("trajectory length over a polyline") {
  CHECK(trajectory_length(track_with_centers({{0, 0, 0}})) ==
        doctest::Approx(0.0));
  CHECK(trajectory_length(track_with_centers(
            {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}})) == doctest::Approx(2.0));

  // Displacement mode measures first-to-last only.
  CHECK(trajectory_length(track_with_centers({{0, 0, 0}, {1, 0, 0}, {0, 0, 0}}),
                          LabelingConfig::TrajectoryMode::Displacement) ==
        doctest::Approx(0.0));

  Track empty;
  CHECK_THROWS_AS(trajectory_length(empty), ValidationError);
}

TEST_CASE("classification follows the trajectory-vs-size rule") {
  LabelingConfig cfg;

  // 6 m of travel against a 4.5 m box: moving.
  auto moving = track_with_centers(
      {{0, 0, 0}, {2, 0, 0}, {4, 0, 0}, {6, 0, 0}}, 4.5, 1.8, 1.5);
  const auto v1 = classify_track(moving, cfg);
  CHECK(v1.moving);
  CHECK(v1.trajectory_length == doctest::Approx(6.0));
  CHECK(v1.max_side == doctest::Approx(4.5));

  // 3 m of jitter against the same box: parked.
  auto parked = track_with_centers(
      {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}, 4.5, 1.8, 1.5);
  CHECK_FALSE(classify_track(parked, cfg).moving);

  // Zero-length trajectory is always static.
  CHECK_FALSE(classify_track(track_with_centers({{5, 5, 0}}), cfg).moving);

  // Determinism: same history, same verdict.
  const auto again = classify_track(moving, cfg);
  CHECK(again.moving == v1.moving);
  CHECK(again.trajectory_length == v1.trajectory_length);
}

TEST_CASE("max side is taken over the whole history") {
  Track t = track_with_centers({{0, 0, 0}, {3, 0, 0}});
  t.history[0].world_box.length = 10.0;  // partial view later shrinks
  t.history[1].world_box.length = 2.0;
  const auto v = classify_track(t, {});
  CHECK(v.max_side == doctest::Approx(10.0));
  CHECK_FALSE(v.moving);  // 3 m < 10 m
}

TEST_CASE("paint_labels marks points inside moving boxes only") {
  Scan scan;
  scan.points = {{0, 0, 0, 0.f},   // inside moving box
                 {0.4, 0.4, 0.4, 0.f},
                 {5, 5, 5, 0.f},   // outside everything
                 {10, 0, 0, 0.f}}; // inside a static track's box

  std::vector<TrackVerdict> verdicts(2);
  verdicts[0].track_id = 7;
  verdicts[0].moving = true;
  verdicts[1].track_id = 9;
  verdicts[1].moving = false;

  const std::vector<std::pair<int, BoundingBox>> boxes{
      {7, cube_at(0, 0, 0, 1.0)}, {9, cube_at(10, 0, 0, 1.0)}};

  const LabelSet labels = paint_labels(scan, verdicts, boxes);
  CHECK(labels.labels[0] == Label::Moving);
  CHECK(labels.labels[1] == Label::Moving);  // on the inflated boundary
  CHECK(labels.labels[2] == Label::Static);
  CHECK(labels.labels[3] == Label::Static);  // static track box never paints
}

TEST_CASE("no moving tracks paints everything static") {
  Scan scan;
  scan.points = {{0, 0, 0, 0.f}, {1, 1, 1, 0.f}};
  std::vector<TrackVerdict> verdicts(1);
  verdicts[0].track_id = 1;
  verdicts[0].moving = false;
  const auto labels =
      paint_labels(scan, verdicts, {{1, cube_at(0, 0, 0, 10.0)}});
  CHECK(labels.moving_count() == 0);

  // All points inside one moving box paints everything.
  verdicts[0].moving = true;
  const auto all_moving =
      paint_labels(scan, verdicts, {{1, cube_at(0, 0, 0, 10.0)}});
  CHECK(all_moving.moving_count() == scan.points.size());
}

TEST_CASE("moving labels stay inside the union of moving boxes") {
  Scan scan;
  for (int i = 0; i < 100; ++i) {
    scan.points.push_back({0.2 * i - 10.0, 0.1 * i - 5.0, 0.0, 0.f});
  }
  std::vector<TrackVerdict> verdicts(1);
  verdicts[0].track_id = 3;
  verdicts[0].moving = true;
  const auto box = cube_at(0, 0, 0, 2.0);
  const auto labels = paint_labels(scan, verdicts, {{3, box}});
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    if (labels.labels[i] == Label::Moving) {
      CHECK(box.contains(scan.points[i].vec(), kPaintInflation));
    } else {
      CHECK_FALSE(box.contains(scan.points[i].vec(), -1e-9));
    }
  }
}

TEST_SUITE_END();
