#include <doctest.h>

#include <random>

#include "mosal/tracking.hpp"
#include "oracles.hpp"

using namespace mosal;

namespace {

BoundingBox box_at(double x, double y, double z, double l = 4.0, double w = 1.8,
                   double h = 1.5, double yaw = 0.0) {
  BoundingBox b;
  b.center = {x, y, z};
  b.length = l;
  b.width = w;
  b.height = h;
  b.yaw = yaw;
  b.confidence = 1.0;
  b.canonicalize();
  return b;
}

Instance instance_at(double x, double y, double z) {
  Instance inst;
  inst.box = box_at(x, y, z);
  return inst;
}

TrackingConfig zero_noise_config() {
  TrackingConfig cfg;
  cfg.q_pos = cfg.q_vel = cfg.q_ext = 0.0;
  cfg.r_pos = cfg.r_ext = cfg.r_yaw = 0.0;
  return cfg;
}

double min_eigenvalue(const StateCov& cov) {
  Eigen::SelfAdjointEigenSolver<StateCov> es(cov);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_SUITE_BEGIN("tracking");

TEST_CASE("ego compensation basics") {
  const auto box = box_at(1, 0, 0.5);
  const auto same = ego_compensate(box, Transform());
  CHECK(same.center.isApprox(box.center, 1e-12));
  CHECK(same.yaw == doctest::Approx(box.yaw));

  const auto pose = Transform::from_yaw_translation(std::numbers::pi / 2,
                                                    {10.0, 5.0, 0.0});
  const auto moved = ego_compensate(box, pose);
  CHECK(moved.center.x() == doctest::Approx(10.0));
  CHECK(moved.center.y() == doctest::Approx(6.0));
  // Quarter-turn yaw folds back into the canonical interval.
  CHECK(std::abs(std::remainder(moved.yaw - (box.yaw + std::numbers::pi / 2),
                                std::numbers::pi / 2)) < 1e-9);
}

TEST_CASE("static object stays put in world frame under a moving ego") {
  const Eigen::Vector3d world_center(12.0, 3.0, 0.75);
  for (int t = 0; t < 5; ++t) {
    const auto pose =
        Transform::from_yaw_translation(0.1 * t, {2.0 * t, 0.0, 0.0});
    BoundingBox sensor_box = box_at(0, 0, 0);
    sensor_box.center = pose.inverse().apply(world_center);
    sensor_box.yaw = -pose.yaw();
    sensor_box.canonicalize();
    const auto world = ego_compensate(sensor_box, pose);
    CHECK((world.center - world_center).norm() < 1e-9);
  }
}

TEST_CASE("predict moves the center by velocity * dt") {
  TrackingConfig cfg;
  TrackState s = init_track_state(box_at(0, 0, 0), cfg);
  s.mean(3) = 1.0;  // vx
  const TrackState next = predict(s, 1.0, cfg);
  CHECK(next.mean(0) == doctest::Approx(1.0));
  CHECK(next.mean(3) == doctest::Approx(1.0));
  CHECK(next.mean(6) == doctest::Approx(s.mean(6)));
  CHECK(next.mean(9) == doctest::Approx(s.mean(9)));
}

TEST_CASE("zero velocity leaves the mean, covariance grows by Q") {
  TrackingConfig cfg;
  TrackState s = init_track_state(box_at(1, 2, 3), cfg);
  const TrackState next = predict(s, cfg.dt, cfg);
  CHECK((next.mean - s.mean).norm() < 1e-12);
  CHECK(next.cov(9, 9) == doctest::Approx(s.cov(9, 9) + cfg.q_ext));
}

TEST_CASE("two half-steps equal one full step in the mean") {
  TrackingConfig cfg;
  TrackState s = init_track_state(box_at(0, 0, 0), cfg);
  s.mean.segment<3>(3) = Eigen::Vector3d(2.0, -1.0, 0.5);
  const auto once = predict(s, 1.0, cfg);
  const auto twice = predict(predict(s, 0.5, cfg), 0.5, cfg);
  CHECK((once.mean - twice.mean).norm() < 1e-12);
}

TEST_CASE("predict rejects non-positive dt") {
  TrackingConfig cfg;
  const TrackState s = init_track_state(box_at(0, 0, 0), cfg);
  CHECK_THROWS_AS(predict(s, 0.0, cfg), ValidationError);
}

TEST_CASE("cost components") {
  const auto a = box_at(0, 0, 0);
  CHECK(cost_components(a, a).c_d == doctest::Approx(0.0));
  CHECK(cost_components(a, a).c_o == doctest::Approx(0.0));
  CHECK(cost_components(a, a).c_v == doctest::Approx(0.0));

  const auto far = box_at(3, 4, 0);
  CHECK(cost_components(a, far).c_d == doctest::Approx(5.0));

  // Volume 1 vs 4.
  const auto small = box_at(0, 0, 0, 1, 1, 1);
  const auto big = box_at(0, 0, 0, 2, 2, 1);
  CHECK(cost_components(small, big).c_v == doctest::Approx(0.75));
}

TEST_CASE("cost matrix combines components linearly") {
  TrackingConfig cfg;  // alpha = (1,1,1)
  const std::vector<BoundingBox> news{box_at(0, 0, 0)};
  const std::vector<BoundingBox> tracked{box_at(0, 0, 0)};
  const auto m = build_cost_matrix(news, tracked, cfg);
  CHECK(m.cost(0, 0) == doctest::Approx(0.0));

  TrackingConfig zero = cfg;
  zero.alpha_d = zero.alpha_o = zero.alpha_v = 0.0;
  const std::vector<BoundingBox> news2{box_at(5, 0, 0)};
  CHECK(build_cost_matrix(news2, tracked, zero).cost(0, 0) ==
        doctest::Approx(0.0));

  TrackingConfig doubled = cfg;
  doubled.alpha_d = doubled.alpha_o = doubled.alpha_v = 2.0;
  const auto m1 = build_cost_matrix(news2, tracked, cfg);
  const auto m2 = build_cost_matrix(news2, tracked, doubled);
  CHECK(m2.cost(0, 0) == doctest::Approx(2.0 * m1.cost(0, 0)));
}

TEST_CASE("hungarian on the 2x2 worked example") {
  Eigen::MatrixXd c(2, 2);
  c << 1, 2, 2, 4;
  // Brute force: 1+4=5 vs 2+2=4, so the anti-diagonal wins.
  const auto a = hungarian_assign(c);
  REQUIRE(a.pairs.size() == 2);
  CHECK(a.pairs[0] == std::pair<int, int>(0, 1));
  CHECK(a.pairs[1] == std::pair<int, int>(1, 0));
  double total = 0.0;
  for (auto [i, j] : a.pairs) total += c(i, j);
  CHECK(total == doctest::Approx(4.0));
}

TEST_CASE("hungarian picks a cheap diagonal") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(4, 4, 10.0);
  for (int i = 0; i < 4; ++i) c(i, i) = 0.1 * i;
  const auto a = hungarian_assign(c);
  REQUIRE(a.pairs.size() == 4);
  for (auto [i, j] : a.pairs) CHECK(i == j);
}

TEST_CASE("hungarian equals brute force on random matrices up to 8x8") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 8);
  std::uniform_int_distribution<int> q(0, 1023);
  for (int trial = 0; trial < 300; ++trial) {
    const int rows = dim(rng);
    const int cols = dim(rng);
    Eigen::MatrixXd c(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) c(i, j) = q(rng) / 64.0;
    }
    const auto a = hungarian_assign(c);
    CHECK(a.pairs.size() ==
          static_cast<std::size_t>(std::min(rows, cols)));
    double total = 0.0;
    for (auto [i, j] : a.pairs) total += c(i, j);
    CHECK(total == oracles::brute_force_assignment(c));

    // One-to-one: no row or column twice.
    std::vector<int> ri, ci;
    for (auto [i, j] : a.pairs) {
      ri.push_back(i);
      ci.push_back(j);
    }
    std::sort(ri.begin(), ri.end());
    std::sort(ci.begin(), ci.end());
    CHECK(std::adjacent_find(ri.begin(), ri.end()) == ri.end());
    CHECK(std::adjacent_find(ci.begin(), ci.end()) == ci.end());
  }
}

TEST_CASE("scaling all weights leaves the assignment unchanged") {
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  TrackingConfig cfg;
  TrackingConfig scaled = cfg;
  scaled.alpha_d *= 4.0;
  scaled.alpha_o *= 4.0;
  scaled.alpha_v *= 4.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<BoundingBox> news, tracked;
    for (int i = 0; i < 5; ++i) news.push_back(box_at(u(rng), u(rng), 0.75));
    for (int i = 0; i < 6; ++i) tracked.push_back(box_at(u(rng), u(rng), 0.75));
    const auto a = hungarian_assign(build_cost_matrix(news, tracked, cfg).cost);
    const auto b =
        hungarian_assign(build_cost_matrix(news, tracked, scaled).cost);
    CHECK(a.pairs == b.pairs);
  }
}

TEST_CASE("gating follows the Flag_add disjunction") {
  TrackingConfig cfg;  // T_d=2, T_o=0.95, T_v=0.7
  CHECK(gate_rejects({2.5, 0.0, 0.0}, cfg));       // distance alone trips it
  CHECK_FALSE(gate_rejects({0.5, 0.3, 0.2}, cfg));  // all below thresholds
  CHECK(gate_rejects({0.5, 0.96, 0.2}, cfg));
  CHECK(gate_rejects({0.5, 0.3, 0.71}, cfg));
}

TEST_CASE("perfect measurement with zero noise pins the posterior") {
  const TrackingConfig cfg = zero_noise_config();
  TrackState s = init_track_state(box_at(0, 0, 0), cfg);
  const TrackState pred = predict(s, cfg.dt, cfg);
  const auto meas = box_at(0.35, -0.1, 0.02);
  const TrackState post = kalman_update(pred, meas, cfg);
  CHECK((post.center() - meas.center).norm() < 1e-9);
  CHECK(post.mean(6) == doctest::Approx(meas.length));
}

TEST_CASE("noiseless constant velocity is recovered after 2 updates") {
  const TrackingConfig cfg = zero_noise_config();
  const Eigen::Vector3d v(3.0, -1.0, 0.0);
  const Eigen::Vector3d c0(5.0, 2.0, 0.75);

  TrackState s = init_track_state(box_at(c0.x(), c0.y(), c0.z()), cfg);
  for (int k = 1; k <= 2; ++k) {
    const Eigen::Vector3d truth = c0 + v * (k * cfg.dt);
    s = predict(s, cfg.dt, cfg);
    s = kalman_update(s, box_at(truth.x(), truth.y(), truth.z()), cfg);
  }
  const Eigen::Vector3d expect = c0 + v * (2 * cfg.dt);
  CHECK((s.center() - expect).norm() < 1e-6);
  CHECK((s.velocity() - v).norm() < 1e-6);

  // And the filter now tracks the motion: predict hits the next truth.
  const TrackState ahead = predict(s, cfg.dt, cfg);
  CHECK((ahead.center() - (c0 + v * (3 * cfg.dt))).norm() < 1e-6);
}

TEST_CASE("static object speed converges under default noise") {
  TrackingConfig cfg;
  TrackState s = init_track_state(box_at(8.0, -3.0, 0.75), cfg);
  for (int k = 0; k < 5; ++k) {
    s = predict(s, cfg.dt, cfg);
    s = kalman_update(s, box_at(8.0, -3.0, 0.75), cfg);
  }
  CHECK(s.speed() < 0.1);
}

TEST_CASE("covariance stays symmetric PSD through random updates") {
  TrackingConfig cfg;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  TrackState s = init_track_state(box_at(0, 0, 0.75), cfg);
  for (int k = 0; k < 50; ++k) {
    s = predict(s, cfg.dt, cfg);
    CHECK((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(min_eigenvalue(s.cov) >= -1e-9);
    s = kalman_update(s, box_at(u(rng), u(rng), 0.75 + 0.1 * u(rng)), cfg);
    CHECK((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(min_eigenvalue(s.cov) >= -1e-9);
  }
}

TEST_CASE("yaw measurements wrap to the nearest branch") {
  TrackingConfig cfg;
  TrackState s = init_track_state(box_at(0, 0, 0, 4.0, 1.8, 1.5, 1.4), cfg);
  // Canonical measurement flips to -pi/2 + 1.4 at the boundary; the update
  // must not see a huge innovation.
  auto meas = box_at(0, 0, 0, 4.0, 1.8, 1.5, 1.4 - std::numbers::pi);
  const TrackState post = kalman_update(predict(s, cfg.dt, cfg), meas, cfg);
  CHECK(std::abs(post.mean(9) - 1.4) < 0.1);
}

TEST_CASE("tracker keeps one id through an occlusion gap") {
  TrackingConfig cfg;  // n_old = 5
  Tracker tracker(cfg);
  const Transform identity;

  int id0 = -1;
  int scan = 0;
  for (; scan < 5; ++scan) {
    const auto ids = tracker.step(
        scan, {instance_at(scan * 0.2, 0.0, 0.75)}, identity);
    REQUIRE(ids.size() == 1);
    if (scan == 0) {
      id0 = ids[0];
    } else {
      CHECK(ids[0] == id0);
    }
  }
  for (int gap = 0; gap < 3; ++gap, ++scan) {
    const auto ids = tracker.step(scan, {}, identity);
    CHECK(ids.empty());
  }
  const auto ids = tracker.step(scan, {instance_at(scan * 0.2, 0.0, 0.75)},
                                identity);
  REQUIRE(ids.size() == 1);
  CHECK(ids[0] == id0);
}

TEST_CASE("tracks retire after n_old missed scans") {
  TrackingConfig cfg;
  cfg.n_old = 5;
  Tracker tracker(cfg);
  const Transform identity;
  tracker.step(0, {instance_at(0, 0, 0.75)}, identity);
  for (int scan = 1; scan <= 5; ++scan) {
    tracker.step(scan, {}, identity);
    CHECK(tracker.live().size() == 1);  // still matchable
  }
  tracker.step(6, {}, identity);
  CHECK(tracker.live().empty());
  REQUIRE(tracker.finalized().size() == 1);
  CHECK(tracker.finalized()[0].frames_since_seen == 6);
}

TEST_CASE("gate rejection spawns a new track and coasts the old one") {
  TrackingConfig cfg;
  Tracker tracker(cfg);
  const Transform identity;
  const auto first = tracker.step(0, {instance_at(0, 0, 0.75)}, identity);
  // Far beyond T_d = 2 m: Hungarian still pairs them (only option), the
  // gate must split them apart.
  const auto second = tracker.step(1, {instance_at(30, 0, 0.75)}, identity);
  CHECK(second[0] != first[0]);
  CHECK(tracker.live().size() == 2);
  int coasting = 0;
  for (const auto& t : tracker.live()) {
    coasting += t.frames_since_seen > 0 ? 1 : 0;
  }
  CHECK(coasting == 1);
}

TEST_CASE("never matched instance becomes a singleton finalized track") {
  TrackingConfig cfg;
  cfg.n_old = 2;
  Tracker tracker(cfg);
  const Transform identity;
  tracker.step(0, {instance_at(0, 0, 0.75)}, identity);
  for (int scan = 1; scan <= 3; ++scan) tracker.step(scan, {}, identity);
  tracker.finish();
  REQUIRE(tracker.finalized().size() == 1);
  CHECK(tracker.finalized()[0].history.size() == 1);
}

TEST_SUITE_END();
