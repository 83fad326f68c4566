#include "mosal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

namespace mosal {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic standard normal from a hash: fixed terrain roughness.
double hashed_normal(std::uint64_t key) {
  const std::uint64_t a = splitmix64(key);
  const std::uint64_t b = splitmix64(a);
  const double u1 =
      (static_cast<double>(a >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  const double u2 =
      (static_cast<double>(b >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

struct Polyline {
  std::vector<Eigen::Vector3d> pts;
  std::vector<double> cum;

  explicit Polyline(const std::vector<Eigen::Vector3d>& waypoints)
      : pts(waypoints) {
    cum.assign(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
    }
  }

  double length() const { return cum.empty() ? 0.0 : cum.back(); }

  void at(double s, Eigen::Vector3d& pos, double& heading) const {
    if (pts.size() == 1 || length() <= 0.0) {
      pos = pts.front();
      heading = 0.0;
      return;
    }
    s = std::clamp(s, 0.0, length());
    std::size_t seg = 1;
    while (seg + 1 < pts.size() && cum[seg] < s) ++seg;
    const Eigen::Vector3d d = pts[seg] - pts[seg - 1];
    const double seg_len = d.norm();
    const double t = seg_len > 0.0 ? (s - cum[seg - 1]) / seg_len : 0.0;
    pos = pts[seg - 1] + t * d;
    heading = std::atan2(d.y(), d.x());
  }
};

struct Sample {
  Point3 world;
  int provenance;  // -1 ground, else box id
  bool moving;
};

void sample_face(const Transform& box_pose, const Eigen::Vector3d& ext,
                 int axis, double sign, double density, float intensity,
                 int provenance, bool moving, std::vector<Sample>& out) {
  // The face plane is fixed along `axis`; the two spanning axes are sampled
  // on a centered grid so a static box emits identical points every scan.
  const int ua = (axis + 1) % 3;
  const int va = (axis + 2) % 3;
  const double span_u = ext[ua];
  const double span_v = ext[va];
  const double step = 1.0 / std::sqrt(density);
  const int nu = std::max(1, static_cast<int>(std::ceil(span_u / step)));
  const int nv = std::max(1, static_cast<int>(std::ceil(span_v / step)));
  Eigen::Vector3d local;
  local[axis] = sign * 0.5 * ext[axis];
  for (int iu = 0; iu < nu; ++iu) {
    local[ua] = (-0.5 + (iu + 0.5) / nu) * span_u;
    for (int iv = 0; iv < nv; ++iv) {
      local[va] = (-0.5 + (iv + 0.5) / nv) * span_v;
      const Eigen::Vector3d w = box_pose.apply(local);
      out.push_back({{w.x(), w.y(), w.z(), intensity}, provenance, moving});
    }
  }
}

void sample_box(const BoxSpec& box, const BoxPose& pose, int provenance,
                std::vector<Sample>& out) {
  const Transform t = Transform::from_yaw_translation(pose.yaw, pose.center);
  const bool moving = pose.speed > kMovingSpeedThreshold;
  const float intensity = 0.4f + 0.05f * static_cast<float>(provenance % 8);
  // Four side faces plus the top; the underside is never visible.
  sample_face(t, box.extents, 0, +1.0, box.density, intensity, provenance,
              moving, out);
  sample_face(t, box.extents, 0, -1.0, box.density, intensity, provenance,
              moving, out);
  sample_face(t, box.extents, 1, +1.0, box.density, intensity, provenance,
              moving, out);
  sample_face(t, box.extents, 1, -1.0, box.density, intensity, provenance,
              moving, out);
  sample_face(t, box.extents, 2, +1.0, box.density, intensity, provenance,
              moving, out);
}

}  // namespace

void SceneSpec::validate() const {
  if (n_scans < 1) throw ValidationError("scene needs n_scans >= 1");
  if (dt <= 0.0) throw ValidationError("scene needs dt > 0");
  if (ground.density <= 0.0) throw ValidationError("ground density must be > 0");
  if (ground.min.x() >= ground.max.x() || ground.min.y() >= ground.max.y()) {
    throw ValidationError("ground extent is empty");
  }
  if (sensor.max_range <= 0.0) throw ValidationError("max_range must be > 0");
  if (ego.waypoints.empty()) throw ValidationError("ego needs waypoints");
  if (ego.speed < 0.0) throw ValidationError("ego speed must be >= 0");
  auto check_box = [](const BoxSpec& b, const char* kind) {
    if (b.extents.minCoeff() <= 0.0) {
      throw ValidationError(std::string(kind) + " box extents must be > 0");
    }
    if (b.density <= 0.0) {
      throw ValidationError(std::string(kind) + " box density must be > 0");
    }
    if (b.speed < 0.0) {
      throw ValidationError(std::string(kind) + " box speed must be >= 0");
    }
    if (b.waypoints.empty()) {
      throw ValidationError(std::string(kind) + " box needs waypoints");
    }
  };
  for (const auto& b : static_boxes) check_box(b, "static");
  for (const auto& b : moving_boxes) check_box(b, "moving");
}

BoxPose box_pose_at(const BoxSpec& box, double tau) {
  const Polyline line(box.waypoints);
  BoxPose pose;
  const double s = box.speed * tau;
  double heading = 0.0;
  line.at(s, pose.center, heading);
  if (box.waypoints.size() == 1 || box.speed <= 0.0) {
    pose.yaw = box.yaw;
    pose.speed = 0.0;
  } else {
    pose.yaw = heading;
    pose.speed = s < line.length() ? box.speed : 0.0;  // parked at the end
  }
  return pose;
}

Transform ego_pose_at(const EgoSpec& ego, double tau) {
  const Polyline line(ego.waypoints);
  Eigen::Vector3d pos;
  double heading = 0.0;
  line.at(ego.speed * tau, pos, heading);
  if (ego.waypoints.size() == 1 || ego.speed <= 0.0) heading = ego.yaw;
  return Transform::from_yaw_translation(heading, pos);
}

SyntheticSequence generate_sequence(const SceneSpec& spec) {
  return generate_sequence(spec, spec.n_scans, spec.dt);
}

SyntheticSequence generate_sequence(const SceneSpec& spec, int n_scans,
                                    double dt) {
  if (n_scans < 1) throw ValidationError("n_scans must be >= 1");
  if (dt <= 0.0) throw ValidationError("dt must be > 0");
  spec.validate();

  SyntheticSequence seq;
  seq.scans.resize(static_cast<std::size_t>(n_scans));
  seq.true_poses.poses.resize(static_cast<std::size_t>(n_scans));
  seq.reported_poses.poses.resize(static_cast<std::size_t>(n_scans));
  seq.truth.resize(static_cast<std::size_t>(n_scans));
  seq.provenance.resize(static_cast<std::size_t>(n_scans));

  const double ground_step = 1.0 / std::sqrt(spec.ground.density);

  for (int t = 0; t < n_scans; ++t) {
    const double tau = t * dt;
    const Transform ego = ego_pose_at(spec.ego, tau);
    const Eigen::Vector3d origin = ego.translation();
    const Transform ego_inv = ego.inverse();

    std::mt19937_64 rng(splitmix64(spec.seed ^ (0x5131ull +
                                                static_cast<std::uint64_t>(t) *
                                                    0x100000001b3ull)));
    std::normal_distribution<double> sensor_noise(0.0, spec.sensor.sigma_z);

    std::vector<Sample> samples;

    // Ground patch around the ego, intersected with the configured extent.
    const double r = spec.sensor.max_range;
    const long ix0 = std::lround(
        std::ceil((std::max(spec.ground.min.x(), origin.x() - r)) / ground_step));
    const long ix1 = std::lround(
        std::floor((std::min(spec.ground.max.x(), origin.x() + r)) / ground_step));
    const long iy0 = std::lround(
        std::ceil((std::max(spec.ground.min.y(), origin.y() - r)) / ground_step));
    const long iy1 = std::lround(
        std::floor((std::min(spec.ground.max.y(), origin.y() + r)) / ground_step));
    for (long ix = ix0; ix <= ix1; ++ix) {
      for (long iy = iy0; iy <= iy1; ++iy) {
        const double x = ix * ground_step;
        const double y = iy * ground_step;
        double z = 0.0;
        if (spec.ground.sigma_z > 0.0) {
          z = spec.ground.sigma_z *
              hashed_normal(spec.seed ^
                            (static_cast<std::uint64_t>(ix) * 0x9e3779b1ull) ^
                            (static_cast<std::uint64_t>(iy) * 0x85ebca77ull));
        }
        samples.push_back({{x, y, z, 0.2f}, -1, false});
      }
    }

    const int n_static = static_cast<int>(spec.static_boxes.size());
    for (int b = 0; b < n_static; ++b) {
      const auto& box = spec.static_boxes[b];
      if (box.hidden_at(t)) continue;
      sample_box(box, box_pose_at(box, tau), b, samples);
    }
    for (std::size_t b = 0; b < spec.moving_boxes.size(); ++b) {
      const auto& box = spec.moving_boxes[b];
      if (box.hidden_at(t)) continue;
      sample_box(box, box_pose_at(box, tau), n_static + static_cast<int>(b),
                 samples);
    }

    Scan& scan = seq.scans[static_cast<std::size_t>(t)];
    scan.index = t;
    auto& truth = seq.truth[static_cast<std::size_t>(t)].labels;
    auto& prov = seq.provenance[static_cast<std::size_t>(t)];

    std::vector<Point3> sensor_points;
    std::vector<std::uint8_t> sensor_moving;
    std::vector<int> sensor_prov;
    sensor_points.reserve(samples.size());
    for (const auto& s : samples) {
      const Eigen::Vector3d d = s.world.vec() - origin;
      if (d.norm() > spec.sensor.max_range) continue;
      Point3 p = ego_inv.apply(s.world);
      if (spec.sensor.sigma_z > 0.0) p.z += sensor_noise(rng);
      sensor_points.push_back(p);
      sensor_moving.push_back(s.moving ? 1 : 0);
      sensor_prov.push_back(s.provenance);
    }

    if (spec.sensor.occlusion) {
      // Keep the nearest return per angular bin, preserving input order.
      const double az_res = spec.sensor.az_res_deg * kDegToRad;
      const double el_res = spec.sensor.elev_res_deg * kDegToRad;
      std::unordered_map<std::uint64_t, std::size_t> nearest;
      std::vector<double> range2(sensor_points.size());
      for (std::size_t i = 0; i < sensor_points.size(); ++i) {
        const auto& p = sensor_points[i];
        range2[i] = p.x * p.x + p.y * p.y + p.z * p.z;
        const double az = std::atan2(p.y, p.x);
        const double el =
            std::atan2(p.z, std::sqrt(p.x * p.x + p.y * p.y));
        const auto ai = static_cast<std::int64_t>(std::floor(az / az_res));
        const auto ei = static_cast<std::int64_t>(std::floor(el / el_res));
        const std::uint64_t key =
            static_cast<std::uint64_t>(ai) * 0x100000001b3ull ^
            static_cast<std::uint64_t>(ei);
        auto [it, inserted] = nearest.try_emplace(key, i);
        if (!inserted && range2[i] < range2[it->second]) it->second = i;
      }
      std::vector<char> keep(sensor_points.size(), 0);
      for (const auto& [key, idx] : nearest) keep[idx] = 1;
      std::size_t w = 0;
      for (std::size_t i = 0; i < sensor_points.size(); ++i) {
        if (!keep[i]) continue;
        sensor_points[w] = sensor_points[i];
        sensor_moving[w] = sensor_moving[i];
        sensor_prov[w] = sensor_prov[i];
        ++w;
      }
      sensor_points.resize(w);
      sensor_moving.resize(w);
      sensor_prov.resize(w);
    }

    scan.points = std::move(sensor_points);
    truth.reserve(scan.points.size());
    for (auto m : sensor_moving) {
      truth.push_back(m ? Label::Moving : Label::Static);
    }
    prov = std::move(sensor_prov);

    seq.true_poses.poses[static_cast<std::size_t>(t)] = ego;
    Transform reported = ego;
    if (spec.pose_noise.sigma_t > 0.0 || spec.pose_noise.sigma_yaw_deg > 0.0) {
      std::mt19937_64 noise_rng(splitmix64(
          spec.seed ^ (0xb05eull + static_cast<std::uint64_t>(t) *
                                       0x9e3779b97f4a7c15ull)));
      std::normal_distribution<double> gauss(0.0, 1.0);
      const Eigen::Vector3d dt_noise(
          spec.pose_noise.sigma_t * gauss(noise_rng),
          spec.pose_noise.sigma_t * gauss(noise_rng),
          spec.pose_noise.sigma_t * gauss(noise_rng));
      const double dyaw =
          spec.pose_noise.sigma_yaw_deg * kDegToRad * gauss(noise_rng);
      reported = Transform::from_yaw_translation(
          ego.yaw() + dyaw, ego.translation() + dt_noise);
    }
    seq.reported_poses.poses[static_cast<std::size_t>(t)] = reported;
  }
  return seq;
}

void write_sequence(const SyntheticSequence& seq,
                    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "scans");
  std::filesystem::create_directories(out_dir / "labels");
  for (std::size_t t = 0; t < seq.scans.size(); ++t) {
    const std::string stem = scan_stem(static_cast<int>(t));
    write_scan(seq.scans[t], out_dir / "scans" / (stem + ".bin"));
    write_labels(seq.truth[t], out_dir / "labels" / (stem + ".label"));
  }
  write_poses(seq.reported_poses, out_dir / "poses.txt");
}

namespace {

std::vector<double> parse_numbers(const std::string& text,
                                  const std::string& what) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string token;
  while (ss >> token) {
    if (token == ";") continue;
    try {
      out.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw FormatError("bad number '" + token + "' in " + what);
    }
  }
  return out;
}

std::vector<Eigen::Vector3d> parse_waypoints(const std::string& text,
                                             const std::string& what) {
  std::vector<Eigen::Vector3d> out;
  std::string chunk;
  std::istringstream ss(text);
  while (std::getline(ss, chunk, ';')) {
    const auto nums = parse_numbers(chunk, what);
    if (nums.empty()) continue;
    if (nums.size() != 3) {
      throw FormatError(what + ": waypoints need 3 coordinates each");
    }
    out.emplace_back(nums[0], nums[1], nums[2]);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& what) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError(what + ": expected true/false");
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

SceneSpec parse_scene(const std::string& text) {
  SceneSpec spec;
  spec.ego.waypoints.clear();

  std::string section = "scene";
  BoxSpec* box = nullptr;

  std::istringstream stream(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw FormatError("scene line " + std::to_string(line_no) +
                          ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section == "static_box") {
        spec.static_boxes.emplace_back();
        spec.static_boxes.back().waypoints.clear();
        box = &spec.static_boxes.back();
      } else if (section == "moving_box") {
        spec.moving_boxes.emplace_back();
        spec.moving_boxes.back().waypoints.clear();
        box = &spec.moving_boxes.back();
      } else if (section == "scene" || section == "ground" ||
                 section == "sensor" || section == "pose_noise" ||
                 section == "ego") {
        box = nullptr;
      } else {
        throw FormatError("scene line " + std::to_string(line_no) +
                          ": unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("scene line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string where = "scene line " + std::to_string(line_no);

    auto num = [&](double lo = -1e18) {
      const auto v = parse_numbers(value, where);
      if (v.size() != 1 || v[0] < lo) {
        throw FormatError(where + ": bad value for " + key);
      }
      return v[0];
    };
    auto vec2 = [&]() {
      const auto v = parse_numbers(value, where);
      if (v.size() != 2) throw FormatError(where + ": " + key + " needs 2 values");
      return Eigen::Vector2d(v[0], v[1]);
    };
    auto vec3 = [&]() {
      const auto v = parse_numbers(value, where);
      if (v.size() != 3) throw FormatError(where + ": " + key + " needs 3 values");
      return Eigen::Vector3d(v[0], v[1], v[2]);
    };

    if (section == "scene") {
      if (key == "seed") {
        spec.seed = static_cast<std::uint64_t>(num(0));
      } else if (key == "n_scans") {
        spec.n_scans = static_cast<int>(num(1));
      } else if (key == "dt") {
        spec.dt = num();
      } else {
        throw FormatError(where + ": unknown scene key " + key);
      }
    } else if (section == "ground") {
      if (key == "min") {
        spec.ground.min = vec2();
      } else if (key == "max") {
        spec.ground.max = vec2();
      } else if (key == "density") {
        spec.ground.density = num();
      } else if (key == "sigma_z") {
        spec.ground.sigma_z = num(0);
      } else {
        throw FormatError(where + ": unknown ground key " + key);
      }
    } else if (section == "sensor") {
      if (key == "max_range") {
        spec.sensor.max_range = num();
      } else if (key == "sigma_z") {
        spec.sensor.sigma_z = num(0);
      } else if (key == "occlusion") {
        spec.sensor.occlusion = parse_bool(value, where);
      } else if (key == "az_res_deg") {
        spec.sensor.az_res_deg = num();
      } else if (key == "elev_res_deg") {
        spec.sensor.elev_res_deg = num();
      } else {
        throw FormatError(where + ": unknown sensor key " + key);
      }
    } else if (section == "pose_noise") {
      if (key == "sigma_t") {
        spec.pose_noise.sigma_t = num(0);
      } else if (key == "sigma_yaw_deg") {
        spec.pose_noise.sigma_yaw_deg = num(0);
      } else {
        throw FormatError(where + ": unknown pose_noise key " + key);
      }
    } else if (section == "ego") {
      if (key == "speed") {
        spec.ego.speed = num(0);
      } else if (key == "yaw") {
        spec.ego.yaw = num();
      } else if (key == "waypoints") {
        spec.ego.waypoints = parse_waypoints(value, where);
      } else {
        throw FormatError(where + ": unknown ego key " + key);
      }
    } else {  // static_box / moving_box
      if (key == "extents") {
        box->extents = vec3();
      } else if (key == "density") {
        box->density = num();
      } else if (key == "speed") {
        box->speed = num(0);
      } else if (key == "yaw") {
        box->yaw = num();
      } else if (key == "center") {
        box->waypoints = {vec3()};
      } else if (key == "waypoints") {
        box->waypoints = parse_waypoints(value, where);
      } else if (key == "hidden") {
        const auto v = parse_numbers(value, where);
        if (v.size() != 2) throw FormatError(where + ": hidden needs 2 scans");
        box->hidden_from = static_cast<int>(v[0]);
        box->hidden_to = static_cast<int>(v[1]);
      } else {
        throw FormatError(where + ": unknown box key " + key);
      }
    }
  }
  if (spec.ego.waypoints.empty()) {
    spec.ego.waypoints = {{0.0, 0.0, 1.8}};
  }
  spec.validate();
  return spec;
}

SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str());
}

}  // namespace mosal
