#include "mosal/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mosal {

namespace {

std::vector<char> read_all_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(bytes.data(), size)) {
    throw IoError("failed reading " + path.string());
  }
  return bytes;
}

std::uint32_t load_le_u32(const char* p) {
  const auto b = reinterpret_cast<const unsigned char*>(p);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void store_le_u32(std::uint32_t v, char* p) {
  p[0] = static_cast<char>(v & 0xff);
  p[1] = static_cast<char>((v >> 8) & 0xff);
  p[2] = static_cast<char>((v >> 16) & 0xff);
  p[3] = static_cast<char>((v >> 24) & 0xff);
}

float load_le_f32(const char* p) {
  return std::bit_cast<float>(load_le_u32(p));
}

// SLAM pose files are printed with limited precision; snap a slightly
// denormalized rotation back onto SO(3) so Transform invariants hold exactly.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r,
                               const std::string& what) {
  const double err =
      (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(err < 1e-3) || std::abs(r.determinant() - 1.0) > 1e-3) {
    throw FormatError(what + ": rotation block is not close to SO(3)");
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d q = svd.matrixU() * svd.matrixV().transpose();
  if (q.determinant() < 0.0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    q = u * svd.matrixV().transpose();
  }
  return q;
}

Transform parse_pose_row(const std::vector<double>& v, const std::string& what) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = v[static_cast<std::size_t>(r * 4 + c)];
  }
  if (!m.allFinite()) throw FormatError(what + ": non-finite pose entry");
  m.topLeftCorner<3, 3>() = orthonormalize(m.topLeftCorner<3, 3>(), what);
  return Transform::from_matrix(m);
}

void append_pose_row(const Transform& t, std::string& out) {
  char buf[32];
  const Eigen::Matrix4d& m = t.matrix();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      if (r != 0 || c != 0) out += ' ';
      out += buf;
    }
  }
  out += '\n';
}

}  // namespace

std::size_t LabelSet::moving_count() const {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), Label::Moving));
}

Scan read_scan(const std::filesystem::path& path, int index) {
  const auto bytes = read_all_bytes(path);
  if (bytes.empty()) throw FormatError("empty scan file " + path.string());
  if (bytes.size() % 16 != 0) {
    throw FormatError("scan file size not divisible by 16: " + path.string());
  }
  Scan scan;
  scan.index = index;
  const std::size_t n = bytes.size() / 16;
  scan.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char* p = bytes.data() + i * 16;
    Point3 pt{load_le_f32(p), load_le_f32(p + 4), load_le_f32(p + 8),
              load_le_f32(p + 12)};
    if (!pt.finite()) {
      throw ValidationError("non-finite value at point " + std::to_string(i) +
                            " in " + path.string());
    }
    scan.points.push_back(pt);
  }
  return scan;
}

void write_scan(const Scan& scan, const std::filesystem::path& path) {
  std::vector<char> bytes(scan.points.size() * 16);
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    char* p = bytes.data() + i * 16;
    const auto& pt = scan.points[i];
    store_le_u32(std::bit_cast<std::uint32_t>(static_cast<float>(pt.x)), p);
    store_le_u32(std::bit_cast<std::uint32_t>(static_cast<float>(pt.y)), p + 4);
    store_le_u32(std::bit_cast<std::uint32_t>(static_cast<float>(pt.z)), p + 8);
    store_le_u32(std::bit_cast<std::uint32_t>(pt.intensity), p + 12);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

PoseSequence read_poses(const std::filesystem::path& path,
                        const std::optional<Transform>& calib) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  PoseSequence seq;
  seq.frame =
      calib ? PoseSequence::Frame::CameraWithCalib : PoseSequence::Frame::Lidar;
  std::string line;
  std::size_t line_no = 0;
  const std::optional<Transform> calib_inv =
      calib ? std::optional<Transform>(calib->inverse()) : std::nullopt;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (vals.size() != 12) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 12 pose values, got " +
                        std::to_string(vals.size()));
    }
    Transform t = parse_pose_row(vals, path.string() + ":" +
                                           std::to_string(line_no));
    if (calib) t = (*calib_inv) * t * (*calib);
    seq.poses.push_back(t);
  }
  return seq;
}

void write_poses(const PoseSequence& poses, const std::filesystem::path& path) {
  std::string out;
  for (const auto& t : poses.poses) append_pose_row(t, out);
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << out;
  if (!f) throw IoError("failed writing " + path.string());
}

Transform read_calib(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("Tr:", 0) != 0) continue;
    std::istringstream ss(line.substr(3));
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (vals.size() != 12) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": Tr line needs 12 values, got " +
                        std::to_string(vals.size()));
    }
    return parse_pose_row(vals, path.string() + " Tr");
  }
  throw FormatError("no `Tr:` line in " + path.string());
}

LabelSet read_labels(const std::filesystem::path& path) {
  const auto bytes = read_all_bytes(path);
  if (bytes.size() % 4 != 0) {
    throw FormatError("label file size not divisible by 4: " + path.string());
  }
  LabelSet out;
  const std::size_t n = bytes.size() / 4;
  out.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t raw = load_le_u32(bytes.data() + i * 4);
    const std::uint32_t cls = raw & 0xffffu;
    out.labels.push_back(cls >= kMovingLabelCode ? Label::Moving
                                                 : Label::Static);
  }
  return out;
}

void write_labels(const LabelSet& labels, const std::filesystem::path& path) {
  std::vector<char> bytes(labels.size() * 4);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint32_t code = labels.labels[i] == Label::Moving
                                   ? kMovingLabelCode
                                   : kStaticLabelCode;
    store_le_u32(code, bytes.data() + i * 4);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void check_pairing(const LabelSet& labels, const Scan& scan) {
  if (labels.size() != scan.points.size()) {
    throw ValidationError(
        "label count " + std::to_string(labels.size()) +
        " does not match scan " + std::to_string(scan.index) + " point count " +
        std::to_string(scan.points.size()));
  }
}

namespace {
std::vector<std::filesystem::path> list_by_extension(
    const std::filesystem::path& dir, const std::string& ext) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}
}  // namespace

std::vector<std::filesystem::path> list_scan_files(
    const std::filesystem::path& dir) {
  return list_by_extension(dir, ".bin");
}

std::vector<std::filesystem::path> list_label_files(
    const std::filesystem::path& dir) {
  return list_by_extension(dir, ".label");
}

std::string scan_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

}  // namespace mosal
