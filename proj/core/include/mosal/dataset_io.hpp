#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mosal/geometry.hpp"

namespace mosal {

enum class Label : std::uint8_t { Static = 0, Moving = 1 };

/// Per-point labels for one scan, positional against the paired scan.
struct LabelSet {
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t moving_count() const;
};

struct PoseSequence {
  enum class Frame { Lidar, CameraWithCalib };
  std::vector<Transform> poses;
  Frame frame = Frame::Lidar;
};

// SemanticKITTI MOS encoding: lower 16 bits of a uint32, 9 = static,
// 251 = moving; any lower-16 value >= 251 reads back as moving.
inline constexpr std::uint32_t kStaticLabelCode = 9;
inline constexpr std::uint32_t kMovingLabelCode = 251;

/// Flat little-endian float32 stream, 4 values (x, y, z, intensity) per point.
Scan read_scan(const std::filesystem::path& path, int index = 0);
void write_scan(const Scan& scan, const std::filesystem::path& path);

/// KITTI odometry poses: 12 whitespace-separated floats per line (row-major
/// 3x4). With a calib Tr, each pose is re-expressed as Tr^-1 * T * Tr.
PoseSequence read_poses(const std::filesystem::path& path,
                        const std::optional<Transform>& calib = std::nullopt);
void write_poses(const PoseSequence& poses, const std::filesystem::path& path);

/// Parses the `Tr:` line of a KITTI calib file.
Transform read_calib(const std::filesystem::path& path);

LabelSet read_labels(const std::filesystem::path& path);
void write_labels(const LabelSet& labels, const std::filesystem::path& path);

/// Rejects a label set whose length does not match the paired scan.
void check_pairing(const LabelSet& labels, const Scan& scan);

/// All `*.bin` (resp. `*.label`) files in a directory, sorted by filename.
std::vector<std::filesystem::path> list_scan_files(
    const std::filesystem::path& dir);
std::vector<std::filesystem::path> list_label_files(
    const std::filesystem::path& dir);

/// `000042` style zero-padded scan file stem.
std::string scan_stem(int index);

}  // namespace mosal
