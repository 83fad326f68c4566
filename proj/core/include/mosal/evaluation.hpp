#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mosal/dataset_io.hpp"

namespace mosal {

/// Point counts: true dynamic, false dynamic, false static, true static.
struct ConfusionCounts {
  std::uint64_t td = 0;
  std::uint64_t fd = 0;
  std::uint64_t fs = 0;
  std::uint64_t ts = 0;

  std::uint64_t total() const { return td + fd + fs + ts; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
};

ConfusionCounts confusion_counts(const LabelSet& pred, const LabelSet& truth);

struct IouResult {
  double value = 1.0;
  bool no_moving_points = false;  // TD + FD + FS == 0
};

/// Moving-class IoU: TD / (TD + FD + FS). The degenerate all-static case is
/// defined as 1.0 and flagged.
IouResult iou_mos(const ConfusionCounts& c);

struct SequenceReport {
  std::vector<ConfusionCounts> per_scan;
  std::vector<IouResult> per_scan_iou;
  ConfusionCounts aggregate;  // counts summed before Eq. 9 (micro-average)
  IouResult aggregate_iou;
};

SequenceReport sequence_report(const std::vector<ConfusionCounts>& per_scan);

/// Plain-text table plus machine-readable `key = value` lines.
std::string format_report(const SequenceReport& report);

}  // namespace mosal
