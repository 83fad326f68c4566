#include "mosal/evaluation.hpp"

#include <cstdio>

namespace mosal {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  td += o.td;
  fd += o.fd;
  fs += o.fs;
  ts += o.ts;
  return *this;
}

ConfusionCounts confusion_counts(const LabelSet& pred, const LabelSet& truth) {
  if (pred.size() != truth.size()) {
    throw ValidationError("prediction has " + std::to_string(pred.size()) +
                          " labels, truth has " + std::to_string(truth.size()));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.labels[i] == Label::Moving;
    const bool t = truth.labels[i] == Label::Moving;
    if (p && t) {
      ++c.td;
    } else if (p && !t) {
      ++c.fd;
    } else if (!p && t) {
      ++c.fs;
    } else {
      ++c.ts;
    }
  }
  return c;
}

IouResult iou_mos(const ConfusionCounts& c) {
  IouResult r;
  const std::uint64_t denom = c.td + c.fd + c.fs;
  if (denom == 0) {
    r.value = 1.0;
    r.no_moving_points = true;
    return r;
  }
  r.value = static_cast<double>(c.td) / static_cast<double>(denom);
  return r;
}

SequenceReport sequence_report(const std::vector<ConfusionCounts>& per_scan) {
  if (per_scan.empty()) {
    throw ValidationError("sequence report needs at least one scan");
  }
  SequenceReport report;
  report.per_scan = per_scan;
  report.per_scan_iou.reserve(per_scan.size());
  for (const auto& c : per_scan) {
    report.aggregate += c;
    report.per_scan_iou.push_back(iou_mos(c));
  }
  report.aggregate_iou = iou_mos(report.aggregate);
  return report;
}

std::string format_report(const SequenceReport& report) {
  std::string out;
  char line[160];
  out += "scan        td        fd        fs        ts      iou\n";
  for (std::size_t i = 0; i < report.per_scan.size(); ++i) {
    const auto& c = report.per_scan[i];
    std::snprintf(line, sizeof(line),
                  "%04zu %9llu %9llu %9llu %9llu   %.4f%s\n", i,
                  static_cast<unsigned long long>(c.td),
                  static_cast<unsigned long long>(c.fd),
                  static_cast<unsigned long long>(c.fs),
                  static_cast<unsigned long long>(c.ts),
                  report.per_scan_iou[i].value,
                  report.per_scan_iou[i].no_moving_points ? " (no moving)" : "");
    out += line;
  }
  const auto& a = report.aggregate;
  std::snprintf(line, sizeof(line), "td = %llu\nfd = %llu\nfs = %llu\nts = %llu\n",
                static_cast<unsigned long long>(a.td),
                static_cast<unsigned long long>(a.fd),
                static_cast<unsigned long long>(a.fs),
                static_cast<unsigned long long>(a.ts));
  out += line;
  std::snprintf(line, sizeof(line), "iou_mos = %.6f\n",
                report.aggregate_iou.value);
  out += line;
  if (report.aggregate_iou.no_moving_points) {
    out += "no_moving_points = true\n";
  }
  return out;
}

}  // namespace mosal
