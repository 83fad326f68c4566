#include "mosal/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include "mosal/parallel.hpp"

namespace mosal {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::filesystem::path proposal_cache_path(const PipelineOptions& options,
                                          int index) {
  return options.cache_dir / "proposals" / (scan_stem(index) + ".prop");
}

std::filesystem::path instance_cache_path(const PipelineOptions& options,
                                          int index) {
  return options.cache_dir / "instances" / (scan_stem(index) + ".inst");
}

bool load_cached_proposal(const std::filesystem::path& path,
                          std::size_t expected, DynamicProposal& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || count != expected) return false;
  out.flags.assign(expected, 0);
  in.read(reinterpret_cast<char*>(out.flags.data()),
          static_cast<std::streamsize>(expected));
  return static_cast<bool>(in);
}

void store_cached_proposal(const std::filesystem::path& path,
                           const DynamicProposal& proposal) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write cache file " + path.string());
  const auto count = static_cast<std::uint32_t>(proposal.flags.size());
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(proposal.flags.data()),
            static_cast<std::streamsize>(proposal.flags.size()));
}

bool load_cached_instances(const std::filesystem::path& path,
                           std::vector<Instance>& out) {
  std::ifstream in(path);
  if (!in) return false;
  out.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Instance inst;
    double cx, cy, cz;
    unsigned long npts = 0;
    if (std::sscanf(line.c_str(), "%lf %lf %lf %lf %lf %lf %lf %lf %lu", &cx,
                    &cy, &cz, &inst.box.yaw, &inst.box.length, &inst.box.width,
                    &inst.box.height, &inst.box.confidence, &npts) != 9) {
      return false;
    }
    inst.box.center = {cx, cy, cz};
    inst.segment.indices.resize(npts);  // sizes only; members are not needed
    out.push_back(std::move(inst));
  }
  return true;
}

void store_cached_instances(const std::filesystem::path& path,
                            const std::vector<Instance>& instances) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write cache file " + path.string());
  char buf[256];
  for (const auto& inst : instances) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %zu\n",
                  inst.box.center.x(), inst.box.center.y(),
                  inst.box.center.z(), inst.box.yaw, inst.box.length,
                  inst.box.width, inst.box.height, inst.box.confidence,
                  inst.segment.indices.size());
    out << buf;
  }
}

}  // namespace

std::size_t PipelineResult::moving_track_count() const {
  std::size_t n = 0;
  for (const auto& v : verdicts) n += v.moving ? 1 : 0;
  return n;
}

std::string PipelineResult::summary() const {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "scans = %zu\n", labels.size());
  out += buf;
  std::snprintf(buf, sizeof(buf), "proposal_points = %zu\n", proposal_points);
  out += buf;
  std::snprintf(buf, sizeof(buf), "instances = %zu\n", instance_count);
  out += buf;
  std::snprintf(buf, sizeof(buf), "tracks = %zu\n", tracks.size());
  out += buf;
  std::snprintf(buf, sizeof(buf), "moving_tracks = %zu\n",
                moving_track_count());
  out += buf;
  std::snprintf(buf, sizeof(buf), "time_aggregate_s = %.3f\n",
                timings.aggregate_s);
  out += buf;
  std::snprintf(buf, sizeof(buf), "time_proposals_s = %.3f\n",
                timings.proposals_s);
  out += buf;
  std::snprintf(buf, sizeof(buf), "time_clustering_s = %.3f\n",
                timings.clustering_s);
  out += buf;
  std::snprintf(buf, sizeof(buf), "time_tracking_s = %.3f\n",
                timings.tracking_s);
  out += buf;
  std::snprintf(buf, sizeof(buf), "time_painting_s = %.3f\n",
                timings.painting_s);
  out += buf;
  return out;
}

PipelineResult run_pipeline(std::span<const Scan> scans,
                            const PoseSequence& poses,
                            const PipelineConfig& cfg,
                            const PipelineOptions& options) {
  cfg.validate();
  if (scans.empty()) throw ValidationError("no scans to label");
  if (scans.size() != poses.poses.size()) {
    throw ValidationError("scan count " + std::to_string(scans.size()) +
                          " != pose count " +
                          std::to_string(poses.poses.size()));
  }
  const std::size_t n = scans.size();
  const unsigned threads = cfg.threads;
  const bool use_cache = !options.cache_dir.empty();
  if (use_cache) {
    std::filesystem::create_directories(options.cache_dir / "proposals");
    std::filesystem::create_directories(options.cache_dir / "instances");
  }

  PipelineResult result;

  auto t_start = Clock::now();
  const MapCloud map =
      aggregate_map(scans, poses, cfg.removal.map_voxel, threads);
  result.timings.aggregate_s = seconds_since(t_start);

  // Stage 2: coarse dynamic proposals.
  t_start = Clock::now();
  std::vector<DynamicProposal> proposals;
  bool proposals_from_cache = false;
  if (use_cache) {
    proposals.resize(n);
    proposals_from_cache = true;
    for (std::size_t t = 0; t < n && proposals_from_cache; ++t) {
      proposals[t].scan_index = static_cast<int>(t);
      proposals_from_cache = load_cached_proposal(
          proposal_cache_path(options, static_cast<int>(t)),
          scans[t].points.size(), proposals[t]);
    }
  }
  if (!proposals_from_cache) {
    proposals = compute_proposals(scans, poses, map, cfg.removal, threads);
    if (use_cache) {
      for (std::size_t t = 0; t < n; ++t) {
        store_cached_proposal(proposal_cache_path(options, static_cast<int>(t)),
                              proposals[t]);
      }
    }
  }
  for (const auto& p : proposals) result.proposal_points += p.count();
  result.timings.proposals_s = seconds_since(t_start);

  // Stage 3: instances.
  t_start = Clock::now();
  std::vector<std::vector<Instance>> instances(n);
  bool instances_from_cache = false;
  if (use_cache && proposals_from_cache) {
    instances_from_cache = true;
    for (std::size_t t = 0; t < n && instances_from_cache; ++t) {
      instances_from_cache = load_cached_instances(
          instance_cache_path(options, static_cast<int>(t)), instances[t]);
    }
  }
  if (!instances_from_cache) {
    parallel_for(n, threads, [&](std::size_t t) {
      instances[t] = cluster_proposal(scans[t], proposals[t], cfg.clustering);
    });
    if (use_cache) {
      for (std::size_t t = 0; t < n; ++t) {
        store_cached_instances(instance_cache_path(options, static_cast<int>(t)),
                               instances[t]);
      }
    }
  }
  for (const auto& insts : instances) result.instance_count += insts.size();
  result.timings.clustering_s = seconds_since(t_start);

  // Stage 4: tracking, sequential over scans.
  t_start = Clock::now();
  Tracker tracker(cfg.tracking);
  result.scan_boxes.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::vector<int> track_ids =
        tracker.step(static_cast<int>(t), instances[t], poses.poses[t]);
    auto& boxes = result.scan_boxes[t];
    boxes.reserve(instances[t].size());
    for (std::size_t i = 0; i < instances[t].size(); ++i) {
      boxes.emplace_back(track_ids[i], instances[t][i].box);
    }
  }
  tracker.finish();
  result.tracks = tracker.finalized();
  result.timings.tracking_s = seconds_since(t_start);

  // Stage 5: verdicts and painting.
  t_start = Clock::now();
  result.verdicts.reserve(result.tracks.size());
  for (const auto& track : result.tracks) {
    result.verdicts.push_back(classify_track(track, cfg.labeling));
  }
  result.labels.resize(n);
  parallel_for(n, threads, [&](std::size_t t) {
    result.labels[t] =
        paint_labels(scans[t], result.verdicts, result.scan_boxes[t]);
  });
  result.timings.painting_s = seconds_since(t_start);
  return result;
}

void clean_map(std::span<const Scan> scans, const PoseSequence& poses,
               std::span<const LabelSet> labels, double voxel,
               const std::filesystem::path& out_path) {
  if (scans.empty()) throw ValidationError("no scans to aggregate");
  if (scans.size() != poses.poses.size() || scans.size() != labels.size()) {
    throw ValidationError("scan/pose/label count mismatch");
  }
  for (std::size_t t = 0; t < scans.size(); ++t) {
    check_pairing(labels[t], scans[t]);
  }

  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + out_path.string() + " for writing");

  std::unordered_set<std::uint64_t> seen;
  const double inv = voxel > 0.0 ? 1.0 / voxel : 0.0;
  char buf[128];
  for (std::size_t t = 0; t < scans.size(); ++t) {
    const Transform& pose = poses.poses[t];
    const auto& pts = scans[t].points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (labels[t].labels[i] == Label::Moving) continue;
      const Point3 w = pose.apply(pts[i]);
      if (voxel > 0.0) {
        const auto qx = static_cast<std::int64_t>(std::floor(w.x * inv));
        const auto qy = static_cast<std::int64_t>(std::floor(w.y * inv));
        const auto qz = static_cast<std::int64_t>(std::floor(w.z * inv));
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t v : {qx, qy, qz}) {
          h ^= static_cast<std::uint64_t>(v);
          h *= 1099511628211ull;
        }
        if (!seen.insert(h).second) continue;
      }
      std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f\n", w.x, w.y, w.z);
      out << buf;
    }
  }
  if (!out) throw IoError("failed writing " + out_path.string());
}

}  // namespace mosal
