// Command-line front end for the auto-labeling pipeline:
//   mosal simulate <scene> <out_dir>      synthesize a labeled sequence
//   mosal label <scan_dir> ...            label every scan moving/static
//   mosal eval <pred_dir> <truth_dir>     score labels against ground truth
//   mosal clean-map <scan_dir> ...        aggregate a static-only map

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "mosal/dataset_io.hpp"
#include "mosal/parallel.hpp"
#include "mosal/pipeline.hpp"
#include "mosal/synthetic.hpp"

namespace {

struct ConfigArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  int threads = -1;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_file,
                  "Pipeline config file (key = value lines)");
  cmd->add_option("--set", args.overrides,
                  "Inline config override, e.g. --set tracking.t_d=3");
  cmd->add_option("--threads", args.threads, "Worker threads (0 = all cores)");
}

mosal::PipelineConfig resolve_config(const ConfigArgs& args) {
  mosal::PipelineConfig cfg;
  if (!args.config_file.empty()) {
    cfg = mosal::load_config(args.config_file);
  }
  mosal::apply_env_overrides(cfg);
  for (const auto& assignment : args.overrides) {
    mosal::apply_config_override(cfg, assignment);
  }
  if (args.threads >= 0) cfg.threads = static_cast<unsigned>(args.threads);
  cfg.validate();
  return cfg;
}

std::vector<mosal::Scan> read_scan_dir(const std::string& dir,
                                       unsigned threads) {
  const auto files = mosal::list_scan_files(dir);
  if (files.empty()) {
    throw mosal::ValidationError("no .bin scans in " + dir);
  }
  std::vector<mosal::Scan> scans(files.size());
  mosal::parallel_for(files.size(), threads, [&](std::size_t i) {
    scans[i] = mosal::read_scan(files[i], static_cast<int>(i));
  });
  return scans;
}

int cmd_label(const std::string& scan_dir, const std::string& poses_path,
              const std::string& calib_path, const std::string& out_dir,
              const std::string& cache_dir, const ConfigArgs& cargs) {
  const mosal::PipelineConfig cfg = resolve_config(cargs);

  std::optional<mosal::Transform> calib;
  if (!calib_path.empty()) calib = mosal::read_calib(calib_path);
  const mosal::PoseSequence poses = mosal::read_poses(poses_path, calib);

  const auto files = mosal::list_scan_files(scan_dir);
  const auto scans = read_scan_dir(scan_dir, cfg.threads);
  if (scans.size() != poses.poses.size()) {
    throw mosal::ValidationError(
        "scan count " + std::to_string(scans.size()) + " != pose count " +
        std::to_string(poses.poses.size()));
  }

  mosal::PipelineOptions options;
  if (!cache_dir.empty()) options.cache_dir = cache_dir;
  const mosal::PipelineResult result =
      mosal::run_pipeline(scans, poses, cfg, options);

  std::filesystem::create_directories(out_dir);
  for (std::size_t t = 0; t < scans.size(); ++t) {
    const auto name = files[t].stem().string() + ".label";
    mosal::write_labels(result.labels[t],
                        std::filesystem::path(out_dir) / name);
  }
  const std::string summary = result.summary();
  std::ofstream(std::filesystem::path(out_dir) / "summary.txt") << summary;
  std::cout << summary;
  return 0;
}

int cmd_eval(const std::string& pred_dir, const std::string& truth_dir) {
  const auto pred_files = mosal::list_label_files(pred_dir);
  const auto truth_files = mosal::list_label_files(truth_dir);
  if (pred_files.size() != truth_files.size()) {
    throw mosal::ValidationError(
        "prediction/truth file count mismatch: " +
        std::to_string(pred_files.size()) + " vs " +
        std::to_string(truth_files.size()));
  }
  if (pred_files.empty()) {
    throw mosal::ValidationError("no .label files to evaluate");
  }
  std::vector<mosal::ConfusionCounts> per_scan;
  per_scan.reserve(pred_files.size());
  for (std::size_t i = 0; i < pred_files.size(); ++i) {
    if (pred_files[i].filename() != truth_files[i].filename()) {
      throw mosal::ValidationError(
          "label file sets differ: " + pred_files[i].filename().string() +
          " vs " + truth_files[i].filename().string());
    }
    const auto pred = mosal::read_labels(pred_files[i]);
    const auto truth = mosal::read_labels(truth_files[i]);
    per_scan.push_back(mosal::confusion_counts(pred, truth));
  }
  const auto report = mosal::sequence_report(per_scan);
  std::cout << mosal::format_report(report);
  return 0;
}

int cmd_simulate(const std::string& scene_path, const std::string& out_dir) {
  const mosal::SceneSpec spec = mosal::load_scene(scene_path);
  const mosal::SyntheticSequence seq = mosal::generate_sequence(spec);
  mosal::write_sequence(seq, out_dir);
  std::size_t total = 0;
  for (const auto& scan : seq.scans) total += scan.points.size();
  std::printf("scans = %zu\npoints = %zu\n", seq.scans.size(), total);
  return 0;
}

int cmd_clean_map(const std::string& scan_dir, const std::string& poses_path,
                  const std::string& calib_path, const std::string& labels_dir,
                  const std::string& out_path, const ConfigArgs& cargs) {
  const mosal::PipelineConfig cfg = resolve_config(cargs);

  std::optional<mosal::Transform> calib;
  if (!calib_path.empty()) calib = mosal::read_calib(calib_path);
  const mosal::PoseSequence poses = mosal::read_poses(poses_path, calib);
  const auto files = mosal::list_scan_files(scan_dir);
  const auto scans = read_scan_dir(scan_dir, cfg.threads);

  std::vector<mosal::LabelSet> labels(scans.size());
  for (std::size_t t = 0; t < scans.size(); ++t) {
    const auto label_path = std::filesystem::path(labels_dir) /
                            (files[t].stem().string() + ".label");
    if (!std::filesystem::exists(label_path)) {
      throw mosal::IoError("missing label file " + label_path.string());
    }
    labels[t] = mosal::read_labels(label_path);
  }
  mosal::clean_map(scans, poses, labels, cfg.cleanmap_voxel, out_path);
  std::printf("cleaned map written to %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automatic moving/static labeling for sequential LiDAR scans"};
  app.require_subcommand(1);

  // label
  auto* label = app.add_subcommand("label", "Label every scan in a directory");
  std::string scan_dir, poses_path, calib_path, out_dir, cache_dir;
  ConfigArgs label_cfg;
  label->add_option("scans", scan_dir, "Directory of .bin scans")->required();
  label->add_option("--poses", poses_path, "poses.txt")->required();
  label->add_option("--calib", calib_path, "calib.txt with a Tr: line");
  label->add_option("--out", out_dir, "Output label directory")->required();
  label->add_option("--cache-dir", cache_dir,
                    "Cache proposals/instances for reruns");
  add_config_options(label, label_cfg);

  // eval
  auto* eval = app.add_subcommand("eval", "Score labels against ground truth");
  std::string pred_dir, truth_dir;
  eval->add_option("pred", pred_dir, "Predicted labels dir")->required();
  eval->add_option("truth", truth_dir, "Ground-truth labels dir")->required();

  // simulate
  auto* simulate =
      app.add_subcommand("simulate", "Generate a synthetic labeled sequence");
  std::string scene_path, sim_out;
  simulate->add_option("scene", scene_path, "Scene spec file")->required();
  simulate->add_option("out", sim_out, "Output dataset directory")->required();

  // clean-map
  auto* clean =
      app.add_subcommand("clean-map", "Aggregate a static-only point map");
  std::string cm_scan_dir, cm_poses, cm_calib, cm_labels, cm_out;
  ConfigArgs clean_cfg;
  clean->add_option("scans", cm_scan_dir, "Directory of .bin scans")->required();
  clean->add_option("--poses", cm_poses, "poses.txt")->required();
  clean->add_option("--calib", cm_calib, "calib.txt with a Tr: line");
  clean->add_option("--labels", cm_labels, "Directory of .label files")
      ->required();
  clean->add_option("--out", cm_out, "Output map file (ASCII x y z)")
      ->required();
  add_config_options(clean, clean_cfg);

  CLI11_PARSE(app, argc, argv);

  try {
    if (label->parsed()) {
      return cmd_label(scan_dir, poses_path, calib_path, out_dir, cache_dir,
                       label_cfg);
    }
    if (eval->parsed()) return cmd_eval(pred_dir, truth_dir);
    if (simulate->parsed()) return cmd_simulate(scene_path, sim_out);
    if (clean->parsed()) {
      return cmd_clean_map(cm_scan_dir, cm_poses, cm_calib, cm_labels, cm_out,
                           clean_cfg);
    }
  } catch (const mosal::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const mosal::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
