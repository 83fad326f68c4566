#include "mosal/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace mosal {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ValidationError("config key " + key + ": bad number '" + v + "'");
  }
  if (used != v.size()) {
    throw ValidationError("config key " + key + ": trailing junk in '" + v + "'");
  }
  return out;
}

int to_int(const std::string& v, const std::string& key) {
  const double d = to_double(v, key);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d) {
    throw ValidationError("config key " + key + ": expected an integer");
  }
  return i;
}

struct KeyDef {
  std::string key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

std::vector<KeyDef> make_registry() {
  std::vector<KeyDef> defs;
  auto add = [&](const char* key, auto setter, auto getter) {
    defs.push_back({key, setter, getter});
  };

#define MOSAL_DOUBLE_KEY(name, field)                                   \
  add(                                                                  \
      name,                                                             \
      [](PipelineConfig& c, const std::string& v) {                     \
        c.field = to_double(v, name);                                   \
      },                                                                \
      [](const PipelineConfig& c) { return fmt_double(c.field); })
#define MOSAL_INT_KEY(name, field)                                        \
  add(                                                                    \
      name,                                                               \
      [](PipelineConfig& c, const std::string& v) {                       \
        c.field = to_int(v, name);                                        \
      },                                                                  \
      [](const PipelineConfig& c) { return std::to_string(c.field); })

  MOSAL_DOUBLE_KEY("removal.r_voi", removal.r_voi);
  MOSAL_INT_KEY("removal.n_rings", removal.n_rings);
  MOSAL_INT_KEY("removal.n_sectors", removal.n_sectors);
  MOSAL_DOUBLE_KEY("removal.tau_ratio", removal.tau_ratio);
  MOSAL_DOUBLE_KEY("removal.h_min", removal.h_min);
  MOSAL_DOUBLE_KEY("removal.d_ground", removal.d_ground);
  MOSAL_DOUBLE_KEY("removal.ground_max_tilt_deg", removal.ground_max_tilt_deg);
  MOSAL_DOUBLE_KEY("removal.map_voxel", removal.map_voxel);
  MOSAL_INT_KEY("removal.ransac_iters", removal.ransac_iters);

  add(
      "clustering.eps_ladder",
      [](PipelineConfig& c, const std::string& v) {
        std::istringstream ss(v);
        std::vector<double> ladder;
        std::string tok;
        while (ss >> tok) ladder.push_back(to_double(tok, "clustering.eps_ladder"));
        c.clustering.eps_ladder = std::move(ladder);
      },
      [](const PipelineConfig& c) {
        std::string out;
        for (std::size_t i = 0; i < c.clustering.eps_ladder.size(); ++i) {
          if (i) out += ' ';
          out += fmt_double(c.clustering.eps_ladder[i]);
        }
        return out;
      });
  MOSAL_INT_KEY("clustering.min_pts", clustering.min_pts);
  MOSAL_INT_KEY("clustering.n_min", clustering.n_min);
  MOSAL_DOUBLE_KEY("clustering.t_size", clustering.t_size);

  MOSAL_DOUBLE_KEY("tracking.dt", tracking.dt);
  MOSAL_DOUBLE_KEY("tracking.alpha_d", tracking.alpha_d);
  MOSAL_DOUBLE_KEY("tracking.alpha_o", tracking.alpha_o);
  MOSAL_DOUBLE_KEY("tracking.alpha_v", tracking.alpha_v);
  MOSAL_DOUBLE_KEY("tracking.t_d", tracking.t_d);
  MOSAL_DOUBLE_KEY("tracking.t_o", tracking.t_o);
  MOSAL_DOUBLE_KEY("tracking.t_v", tracking.t_v);
  MOSAL_INT_KEY("tracking.n_old", tracking.n_old);
  MOSAL_DOUBLE_KEY("tracking.q_pos", tracking.q_pos);
  MOSAL_DOUBLE_KEY("tracking.q_vel", tracking.q_vel);
  MOSAL_DOUBLE_KEY("tracking.q_ext", tracking.q_ext);
  MOSAL_DOUBLE_KEY("tracking.r_pos", tracking.r_pos);
  MOSAL_DOUBLE_KEY("tracking.r_ext", tracking.r_ext);
  MOSAL_DOUBLE_KEY("tracking.r_yaw", tracking.r_yaw);
  MOSAL_DOUBLE_KEY("tracking.init_vel_var", tracking.init_vel_var);

  add(
      "labeling.trajectory",
      [](PipelineConfig& c, const std::string& v) {
        if (v == "path") {
          c.labeling.mode = LabelingConfig::TrajectoryMode::PathLength;
        } else if (v == "displacement") {
          c.labeling.mode = LabelingConfig::TrajectoryMode::Displacement;
        } else {
          throw ValidationError(
              "labeling.trajectory must be 'path' or 'displacement'");
        }
      },
      [](const PipelineConfig& c) {
        return c.labeling.mode == LabelingConfig::TrajectoryMode::PathLength
                   ? std::string("path")
                   : std::string("displacement");
      });

  add(
      "pipeline.threads",
      [](PipelineConfig& c, const std::string& v) {
        const int n = to_int(v, "pipeline.threads");
        if (n < 0) throw ValidationError("pipeline.threads must be >= 0");
        c.threads = static_cast<unsigned>(n);
      },
      [](const PipelineConfig& c) { return std::to_string(c.threads); });
  MOSAL_DOUBLE_KEY("cleanmap.voxel", cleanmap_voxel);

#undef MOSAL_DOUBLE_KEY
#undef MOSAL_INT_KEY
  return defs;
}

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> defs = make_registry();
  return defs;
}

const KeyDef* find_key(const std::string& key) {
  for (const auto& def : registry()) {
    if (def.key == key) return &def;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string env_name_for(const std::string& key) {
  std::string name = kEnvPrefix;
  for (char c : key) {
    if (c == '.') {
      name += "__";
    } else {
      name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  return name;
}

}  // namespace

void PipelineConfig::validate() const {
  const auto& r = removal;
  if (r.r_voi <= 0.0) throw ValidationError("removal.r_voi must be > 0");
  if (r.n_rings < 1 || r.n_sectors < 1) {
    throw ValidationError("removal grid needs at least 1 ring and 1 sector");
  }
  if (!(r.tau_ratio > 0.0) || r.tau_ratio > 1.0) {
    throw ValidationError("removal.tau_ratio must be in (0, 1]");
  }
  if (r.h_min < 0.0) throw ValidationError("removal.h_min must be >= 0");
  if (r.d_ground <= 0.0) throw ValidationError("removal.d_ground must be > 0");
  if (r.ground_max_tilt_deg <= 0.0 || r.ground_max_tilt_deg > 90.0) {
    throw ValidationError("removal.ground_max_tilt_deg must be in (0, 90]");
  }
  if (r.map_voxel < 0.0) throw ValidationError("removal.map_voxel must be >= 0");
  if (r.ransac_iters < 1) {
    throw ValidationError("removal.ransac_iters must be >= 1");
  }

  const auto& c = clustering;
  if (c.eps_ladder.empty()) {
    throw ValidationError("clustering.eps_ladder must not be empty");
  }
  for (double e : c.eps_ladder) {
    if (e <= 0.0) throw ValidationError("clustering eps values must be > 0");
  }
  if (!std::is_sorted(c.eps_ladder.rbegin(), c.eps_ladder.rend())) {
    throw ValidationError("clustering.eps_ladder must be sorted descending");
  }
  if (c.min_pts < 1) throw ValidationError("clustering.min_pts must be >= 1");
  if (c.n_min < 1) throw ValidationError("clustering.n_min must be >= 1");
  if (c.t_size <= 0.0) throw ValidationError("clustering.t_size must be > 0");

  const auto& t = tracking;
  if (t.dt <= 0.0) throw ValidationError("tracking.dt must be > 0");
  if (t.alpha_d < 0.0 || t.alpha_o < 0.0 || t.alpha_v < 0.0) {
    throw ValidationError("tracking weights must be >= 0");
  }
  if (t.t_d <= 0.0 || t.t_o <= 0.0 || t.t_v <= 0.0) {
    throw ValidationError("tracking gates must be > 0");
  }
  if (t.n_old < 0) throw ValidationError("tracking.n_old must be >= 0");
  for (double v : {t.q_pos, t.q_vel, t.q_ext, t.r_pos, t.r_ext, t.r_yaw,
                   t.init_vel_var}) {
    if (v < 0.0) throw ValidationError("tracking noise terms must be >= 0");
  }
  if (cleanmap_voxel < 0.0) {
    throw ValidationError("cleanmap.voxel must be >= 0");
  }
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream stream(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const KeyDef* def = find_key(key);
    if (!def) {
      throw ValidationError("unknown config key '" + key + "' (line " +
                            std::to_string(line_no) + ")");
    }
    def->set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_config_override(PipelineConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ValidationError("override '" + assignment + "' needs key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const KeyDef* def = find_key(key);
  if (!def) throw ValidationError("unknown config key '" + key + "'");
  def->set(cfg, value);
}

std::string serialize_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& def : registry()) {
    out += def.key;
    out += " = ";
    out += def.get(cfg);
    out += '\n';
  }
  return out;
}

void apply_env_overrides(PipelineConfig& cfg) {
  for (const auto& def : registry()) {
    const std::string name = env_name_for(def.key);
    if (const char* value = std::getenv(name.c_str())) {
      def.set(cfg, value);
    }
  }
  cfg.validate();
}

}  // namespace mosal
