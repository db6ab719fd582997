#include "adpipe/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "adpipe/error.hpp"

namespace adpipe {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail(ErrorKind::ParseError, "invalid value for '" + key + "': '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &pos);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (pos != value.size() || !std::isfinite(out)) bad_value(key, value);
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(value, &pos);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (pos != value.size()) bad_value(key, value);
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  if (!value.empty() && value[0] == '-') bad_value(key, value);
  std::size_t pos = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(value, &pos);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (pos != value.size()) bad_value(key, value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

std::vector<int> parse_labels(const std::string& key, const std::string& value) {
  std::vector<int> labels;
  if (trim(value).empty()) return labels;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const long long v = parse_int(key, item);
    if (v < 0 || v > 255) bad_value(key, item);
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

FocalMode parse_focal_mode(const std::string& key, const std::string& value) {
  if (value == "fixed") return FocalMode::Fixed;
  if (value == "estimate") return FocalMode::Estimate;
  if (value == "auto") return FocalMode::Auto;
  bad_value(key, value);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

PipelineConfig parse_config_stream(std::istream& in, const std::string& origin) {
  PipelineConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3)
        fail(ErrorKind::ParseError,
             origin + " line " + std::to_string(line_no) + ": malformed section header");
      continue;  // sections only group keys visually; the key space is flat
    }
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::ParseError,
           origin + " line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty())
      fail(ErrorKind::ParseError,
           origin + " line " + std::to_string(line_no) + ": empty key");
    try {
      set_config_value(cfg, key, value);
    } catch (const Error& e) {
      fail(e.kind(), origin + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  try {
    validate_config(cfg);
  } catch (const Error& e) {
    fail(e.kind(), origin + ": " + e.what());
  }
  return cfg;
}

}  // namespace

const char* to_string(FocalMode mode) {
  switch (mode) {
    case FocalMode::Fixed: return "fixed";
    case FocalMode::Estimate: return "estimate";
    case FocalMode::Auto: return "auto";
  }
  return "?";
}

void set_config_value(PipelineConfig& cfg, const std::string& key,
                      const std::string& value) {
  if (key == "frames_dir") {
    cfg.frames_dir = value;
  } else if (key == "masks_dir") {
    cfg.masks_dir = value;
  } else if (key == "depths_dir") {
    cfg.depths_dir = value;
  } else if (key == "asset") {
    cfg.asset = value;
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "scale") {
    cfg.scale = parse_double(key, value);
  } else if (key == "ransac_tolerance") {
    cfg.ransac_tolerance = parse_double(key, value);
  } else if (key == "ransac_iterations") {
    cfg.ransac_iterations = static_cast<int>(parse_int(key, value));
  } else if (key == "focal_mode") {
    cfg.focal_mode = parse_focal_mode(key, value);
  } else if (key == "focal") {
    cfg.focal = parse_double(key, value);
  } else if (key == "seed_stride") {
    cfg.seed_stride = static_cast<int>(parse_int(key, value));
  } else if (key == "binary_mask") {
    cfg.binary_mask = parse_bool(key, value);
  } else if (key == "crowd_labels") {
    cfg.crowd_labels = parse_labels(key, value);
  } else if (key == "margin") {
    cfg.margin = parse_double(key, value);
  } else if (key == "alpha") {
    cfg.alpha = parse_double(key, value);
  } else if (key == "radius") {
    cfg.radius = parse_double(key, value);
  } else if (key == "max_suspended") {
    cfg.max_suspended = static_cast<int>(parse_int(key, value));
  } else if (key == "shot_threshold") {
    cfg.shot_threshold = parse_double(key, value);
  } else if (key == "rng_seed") {
    cfg.rng_seed = parse_u64(key, value);
  } else {
    fail(ErrorKind::ParseError, "unknown key '" + key + "'");
  }
}

void validate_config(const PipelineConfig& cfg) {
  if (cfg.scale <= 0.0) fail(ErrorKind::ParseError, "scale must be positive");
  if (cfg.ransac_tolerance <= 0.0)
    fail(ErrorKind::ParseError, "ransac_tolerance must be positive");
  if (cfg.ransac_iterations <= 0)
    fail(ErrorKind::ParseError, "ransac_iterations must be positive");
  if (cfg.focal < 0.0) fail(ErrorKind::ParseError, "focal must be non-negative");
  if (cfg.focal_mode == FocalMode::Fixed && cfg.focal <= 0.0)
    fail(ErrorKind::ParseError, "focal_mode=fixed requires a positive focal");
  if (cfg.seed_stride <= 0) fail(ErrorKind::ParseError, "seed_stride must be positive");
  if (!cfg.binary_mask && cfg.crowd_labels.empty())
    fail(ErrorKind::ParseError, "binary_mask=false requires crowd_labels");
  if (!(cfg.margin >= 0.0 && cfg.margin < 0.5))
    fail(ErrorKind::ParseError, "margin must lie in [0, 0.5)");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
    fail(ErrorKind::ParseError, "alpha must lie in (0, 1]");
  if (cfg.radius <= 0.0) fail(ErrorKind::ParseError, "radius must be positive");
  if (cfg.max_suspended <= 0)
    fail(ErrorKind::ParseError, "max_suspended must be positive");
  if (cfg.shot_threshold <= 0.0)
    fail(ErrorKind::ParseError, "shot_threshold must be positive");
}

PipelineConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config '" + path + "'");
  return parse_config_stream(in, path);
}

PipelineConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config_stream(in, "<config>");
}

std::string serialize_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "frames_dir=" << cfg.frames_dir << "\n";
  out << "masks_dir=" << cfg.masks_dir << "\n";
  out << "depths_dir=" << cfg.depths_dir << "\n";
  out << "asset=" << cfg.asset << "\n";
  out << "output_dir=" << cfg.output_dir << "\n";
  out << "scale=" << format_double(cfg.scale) << "\n";
  out << "ransac_tolerance=" << format_double(cfg.ransac_tolerance) << "\n";
  out << "ransac_iterations=" << cfg.ransac_iterations << "\n";
  out << "focal_mode=" << to_string(cfg.focal_mode) << "\n";
  out << "focal=" << format_double(cfg.focal) << "\n";
  out << "seed_stride=" << cfg.seed_stride << "\n";
  out << "binary_mask=" << (cfg.binary_mask ? "true" : "false") << "\n";
  out << "crowd_labels=";
  for (std::size_t i = 0; i < cfg.crowd_labels.size(); ++i) {
    if (i) out << ",";
    out << cfg.crowd_labels[i];
  }
  out << "\n";
  out << "margin=" << format_double(cfg.margin) << "\n";
  out << "alpha=" << format_double(cfg.alpha) << "\n";
  out << "radius=" << format_double(cfg.radius) << "\n";
  out << "max_suspended=" << cfg.max_suspended << "\n";
  out << "shot_threshold=" << format_double(cfg.shot_threshold) << "\n";
  out << "rng_seed=" << cfg.rng_seed << "\n";
  return out.str();
}

void apply_env_overrides(PipelineConfig& cfg) {
  static const char* keys[] = {
      "frames_dir", "masks_dir",    "depths_dir",       "asset",
      "output_dir", "scale",        "ransac_tolerance", "ransac_iterations",
      "focal_mode", "focal",        "seed_stride",      "binary_mask",
      "crowd_labels", "margin",     "alpha",            "radius",
      "max_suspended", "shot_threshold", "rng_seed",
  };
  for (const char* key : keys) {
    std::string env_name = "ADPIPE_";
    for (const char* p = key; *p; ++p)
      env_name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(*p))));
    const char* value = std::getenv(env_name.c_str());
    if (!value) continue;
    try {
      set_config_value(cfg, key, value);
    } catch (const Error& e) {
      fail(e.kind(), env_name + ": " + e.what());
    }
  }
}

TrackingConfig tracking_config(const PipelineConfig& cfg) {
  TrackingConfig tcfg;
  tcfg.alpha = cfg.alpha;
  tcfg.radius = cfg.radius;
  tcfg.max_suspended = cfg.max_suspended;
  tcfg.shot_threshold = cfg.shot_threshold;
  return tcfg;
}

}  // namespace adpipe
