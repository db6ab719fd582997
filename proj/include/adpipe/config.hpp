#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adpipe/tracking.hpp"

namespace adpipe {

/// How the focal length is obtained for a run.
enum class FocalMode {
  Fixed,     ///< use the configured value as-is
  Estimate,  ///< derive it from scene structure; fail when that is impossible
  Auto,      ///< like Estimate, but fall back to an image-size heuristic
};

const char* to_string(FocalMode mode);

/// Complete run configuration. Every knob has a usable default; paths are
/// empty until supplied by file, environment, or command line.
struct PipelineConfig {
  std::string frames_dir;
  std::string masks_dir;
  std::string depths_dir;
  std::string asset;
  std::string output_dir;

  double scale = 1'000'000.0;        ///< depth multiplier to world units
  double ransac_tolerance = 10'000.0;  ///< plane inlier distance, world units
  int ransac_iterations = 500;
  FocalMode focal_mode = FocalMode::Auto;
  double focal = 0.0;  ///< pixels; required positive when focal_mode is Fixed
  int seed_stride = 25;  ///< frames between seed-frame candidates
  bool binary_mask = true;        ///< nonzero mask sample = crowd
  std::vector<int> crowd_labels;  ///< label-map ids, used when !binary_mask
  double margin = 0.02;           ///< placement boundary margin fraction
  double alpha = 0.8;             ///< per-corner velocity blend weight
  double radius = 50.0;           ///< corner feature-disk radius, pixels
  int max_suspended = 90;         ///< frames to wait for reacquisition
  double shot_threshold = 0.55;   ///< histogram distance that flags a cut
  std::uint64_t rng_seed = 7;

  bool operator==(const PipelineConfig&) const = default;
};

/// Assign one key=value pair onto `cfg`. Unknown keys and malformed values
/// fail with a parse error naming the key.
void set_config_value(PipelineConfig& cfg, const std::string& key,
                      const std::string& value);

/// Check invariants (positivity, enum coherence). Fails with a parse error.
void validate_config(const PipelineConfig& cfg);

/// Parse an INI-style file: key=value lines, '#'/';' comments, optional
/// [section] headers (cosmetic). Unknown keys are errors. Starts from
/// defaults, validates the result. Error messages carry the line number.
PipelineConfig parse_config(const std::string& path);

/// Same grammar, from an in-memory string ("<config>" stands in for the path).
PipelineConfig parse_config_text(const std::string& text);

/// Canonical text form; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const PipelineConfig& cfg);

/// Apply ADPIPE_<KEY> environment overrides (e.g. ADPIPE_SCALE, ADPIPE_ALPHA).
/// Does not validate; callers validate after all layers are applied.
void apply_env_overrides(PipelineConfig& cfg);

/// Tracking-parameter subset of the run configuration.
TrackingConfig tracking_config(const PipelineConfig& cfg);

}  // namespace adpipe
