#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "adpipe/config.hpp"
#include "adpipe/error.hpp"
#include "test_util.hpp"

using namespace adpipe;

namespace {

ErrorKind kind_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a config error for: " << text);
  return ErrorKind::Io;
}

std::string message_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected a config error for: " << text);
  return "";
}

/// Sets an environment variable for the lifetime of the scope.
class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    ::setenv(name, value, 1);
  }
  ~ScopedEnv() { ::unsetenv(name_); }

 private:
  const char* name_;
};

}  // namespace

TEST_CASE("an empty config yields the documented defaults") {
  const PipelineConfig cfg = parse_config_text("");
  CHECK(cfg == PipelineConfig{});
  CHECK(cfg.scale == 1'000'000.0);
  CHECK(cfg.ransac_tolerance == 10'000.0);
  CHECK(cfg.ransac_iterations == 500);
  CHECK(cfg.alpha == 0.8);
  CHECK(cfg.radius == 50.0);
  CHECK(cfg.seed_stride == 25);
  CHECK(cfg.max_suspended == 90);
  CHECK(cfg.shot_threshold == 0.55);
  CHECK(cfg.focal_mode == FocalMode::Auto);
  CHECK(cfg.binary_mask);
  CHECK(cfg.crowd_labels.empty());
}

TEST_CASE("values parse through sections, comments, and spaced paths") {
  const PipelineConfig cfg = parse_config_text(
      "# top comment\n"
      "[paths]\n"
      "frames_dir = /data/my frames\n"
      "output_dir=/out\n"
      "; another comment\n"
      "[reconstruction]\n"
      "scale = 2.5\n"
      "ransac_tolerance=0.125\n"
      "ransac_iterations = 42\n"
      "[camera]\n"
      "focal_mode = fixed\n"
      "focal = 800\n"
      "[masks]\n"
      "binary_mask = false\n"
      "crowd_labels = 1, 2 ,3\n"
      "[tracking]\n"
      "alpha=0.5\n"
      "radius = 21.5\n"
      "max_suspended=12\n"
      "shot_threshold = 0.4\n"
      "rng_seed = 99\n");
  CHECK(cfg.frames_dir == "/data/my frames");
  CHECK(cfg.output_dir == "/out");
  CHECK(cfg.scale == 2.5);
  CHECK(cfg.ransac_tolerance == 0.125);
  CHECK(cfg.ransac_iterations == 42);
  CHECK(cfg.focal_mode == FocalMode::Fixed);
  CHECK(cfg.focal == 800.0);
  CHECK_FALSE(cfg.binary_mask);
  CHECK(cfg.crowd_labels == std::vector<int>{1, 2, 3});
  CHECK(cfg.alpha == 0.5);
  CHECK(cfg.radius == 21.5);
  CHECK(cfg.max_suspended == 12);
  CHECK(cfg.shot_threshold == 0.4);
  CHECK(cfg.rng_seed == 99);
}

TEST_CASE("positivity and range violations are parse errors") {
  CHECK(kind_of("scale=-5") == ErrorKind::ParseError);
  CHECK(message_of("scale=-5").find("scale") != std::string::npos);
  CHECK(kind_of("scale=0") == ErrorKind::ParseError);
  CHECK(kind_of("ransac_tolerance=-1") == ErrorKind::ParseError);
  CHECK(kind_of("ransac_iterations=0") == ErrorKind::ParseError);
  CHECK(kind_of("seed_stride=0") == ErrorKind::ParseError);
  CHECK(kind_of("alpha=0") == ErrorKind::ParseError);
  CHECK(kind_of("alpha=1.5") == ErrorKind::ParseError);
  CHECK(kind_of("margin=0.6") == ErrorKind::ParseError);
  CHECK(kind_of("margin=-0.1") == ErrorKind::ParseError);
  CHECK(kind_of("radius=0") == ErrorKind::ParseError);
  CHECK(kind_of("max_suspended=0") == ErrorKind::ParseError);
  CHECK(kind_of("shot_threshold=0") == ErrorKind::ParseError);
  CHECK(kind_of("focal=-800") == ErrorKind::ParseError);
  CHECK(kind_of("focal_mode=fixed") == ErrorKind::ParseError);  // needs focal > 0
  CHECK(kind_of("binary_mask=false") == ErrorKind::ParseError);  // needs labels
  CHECK(parse_config_text("focal_mode=fixed\nfocal=800").focal == 800.0);
}

TEST_CASE("unknown keys and malformed lines report the line number") {
  const std::string unknown = message_of("scale=5\nbogus_key=1");
  CHECK(unknown.find("line 2") != std::string::npos);
  CHECK(unknown.find("bogus_key") != std::string::npos);

  const std::string noequals = message_of("just words");
  CHECK(noequals.find("line 1") != std::string::npos);

  const std::string badnum = message_of("\n\nscale=abc");
  CHECK(badnum.find("line 3") != std::string::npos);
  CHECK(badnum.find("scale") != std::string::npos);

  CHECK(kind_of("[unclosed\n") == ErrorKind::ParseError);
  CHECK(kind_of("=5\n") == ErrorKind::ParseError);
  CHECK(kind_of("focal_mode=sideways") == ErrorKind::ParseError);
  CHECK(kind_of("crowd_labels=1,banana\nbinary_mask=false") == ErrorKind::ParseError);
  CHECK(kind_of("rng_seed=-4") == ErrorKind::ParseError);
  CHECK(kind_of("binary_mask=maybe") == ErrorKind::ParseError);
}

TEST_CASE("serialization round-trips every field exactly") {
  PipelineConfig cfg;
  cfg.frames_dir = "/data/with space/frames";
  cfg.masks_dir = "/m";
  cfg.depths_dir = "/d";
  cfg.asset = "/a/banner.ppm";
  cfg.output_dir = "/out";
  cfg.scale = 0.1;
  cfg.ransac_tolerance = 1.0 / 3.0;
  cfg.ransac_iterations = 77;
  cfg.focal_mode = FocalMode::Estimate;
  cfg.focal = 123.456;
  cfg.seed_stride = 3;
  cfg.binary_mask = false;
  cfg.crowd_labels = {0, 17, 255};
  cfg.margin = 0.125;
  cfg.alpha = 0.3;
  cfg.radius = 33.25;
  cfg.max_suspended = 7;
  cfg.shot_threshold = 0.61;
  cfg.rng_seed = 123456789012345ull;

  const std::string text = serialize_config(cfg);
  const PipelineConfig back = parse_config_text(text);
  CHECK(back == cfg);
  CHECK(serialize_config(back) == text);

  CHECK(parse_config_text(serialize_config(PipelineConfig{})) == PipelineConfig{});
}

TEST_CASE("config files parse identically to in-memory text") {
  TempDir tmp;
  const std::string path = tmp.sub("run.cfg");
  const std::string text = "scale=4\nalpha=0.9\nfocal_mode=estimate\n";
  {
    std::ofstream out(path);
    out << text;
  }
  const PipelineConfig from_file = parse_config(path);
  CHECK(from_file == parse_config_text(text));
  CHECK(from_file.scale == 4.0);

  try {
    parse_config(tmp.sub("missing.cfg"));
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("environment variables override parsed values") {
  PipelineConfig cfg = parse_config_text("alpha=0.5\nscale=2\n");
  {
    ScopedEnv alpha("ADPIPE_ALPHA", "0.25");
    ScopedEnv frames("ADPIPE_FRAMES_DIR", "/env/frames");
    apply_env_overrides(cfg);
  }
  CHECK(cfg.alpha == 0.25);
  CHECK(cfg.frames_dir == "/env/frames");
  CHECK(cfg.scale == 2.0);  // untouched keys keep file values

  {
    ScopedEnv bad("ADPIPE_RADIUS", "wide");
    PipelineConfig cfg2;
    try {
      apply_env_overrides(cfg2);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
      CHECK(std::string(e.what()).find("ADPIPE_RADIUS") != std::string::npos);
    }
  }
}

TEST_CASE("the tracking subset mirrors the run configuration") {
  PipelineConfig cfg;
  cfg.alpha = 0.35;
  cfg.radius = 18.0;
  cfg.max_suspended = 11;
  cfg.shot_threshold = 0.42;
  const TrackingConfig tcfg = tracking_config(cfg);
  CHECK(tcfg.alpha == 0.35);
  CHECK(tcfg.radius == 18.0);
  CHECK(tcfg.max_suspended == 11);
  CHECK(tcfg.shot_threshold == 0.42);
}
