#include "adpipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "adpipe/error.hpp"

namespace adpipe {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Background depth; the ground plane is clipped at the same distance so the
// far field fades into the backdrop without a depth step. The only depth
// discontinuities are then at crowd-mask boundaries.
constexpr double kFarZ = 200.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Uniform [0,1) from a lattice point and a stream seed.
double lattice_value(std::int64_t i, std::int64_t j, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i) * 0x632be59bd9b4e019ull ^
                                                 splitmix64(static_cast<std::uint64_t>(j))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Smooth value noise in [0,1); deterministic in (x, y, seed).
double value_noise(double x, double y, std::uint64_t seed) {
  double fx = std::floor(x);
  double fy = std::floor(y);
  std::int64_t ix = static_cast<std::int64_t>(fx);
  std::int64_t iy = static_cast<std::int64_t>(fy);
  double tx = smoothstep(x - fx);
  double ty = smoothstep(y - fy);
  double v00 = lattice_value(ix, iy, seed);
  double v10 = lattice_value(ix + 1, iy, seed);
  double v01 = lattice_value(ix, iy + 1, seed);
  double v11 = lattice_value(ix + 1, iy + 1, seed);
  double a = v00 + (v10 - v00) * tx;
  double b = v01 + (v11 - v01) * tx;
  return a + (b - a) * ty;
}

std::uint8_t clamp_channel(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

struct Palette {
  // Crowd: base plus noise span per channel.
  double crowd_base[3];
  double crowd_span[3];
  double grid_gain;  // multiplier on seat-grid lines
  double field_base[3];
  double field_span[3];
  double stripe[3];  // field marking colour
  double sky[3];
  std::uint64_t salt;  // texture stream offset so variants decorrelate
};

// Variant palettes are chosen so their colour histograms share almost no
// mass: a cut between variants must look like a genuine shot change.
Palette palette_for(int variant, std::uint64_t seed) {
  Palette p;
  if (variant == 0) {
    p = Palette{{150.0, 95.0, 60.0},
                {90.0, 70.0, 50.0},
                0.35,
                {40.0, 120.0, 45.0},
                {25.0, 60.0, 30.0},
                {235.0, 235.0, 225.0},
                {21.0, 26.0, 36.0},
                seed};
  } else {
    p = Palette{{30.0, 90.0, 190.0},
                {25.0, 60.0, 60.0},
                0.45,
                {150.0, 150.0, 160.0},
                {50.0, 50.0, 55.0},
                {30.0, 30.0, 35.0},
                {210.0, 200.0, 180.0},
                splitmix64(seed ^ 0xabcdef1234567890ull) |
                    static_cast<std::uint64_t>(variant)};
  }
  return p;
}

struct FrameGeometry {
  Vec3 bottom_center;  // camera-relative
  Vec3 axis_a;         // along the stand, unit
  Vec3 axis_b;         // up the stand face, unit
  Vec3 normal;         // axis_a x axis_b, unit
  Vec3 translate;      // scene translation this frame
  double cos_yaw = 1.0;
  double sin_yaw = 0.0;
};

Vec3 yaw_rotate(const Vec3& v, double c, double s) {
  return Vec3{v.x * c + v.z * s, v.y, -v.x * s + v.z * c};
}

Vec3 yaw_unrotate(const Vec3& v, double c, double s) {
  return Vec3{v.x * c - v.z * s, v.y, v.x * s + v.z * c};
}

FrameGeometry frame_geometry(const SceneSpec& spec, int frame_index) {
  FrameGeometry g;
  double theta = spec.motion.yaw_deg_per_frame * frame_index * kPi / 180.0;
  g.cos_yaw = std::cos(theta);
  g.sin_yaw = std::sin(theta);
  g.translate = spec.motion.translate_per_frame * static_cast<double>(frame_index);
  double rake = spec.rake_deg * kPi / 180.0;
  Vec3 base_bc{0.0, spec.ground_y, spec.stand_z};
  Vec3 base_a{1.0, 0.0, 0.0};
  Vec3 base_b{0.0, -std::cos(rake), std::sin(rake)};
  g.bottom_center = yaw_rotate(base_bc, g.cos_yaw, g.sin_yaw) + g.translate;
  g.axis_a = yaw_rotate(base_a, g.cos_yaw, g.sin_yaw);
  g.axis_b = yaw_rotate(base_b, g.cos_yaw, g.sin_yaw);
  g.normal = g.axis_a.cross(g.axis_b).normalized();
  return g;
}

int variant_at(const SceneSpec& spec, int frame_index) {
  int v = 0;
  for (const CutEvent& c : spec.cuts) {
    if (c.frame <= frame_index) v = c.variant;
  }
  return v;
}

Point3 quad_point(const FrameGeometry& g, const CameraIntrinsics& cam, double a,
                  double t) {
  Vec3 rel = g.bottom_center + g.axis_a * a + g.axis_b * t;
  return Point3{cam.cx + rel.x, cam.cy + rel.y, rel.z};
}

// Reference rectangle inset, in quad-local (a, t) coordinates.
struct RefRect {
  double a0, a1, t0, t1;
};

RefRect ref_rect(const SceneSpec& spec) {
  double ha = spec.stand_half_width;
  double h = spec.stand_height;
  return RefRect{-0.55 * ha, 0.55 * ha, 0.20 * h, 0.75 * h};
}

void fill_truth(const SceneSpec& spec, const FrameGeometry& g,
                const CameraIntrinsics& cam, int variant, SceneTruth* truth) {
  truth->camera = cam;
  Vec3 bc_abs{cam.cx + g.bottom_center.x, cam.cy + g.bottom_center.y,
              g.bottom_center.z};
  truth->crowd_plane = PlaneEq::from_normal_point(g.normal, bc_abs);
  double ha = spec.stand_half_width;
  double h = spec.stand_height;
  const double quad_at[4][2] = {
      {-ha, 0.0}, {ha, 0.0}, {ha, h}, {-ha, h}};
  for (int i = 0; i < 4; ++i) {
    truth->quad_corners3d[i] = quad_point(g, cam, quad_at[i][0], quad_at[i][1]);
    truth->quad_corners[i] = project(truth->quad_corners3d[i], cam);
  }
  RefRect r = ref_rect(spec);
  const double ref_at[4][2] = {
      {r.a0, r.t0}, {r.a1, r.t0}, {r.a1, r.t1}, {r.a0, r.t1}};
  for (int i = 0; i < 4; ++i) {
    truth->ref_corners3d[i] = quad_point(g, cam, ref_at[i][0], ref_at[i][1]);
    truth->ref_corners[i] = project(truth->ref_corners3d[i], cam);
  }
  truth->boundary = LineSegment2{truth->quad_corners[0], truth->quad_corners[1]};
  truth->variant = variant;
}

void shade_crowd(const Palette& pal, double a, double t, std::uint8_t* rgb) {
  double n0 = value_noise(a * 1.4, t * 1.4, pal.salt ^ 0x11ull);
  double n1 = value_noise(a * 1.4 + 37.0, t * 1.4, pal.salt ^ 0x22ull);
  double n2 = value_noise(a * 1.4, t * 1.4 + 53.0, pal.salt ^ 0x33ull);
  double c[3] = {pal.crowd_base[0] + pal.crowd_span[0] * (n0 - 0.5) * 2.0,
                 pal.crowd_base[1] + pal.crowd_span[1] * (n1 - 0.5) * 2.0,
                 pal.crowd_base[2] + pal.crowd_span[2] * (n2 - 0.5) * 2.0};
  // Seat rows and aisles: darken near integer grid lines of the face.
  double da = std::fabs(a - std::round(a));
  double dt = std::fabs(t - std::round(t));
  if (da < 0.06 || dt < 0.06) {
    c[0] *= pal.grid_gain;
    c[1] *= pal.grid_gain;
    c[2] *= pal.grid_gain;
  }
  for (int k = 0; k < 3; ++k) rgb[k] = clamp_channel(c[k]);
}

void shade_field(const Palette& pal, double x0, double z0, std::uint8_t* rgb) {
  double n = value_noise(x0 * 0.8, z0 * 0.8, pal.salt ^ 0x44ull);
  double c[3] = {pal.field_base[0] + pal.field_span[0] * (n - 0.5) * 2.0,
                 pal.field_base[1] + pal.field_span[1] * (n - 0.5) * 2.0,
                 pal.field_base[2] + pal.field_span[2] * (n - 0.5) * 2.0};
  double dx = std::fabs(x0 / 3.0 - std::round(x0 / 3.0)) * 3.0;
  if (dx < 0.12) {
    c[0] = pal.stripe[0];
    c[1] = pal.stripe[1];
    c[2] = pal.stripe[2];
  }
  for (int k = 0; k < 3; ++k) rgb[k] = clamp_channel(c[k]);
}

FrameBundle render_stand(const SceneSpec& spec, int frame_index) {
  CameraIntrinsics cam{spec.f, spec.cx, spec.cy, spec.s};
  if (!cam.valid() || spec.width <= 0 || spec.height <= 0)
    fail(ErrorKind::InvalidInput, "invalid camera or image size");
  if (spec.stand_half_width <= 0.0 || spec.stand_height <= 0.0)
    fail(ErrorKind::InvalidInput, "stand extent must be positive");

  FrameGeometry g = frame_geometry(spec, frame_index);
  // n . bc == 0 would put the camera centre inside the crowd plane.
  if (std::fabs(g.normal.dot(g.bottom_center)) < 1e-9)
    fail(ErrorKind::InvalidInput, "camera centre lies on the crowd plane");

  int variant = variant_at(spec, frame_index);
  Palette pal = palette_for(variant, spec.texture_seed);

  FrameBundle out{RasterImage::create(spec.width, spec.height, 3),
                  BinaryMask::create(spec.width, spec.height),
                  DepthMap::create(spec.width, spec.height),
                  SceneTruth{}};
  fill_truth(spec, g, cam, variant, &out.truth);

  double plane_rhs = g.normal.dot(g.bottom_center);
  std::uint64_t noise_stream =
      splitmix64(spec.texture_seed ^ 0x5eedull ^
                 splitmix64(static_cast<std::uint64_t>(frame_index)));

  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      double u = x + 0.5;
      double v = y + 0.5;
      Vec3 ray{(u - cam.cx) / cam.f, (v - cam.cy) / cam.f, 1.0};

      // Stand-face hit.
      double z_quad = 0.0;
      double qa = 0.0, qt = 0.0;
      bool quad_hit = false;
      double denom = g.normal.dot(ray);
      if (std::fabs(denom) > 1e-12) {
        double z = plane_rhs / denom;
        if (z > 0.0) {
          Vec3 hit = ray * z;
          Vec3 d = hit - g.bottom_center;
          double aa = d.dot(g.axis_a);
          double tt = d.dot(g.axis_b);
          if (std::fabs(aa) <= spec.stand_half_width && tt >= 0.0 &&
              tt <= spec.stand_height) {
            quad_hit = true;
            z_quad = z;
            qa = aa;
            qt = tt;
          }
        }
      }

      // Ground-plane hit (y = ground_y in scene coordinates, moved by the
      // scene motion; a yaw about the vertical axis leaves it flat, so only
      // the y translation shifts it).
      double ground_y = spec.ground_y + g.translate.y;
      double z_field = 0.0;
      bool field_hit = false;
      if (ray.y > 1e-12) {
        double z = ground_y / ray.y;
        if (z > 0.0 && z <= kFarZ) {
          field_hit = true;
          z_field = z;
        }
      }

      std::uint8_t rgb[3];
      double depth_z = kFarZ;
      bool is_crowd = false;
      if (quad_hit && (!field_hit || z_quad <= z_field)) {
        is_crowd = true;
        depth_z = z_quad;
        shade_crowd(pal, qa, qt, rgb);
      } else if (field_hit) {
        depth_z = z_field;
        Vec3 hit = ray * z_field;
        Vec3 base = yaw_unrotate(hit - g.translate, g.cos_yaw, g.sin_yaw);
        shade_field(pal, base.x, base.z, rgb);
      } else {
        rgb[0] = clamp_channel(pal.sky[0]);
        rgb[1] = clamp_channel(pal.sky[1]);
        rgb[2] = clamp_channel(pal.sky[2]);
      }

      std::size_t px = (static_cast<std::size_t>(y) * spec.width + x);
      out.frame.samples[px * 3 + 0] = rgb[0];
      out.frame.samples[px * 3 + 1] = rgb[1];
      out.frame.samples[px * 3 + 2] = rgb[2];

      double depth_value = depth_z / spec.s;
      if (spec.depth_noise > 0.0) {
        double u01 = static_cast<double>(
                         splitmix64(noise_stream ^
                                    (static_cast<std::uint64_t>(px) * 2654435761ull)) >>
                         11) *
                     0x1.0p-53;
        depth_value += (2.0 * u01 - 1.0) * spec.depth_noise;
        if (depth_value <= 0.0) depth_value = 1e-12;
      }
      out.depth.values[px] = depth_value;

      if (is_crowd) {
        bool keep = true;
        if (spec.mask_dropout > 0.0) {
          double u01 = static_cast<double>(
                           splitmix64(noise_stream ^ 0x9a5cull ^
                                      (static_cast<std::uint64_t>(px) * 40503ull)) >>
                           11) *
                       0x1.0p-53;
          keep = u01 >= spec.mask_dropout;
        }
        if (keep) out.mask.bits[px] = 1;
      }
    }
  }
  return out;
}

void draw_segment(RasterImage* img, const Pixel& p0, const Pixel& p1,
                  double half_width, std::uint8_t value) {
  double min_x = std::min(p0.u, p1.u) - half_width - 1.0;
  double max_x = std::max(p0.u, p1.u) + half_width + 1.0;
  double min_y = std::min(p0.v, p1.v) - half_width - 1.0;
  double max_y = std::max(p0.v, p1.v) + half_width + 1.0;
  int x0 = std::max(0, static_cast<int>(std::floor(min_x)));
  int x1 = std::min(img->width - 1, static_cast<int>(std::ceil(max_x)));
  int y0 = std::max(0, static_cast<int>(std::floor(min_y)));
  int y1 = std::min(img->height - 1, static_cast<int>(std::ceil(max_y)));
  double dx = p1.u - p0.u;
  double dy = p1.v - p0.v;
  double len2 = dx * dx + dy * dy;
  if (len2 <= 0.0) return;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      double cx = x + 0.5;
      double cy = y + 0.5;
      double t = ((cx - p0.u) * dx + (cy - p0.v) * dy) / len2;
      t = std::clamp(t, 0.0, 1.0);
      double ex = p0.u + t * dx - cx;
      double ey = p0.v + t * dy - cy;
      if (ex * ex + ey * ey <= half_width * half_width) {
        img->at(x, y, 0) = value;
        img->at(x, y, 1) = value;
        img->at(x, y, 2) = value;
      }
    }
  }
}

FrameBundle render_wireframe(const SceneSpec& spec, int frame_index) {
  CameraIntrinsics cam{spec.f, spec.cx, spec.cy, spec.s};
  if (!cam.valid() || spec.width <= 0 || spec.height <= 0)
    fail(ErrorKind::InvalidInput, "invalid camera or image size");

  FrameBundle out{RasterImage::create(spec.width, spec.height, 3, 232),
                  BinaryMask::create(spec.width, spec.height),
                  DepthMap::create(spec.width, spec.height),
                  SceneTruth{}};
  out.truth.camera = cam;
  out.truth.variant = variant_at(spec, frame_index);

  double theta = spec.motion.yaw_deg_per_frame * frame_index * kPi / 180.0;
  double phi = spec.wire_yaw_deg * kPi / 180.0 + theta;
  double chi = spec.wire_pitch_deg * kPi / 180.0;
  double cp = std::cos(phi), sp = std::sin(phi);
  double cc = std::cos(chi), sc = std::sin(chi);
  // Scaffold axes in camera coordinates: yaw about the vertical axis, then
  // pitch the scene up (camera looks down at it).
  Vec3 w1{cp, -sc * sp, cc * sp};    // rail direction
  Vec3 w2{-sp, -sc * cp, cc * cp};   // depth direction
  Vec3 w3{0.0, cc, sc};              // post direction (world vertical)
  // Place the scaffold so its apparent size is focal-invariant: longer
  // lenses see it from proportionally farther away, keeping the projected
  // segments comparable while the vanishing points spread with f.
  Vec3 center = Vec3{0.0, 0.0, 34.0 * spec.f / 800.0} +
                spec.motion.translate_per_frame * static_cast<double>(frame_index);

  auto endpoint = [&](const Vec3& rel) {
    return project(Point3{cam.cx + rel.x, cam.cy + rel.y, rel.z}, cam);
  };
  const double offs_v[3] = {-4.0, 0.0, 4.0};
  const double offs_d[3] = {-6.0, 0.0, 6.0};
  for (double ov : offs_v) {
    for (double od : offs_d) {
      Vec3 anchor = center + w3 * ov + w2 * od;
      draw_segment(&out.frame, endpoint(anchor - w1 * 12.0),
                   endpoint(anchor + w1 * 12.0), 1.5, 25);
    }
  }
  const double offs_r[3] = {-8.0, 0.0, 8.0};
  const double offs_q[3] = {-5.0, 0.0, 5.0};
  for (double orr : offs_r) {
    for (double oq : offs_q) {
      Vec3 anchor = center + w1 * orr + w2 * oq;
      draw_segment(&out.frame, endpoint(anchor - w3 * 7.0),
                   endpoint(anchor + w3 * 7.0), 1.5, 25);
    }
  }
  return out;
}

}  // namespace

SceneSpec SceneSpec::stand(std::uint64_t seed) {
  SceneSpec spec;
  spec.kind = Kind::Stand;
  spec.texture_seed = seed;
  return spec;
}

SceneSpec SceneSpec::fronto(std::uint64_t seed) {
  SceneSpec spec;
  spec.kind = Kind::Stand;
  spec.texture_seed = seed;
  spec.rake_deg = 0.0;
  spec.stand_height = 4.5;
  return spec;
}

SceneSpec SceneSpec::wireframe(double true_f, std::uint64_t seed) {
  SceneSpec spec;
  spec.kind = Kind::Wireframe;
  spec.texture_seed = seed;
  spec.f = true_f;
  // Seeded jitter keeps trials independent without losing determinism.
  double u0 = static_cast<double>(splitmix64(seed ^ 0xf0ca1ull) >> 11) * 0x1.0p-53;
  double u1 = static_cast<double>(splitmix64(seed ^ 0x9d7e2ull) >> 11) * 0x1.0p-53;
  spec.wire_yaw_deg = 21.0 + 8.0 * u0;
  spec.wire_pitch_deg = 12.0 + 4.0 * u1;
  return spec;
}

FrameBundle render_scene(const SceneSpec& spec, int frame_index) {
  if (frame_index < 0) fail(ErrorKind::InvalidInput, "negative frame index");
  if (spec.kind == SceneSpec::Kind::Wireframe)
    return render_wireframe(spec, frame_index);
  return render_stand(spec, frame_index);
}

SequenceBundle render_sequence(const SceneSpec& spec, int n_frames) {
  if (n_frames <= 0) fail(ErrorKind::InvalidInput, "frame count must be positive");
  SequenceBundle seq;
  seq.frames.reserve(n_frames);
  for (int k = 0; k < n_frames; ++k) {
    seq.frames.push_back(render_scene(spec, k));
    seq.corner_tracks.push_back(seq.frames.back().truth.ref_corners);
  }
  if (spec.kind == SceneSpec::Kind::Stand) {
    for (int k = 0; k + 1 < n_frames; ++k) {
      const auto& a = seq.frames[k].truth.quad_corners;
      const auto& b = seq.frames[k + 1].truth.quad_corners;
      seq.step_homographies.push_back(homography_dlt(
          std::vector<Pixel>(a.begin(), a.end()),
          std::vector<Pixel>(b.begin(), b.end())));
    }
  }
  return seq;
}

}  // namespace adpipe
