#include "uwfqa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "uwfqa/errors.hpp"
#include "uwfqa/image_io.hpp"

namespace uwfqa::synth {
namespace {

using Mask = Raster<float>;

constexpr std::uint64_t kLabelStream = 0x6c6162656c73ULL;
constexpr std::uint64_t kBaseStream = 0x62617365ULL;
constexpr std::uint64_t kInjectStream = 0x696e6a656374ULL;

std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

void require(bool ok, const std::string& message) {
  if (!ok) throw ArgumentError(message);
}

struct Point {
  double x;
  double y;
};

Point bezier(Point a, Point c, Point b, double t) {
  const double u = 1.0 - t;
  return {u * u * a.x + 2 * u * t * c.x + t * t * b.x, u * u * a.y + 2 * u * t * c.y + t * t * b.y};
}

// Accumulates a tapered quadratic-Bezier stroke into `mask` as max coverage.
void stroke(Mask& mask, Point a, Point c, Point b, double width_start, double width_end) {
  const double length = std::hypot(c.x - a.x, c.y - a.y) + std::hypot(b.x - c.x, b.y - c.y);
  const int steps = std::max(2, static_cast<int>(length * 2.0));
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    const Point p = bezier(a, c, b, t);
    const double radius = 0.5 * (width_start + (width_end - width_start) * t);
    const int x0 = std::max(0, static_cast<int>(std::floor(p.x - radius - 1)));
    const int x1 = std::min(mask.width - 1, static_cast<int>(std::ceil(p.x + radius + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(p.y - radius - 1)));
    const int y1 = std::min(mask.height - 1, static_cast<int>(std::ceil(p.y + radius + 1)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d = std::hypot(x + 0.5 - p.x, y + 0.5 - p.y);
        const float cover = static_cast<float>(std::clamp(radius - d + 0.5, 0.0, 1.0));
        float& m = mask.at(y, x, 0);
        m = std::max(m, cover);
      }
    }
  }
}

bool in_disc(const DiscGeometry& g, double x, double y) {
  return std::hypot(x - g.cx, y - g.cy) < g.radius;
}

// Lid margin: parabola reaching `depth` rows at the image center and
// rising towards the sides.
double lid_margin(double depth, double x, int side) {
  const double u = (x - side / 2.0) / (0.75 * side);
  return depth * (1.0 - u * u);
}

double occluded_fraction(const DiscGeometry& g, int side, double depth, bool from_top) {
  std::size_t inside = 0;
  std::size_t covered = 0;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      if (!in_disc(g, px, py)) continue;
      ++inside;
      const double m = lid_margin(depth, px, side);
      if (from_top ? py < m : py > side - m) ++covered;
    }
  }
  return inside == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(inside);
}

nlohmann::json inject_eyelid(FundusCanvas& canvas, const EyelidParams& p, bool upper) {
  require(p.coverage >= 0.08 && p.coverage <= 0.15, "eyelid coverage must be in [0.08, 0.15]");
  auto& img = canvas.image;
  const int side = img.height;

  // Bisect the margin depth that occludes the requested share of the disc.
  double lo = 0.0;
  double hi = side;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (occluded_fraction(canvas.disc, side, mid, upper) < p.coverage ? lo : hi) = mid;
  }
  const double depth = hi;
  const double achieved = occluded_fraction(canvas.disc, side, depth, upper);

  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double m = lid_margin(depth, x + 0.5, side);
      const double dist = upper ? m - (y + 0.5) : (y + 0.5) - (side - m);
      // The lid only shades the visible fundus; the black surround stays black.
      const double rim = canvas.disc.radius - std::hypot(x + 0.5 - canvas.disc.cx, y + 0.5 - canvas.disc.cy);
      const double alpha =
          std::clamp(dist / 2.0 + 0.5, 0.0, 1.0) * std::clamp(rim / 2.0 + 0.5, 0.0, 1.0);
      if (alpha <= 0.0) continue;
      const double shade = 1.0 + 0.12 * std::sin(0.045 * x + 0.11 * y);
      const double lid[3] = {62.0 * shade, 40.0 * shade, 31.0 * shade};
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) = to_u8((1.0 - alpha) * img.at(y, x, c) + alpha * lid[c]);
      }
    }
  }
  if (upper) canvas.upper_lid_depth = std::max(canvas.upper_lid_depth, depth);
  return {{"coverage_requested", p.coverage},
          {"occluded_disc_fraction", achieved},
          {"margin_depth_px", depth},
          {"edge", upper ? "top" : "bottom"}};
}

}  // namespace

std::array<double, kNumArtifacts> reference_prevalence() {
  std::array<double, kNumArtifacts> p{};
  for (std::size_t c = 0; c < kNumArtifacts; ++c) {
    p[c] = static_cast<double>(kReferenceCounts[c]) / kReferenceTotal;
  }
  return p;
}

void SynthConfig::validate() const {
  for (double p : prevalence) require(p >= 0.0 && p <= 1.0, "prevalence must be in [0, 1]");
  require(image_side >= 64, "image_side must be at least 64");
}

double mean_luma_rows(const RgbImage& image, int row_begin, int row_end) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = std::max(0, row_begin); y < std::min(image.height, row_end); ++y) {
    for (int x = 0; x < image.width; ++x) {
      sum += 0.299 * image.at(y, x, 0) + 0.587 * image.at(y, x, 1) + 0.114 * image.at(y, x, 2);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double mean_luma(const RgbImage& image) { return mean_luma_rows(image, 0, image.height); }

FundusCanvas generate_base_fundus(std::uint64_t seed, int side) {
  require(side >= 64, "image side must be at least 64");
  Rng rng(derive_seed({seed, kBaseStream}));
  FundusCanvas canvas;
  canvas.image = RgbImage(side, side, 3, 0);
  auto& g = canvas.disc;
  g.cx = side / 2.0 + rng.uniform(-0.01, 0.01) * side;
  g.cy = side / 2.0 + rng.uniform(-0.01, 0.01) * side;
  g.radius = 0.42 * side * rng.uniform(0.97, 1.03);

  const double brightness = rng.uniform(0.9, 1.1);
  const double base[3] = {rng.uniform(190, 220), rng.uniform(85, 105), rng.uniform(38, 55)};
  const double wave_phase[2] = {rng.uniform(0, 6.28), rng.uniform(0, 6.28)};

  // Optic-disc position (nasal side chosen at random) and vessel arcs.
  const double od_side = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const Point od{g.cx + od_side * 0.22 * g.radius, g.cy - 0.02 * g.radius};
  const double od_radius = 0.075 * g.radius;

  Mask vessels(side, side, 1, 0.0f);
  const int n_vessels = rng.uniform_int(4, 6);
  for (int v = 0; v < n_vessels; ++v) {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double reach = rng.uniform(0.55, 0.85) * g.radius;
    const Point end{od.x + reach * std::cos(angle), od.y + reach * std::sin(angle)};
    const double bend = rng.uniform(-0.25, 0.25) * reach;
    const Point mid{(od.x + end.x) / 2 - bend * std::sin(angle),
                    (od.y + end.y) / 2 + bend * std::cos(angle)};
    const double w = rng.uniform(0.006, 0.011) * side;
    stroke(vessels, od, mid, end, w, 0.35 * w);
  }

  Rng noise(derive_seed({seed, kBaseStream, 1}));
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      const double dist = std::hypot(px - g.cx, py - g.cy);
      const double alpha = std::clamp(g.radius - dist + 0.5, 0.0, 1.0);
      if (alpha <= 0.0) continue;
      const double d = dist / g.radius;
      const double shade = brightness * (1.0 - 0.35 * d * d) *
                           (1.0 + 0.04 * std::sin(px * 0.031 + wave_phase[0]) *
                                      std::cos(py * 0.027 + wave_phase[1]));
      double rgb[3] = {base[0] * shade, (base[1] + 30.0 * d * d) * shade, base[2] * shade};

      const double od_d = std::hypot(px - od.x, py - od.y) / od_radius;
      if (od_d < 2.0) {
        const double w = std::exp(-od_d * od_d * 1.2);
        const double od_rgb[3] = {250.0, 215.0, 150.0};
        for (int c = 0; c < 3; ++c) rgb[c] = (1 - w) * rgb[c] + w * od_rgb[c];
      }
      const double vm = vessels.at(y, x, 0);
      if (vm > 0.0) {
        const double tint[3] = {0.55, 0.38, 0.40};
        for (int c = 0; c < 3; ++c) rgb[c] *= 1.0 - vm * (1.0 - tint[c]);
      }
      for (int c = 0; c < 3; ++c) {
        canvas.image.at(y, x, c) = to_u8(alpha * (rgb[c] + 3.0 * noise.normal()));
      }
    }
  }
  return canvas;
}

nlohmann::json inject_not_centered(FundusCanvas& canvas, const DecenterParams& p) {
  require(p.displacement_frac >= 0.12 && p.displacement_frac <= 0.25,
          "displacement_frac must be in [0.12, 0.25]");
  require(std::isfinite(p.direction_rad), "direction must be finite");
  auto& img = canvas.image;
  const int side = img.height;
  const double target = p.displacement_frac * side;
  long dx = std::lround(target * std::cos(p.direction_rad));
  long dy = std::lround(target * std::sin(p.direction_rad));
  // Integer rounding must not pull the displacement under the requested one.
  while (std::hypot(static_cast<double>(dx), static_cast<double>(dy)) < target) {
    if (std::abs(dx) >= std::abs(dy)) {
      dx += dx >= 0 ? 1 : -1;
    } else {
      dy += dy >= 0 ? 1 : -1;
    }
  }
  RgbImage shifted(side, side, 3, 0);
  for (int y = 0; y < side; ++y) {
    const long sy = y - dy;
    if (sy < 0 || sy >= side) continue;
    for (int x = 0; x < side; ++x) {
      const long sx = x - dx;
      if (sx < 0 || sx >= side) continue;
      for (int c = 0; c < 3; ++c) shifted.at(y, x, c) = img.at(static_cast<int>(sy), static_cast<int>(sx), c);
    }
  }
  img = std::move(shifted);
  canvas.disc.cx += static_cast<double>(dx);
  canvas.disc.cy += static_cast<double>(dy);
  return {{"dx_px", dx},
          {"dy_px", dy},
          {"displacement_frac", std::hypot(static_cast<double>(dx), static_cast<double>(dy)) / side},
          {"disc_center", {canvas.disc.cx, canvas.disc.cy}}};
}

nlohmann::json inject_upper_eyelid(FundusCanvas& canvas, const EyelidParams& p) {
  return inject_eyelid(canvas, p, true);
}

nlohmann::json inject_lower_eyelid(FundusCanvas& canvas, const EyelidParams& p) {
  return inject_eyelid(canvas, p, false);
}

nlohmann::json inject_eyelash(FundusCanvas& canvas, const EyelashParams& p) {
  require(p.count >= 3 && p.count <= 10, "eyelash count must be in [3, 10]");
  require(p.reach_frac >= 0.15 && p.reach_frac <= 0.35, "eyelash reach_frac must be in [0.15, 0.35]");
  require(p.width_frac >= 0.015 && p.width_frac <= 0.030,
          "eyelash width_frac must be in [0.015, 0.030]");
  auto& img = canvas.image;
  const int side = img.height;
  Rng rng(derive_seed({p.seed, 0x6c617368ULL}));
  const double visible_top =
      std::max({0.0, canvas.disc.cy - canvas.disc.radius, canvas.upper_lid_depth});
  const double end_y = std::min(side - 1.0, visible_top + p.reach_frac * side);

  Mask mask(side, side, 1, 0.0f);
  nlohmann::json strokes = nlohmann::json::array();
  for (int i = 0; i < p.count; ++i) {
    const Point start{rng.uniform(0.25, 0.75) * side, -2.0};
    const Point end{start.x + rng.uniform(-0.12, 0.12) * side, end_y * rng.uniform(0.85, 1.0)};
    const Point ctrl{(start.x + end.x) / 2 + rng.uniform(-0.06, 0.06) * side,
                     (start.y + end.y) / 2};
    const double width = p.width_frac * side * rng.uniform(0.8, 1.2);
    stroke(mask, start, ctrl, end, width, 0.25 * width);
    strokes.push_back({{"start", {start.x, start.y}},
                       {"end", {end.x, end.y}},
                       {"base_width_px", width}});
  }
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double a = mask.at(y, x, 0);
      if (a <= 0.0) continue;
      const double lash[3] = {14.0, 10.0, 8.0};
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = to_u8((1 - a) * img.at(y, x, c) + a * lash[c]);
    }
  }
  return {{"count", p.count}, {"edge", "top"}, {"tip_row", end_y}, {"strokes", strokes}};
}

nlohmann::json inject_dark_artifact(FundusCanvas& canvas, const DarkArtifactParams& p) {
  require(p.count >= 1 && p.count <= 3, "dark artifact count must be in [1, 3]");
  require(p.radius_frac >= 0.06 && p.radius_frac <= 0.12,
          "dark artifact radius_frac must be in [0.06, 0.12]");
  require(p.strength >= 0.6 && p.strength <= 0.9, "dark artifact strength must be in [0.6, 0.9]");
  auto& img = canvas.image;
  const int side = img.height;
  const auto& g = canvas.disc;
  Rng rng(derive_seed({p.seed, 0x626c6f62ULL}));
  nlohmann::json blobs = nlohmann::json::array();
  for (int b = 0; b < p.count; ++b) {
    const double radius = p.radius_frac * side * rng.uniform(0.85, 1.15);
    const double max_offset = g.radius - 1.2 * radius;
    require(max_offset > 0.0, "disc too small for a dark artifact");
    Point c{g.cx, g.cy};
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double r = max_offset * std::sqrt(rng.uniform());
      const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Point cand{g.cx + r * std::cos(t), g.cy + r * std::sin(t)};
      if (cand.x - radius >= 0 && cand.y - radius >= 0 && cand.x + radius <= side &&
          cand.y + radius <= side) {
        c = cand;
        break;
      }
    }
    const double sigma = radius / 2.0;
    for (int y = std::max(0, static_cast<int>(c.y - radius)); y < std::min(side, static_cast<int>(c.y + radius) + 1); ++y) {
      for (int x = std::max(0, static_cast<int>(c.x - radius)); x < std::min(side, static_cast<int>(c.x + radius) + 1); ++x) {
        const double d = std::hypot(x + 0.5 - c.x, y + 0.5 - c.y);
        if (d >= radius) continue;
        const double keep = 1.0 - p.strength * std::exp(-0.5 * (d / sigma) * (d / sigma));
        for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = to_u8(img.at(y, x, ch) * keep);
      }
    }
    blobs.push_back({{"center", {c.x, c.y}},
                     {"radius_px", radius},
                     {"strength", p.strength},
                     {"inside_disc", std::hypot(c.x - g.cx, c.y - g.cy) + radius < g.radius}});
  }
  return {{"count", p.count}, {"blobs", blobs}};
}

nlohmann::json inject_too_dark(FundusCanvas& canvas, const DarkenParams& p) {
  require(p.factor >= 0.25 && p.factor <= 0.5, "darken factor must be in [0.25, 0.5]");
  const double before = mean_luma(canvas.image);
  for (auto& v : canvas.image.data) v = to_u8(v * p.factor);
  return {{"factor", p.factor}, {"mean_luma_before", before}, {"mean_luma_after", mean_luma(canvas.image)}};
}

nlohmann::json inject_random(FundusCanvas& canvas, Artifact artifact, Rng& rng) {
  switch (artifact) {
    case Artifact::kEyelashPresent:
      return inject_eyelash(canvas, {rng.uniform_int(3, 10), rng.uniform(0.15, 0.35),
                                     rng.uniform(0.015, 0.030), rng.next()});
    case Artifact::kLowerEyelidObstructing:
      return inject_lower_eyelid(canvas, {rng.uniform(0.08, 0.15)});
    case Artifact::kUpperEyelidObstructing:
      return inject_upper_eyelid(canvas, {rng.uniform(0.08, 0.15)});
    case Artifact::kImageTooDark:
      return inject_too_dark(canvas, {rng.uniform(0.25, 0.5)});
    case Artifact::kDarkArtifact:
      return inject_dark_artifact(canvas, {rng.uniform_int(1, 3), rng.uniform(0.06, 0.12),
                                           rng.uniform(0.6, 0.9), rng.next()});
    case Artifact::kImageNotCentered:
      return inject_not_centered(canvas,
                                 {rng.uniform(0.12, 0.25), rng.uniform(0.0, 2.0 * std::numbers::pi)});
  }
  throw ArgumentError("unknown artifact");
}

ArtifactLabelVector sample_labels(const SynthConfig& cfg, std::size_t index) {
  Rng rng(derive_seed({cfg.seed, index, kLabelStream}));
  ArtifactLabelVector labels;
  for (std::size_t c = 0; c < kNumArtifacts; ++c) labels.set(c, rng.bernoulli(cfg.prevalence[c]));
  return labels;
}

SynthRecord generate_record(const SynthConfig& cfg, std::size_t index) {
  SynthRecord rec;
  char id[32];
  std::snprintf(id, sizeof id, "img_%05zu", index);
  rec.id = id;
  rec.labels = sample_labels(cfg, index);
  FundusCanvas canvas = generate_base_fundus(derive_seed({cfg.seed, index}), cfg.image_side);
  Rng rng(derive_seed({cfg.seed, index, kInjectStream}));
  rec.injection_params = nlohmann::json::object();
  for (Artifact a : kInjectionOrder) {
    if (!rec.labels[a]) continue;
    rec.injection_params[std::string(name_of(a))] = inject_random(canvas, a, rng);
  }
  rec.image = std::move(canvas.image);
  return rec;
}

DatasetManifest generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  const auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
  };
  try {
    fs::create_directories(out_dir);
    std::vector<ImageRecord> records;
    records.reserve(cfg.n_images);
    for (std::size_t i = 0; i < cfg.n_images; ++i) {
      SynthRecord rec = generate_record(cfg, i);
      const fs::path image_name = rec.id + ".png";
      written.push_back(out_dir / image_name);
      write_png(rec.image, out_dir / image_name);

      nlohmann::ordered_json side;
      side["id"] = rec.id;
      side["labels"] = rec.labels.to_bits();
      side["injection_params"] = rec.injection_params;
      const fs::path side_path = out_dir / (rec.id + ".json");
      written.push_back(side_path);
      std::ofstream out(side_path);
      out << side.dump(2) << '\n';
      if (!out) throw IoError("cannot write " + side_path.string());

      records.push_back({rec.id, image_name, rec.labels, Split::kUnassigned});
    }
    DatasetManifest manifest(std::move(records), out_dir);
    written.push_back(out_dir / "manifest.csv");
    save_manifest(manifest, out_dir / "manifest.csv");
    return manifest;
  } catch (const std::exception& e) {
    cleanup();
    throw IoError(std::string("synthetic dataset generation failed: ") + e.what());
  }
}

}  // namespace uwfqa::synth
