#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "uwfqa/labels.hpp"
#include "uwfqa/manifest.hpp"
#include "uwfqa/raster.hpp"
#include "uwfqa/rng.hpp"

namespace uwfqa::synth {

/// Graded positives per class in the reference clinical corpus of 243 images.
inline constexpr std::array<int, kNumArtifacts> kReferenceCounts = {232, 41, 200, 83, 204, 99};
inline constexpr int kReferenceTotal = 243;

std::array<double, kNumArtifacts> reference_prevalence();

struct SynthConfig {
  std::size_t n_images = 243;
  std::array<double, kNumArtifacts> prevalence = reference_prevalence();
  int image_side = 448;
  std::uint64_t seed = 0;

  void validate() const;  // ArgumentError
};

struct DiscGeometry {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

/// Image plus the retina-disc geometry the injectors need.
struct FundusCanvas {
  RgbImage image;
  DiscGeometry disc;
  double upper_lid_depth = 0.0;  // rows covered by an upper lid at the image center
};

/// Orange-red disc on black, a bright optic-disc blob and dark vessel arcs.
FundusCanvas generate_base_fundus(std::uint64_t seed, int side = 448);

// Injector parameters. Each injector validates its ranges (ArgumentError)
// and returns a JSON witness that records what was drawn.

struct EyelashParams {
  int count = 5;              // [3, 10]
  double reach_frac = 0.25;   // how far past the visible fundus top edge, [0.15, 0.35] of side
  double width_frac = 0.02;   // stroke base width / side, [0.015, 0.030]
  std::uint64_t seed = 0;     // stroke placement
};

struct EyelidParams {
  double coverage = 0.10;  // fraction of the disc occluded, [0.08, 0.15]
};

struct DarkenParams {
  double factor = 0.4;  // [0.25, 0.5]
};

struct DarkArtifactParams {
  int count = 1;               // [1, 3]
  double radius_frac = 0.09;   // blob radius / side, [0.06, 0.12]
  double strength = 0.75;      // fraction of light removed at the blob center, [0.6, 0.9]
  std::uint64_t seed = 0;      // blob placement
};

struct DecenterParams {
  double displacement_frac = 0.15;  // of image side, [0.12, 0.25]
  double direction_rad = 0.0;
};

nlohmann::json inject_eyelash(FundusCanvas& canvas, const EyelashParams& p);
nlohmann::json inject_lower_eyelid(FundusCanvas& canvas, const EyelidParams& p);
nlohmann::json inject_upper_eyelid(FundusCanvas& canvas, const EyelidParams& p);
nlohmann::json inject_too_dark(FundusCanvas& canvas, const DarkenParams& p);
nlohmann::json inject_dark_artifact(FundusCanvas& canvas, const DarkArtifactParams& p);
nlohmann::json inject_not_centered(FundusCanvas& canvas, const DecenterParams& p);

/// Order injectors run in: decentering first, darkening last.
inline constexpr std::array<Artifact, kNumArtifacts> kInjectionOrder = {
    Artifact::kImageNotCentered, Artifact::kUpperEyelidObstructing,
    Artifact::kLowerEyelidObstructing, Artifact::kEyelashPresent,
    Artifact::kDarkArtifact, Artifact::kImageTooDark,
};

/// Draws parameters within the documented range and applies one injector.
nlohmann::json inject_random(FundusCanvas& canvas, Artifact artifact, Rng& rng);

struct SynthRecord {
  std::string id;
  RgbImage image;
  ArtifactLabelVector labels;
  nlohmann::json injection_params;  // object keyed by artifact name
};

/// Labels for record `index` (independent Bernoulli draws per class).
ArtifactLabelVector sample_labels(const SynthConfig& cfg, std::size_t index);

SynthRecord generate_record(const SynthConfig& cfg, std::size_t index);

/// Writes img_NNNNN.png, img_NNNNN.json and manifest.csv into `out_dir`.
/// On failure every file written so far is removed and IoError is thrown.
DatasetManifest generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

/// Mean Rec.601 luma over the whole image or a band of rows.
double mean_luma(const RgbImage& image);
double mean_luma_rows(const RgbImage& image, int row_begin, int row_end);

}  // namespace uwfqa::synth
