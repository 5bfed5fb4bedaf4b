#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace uwfqa {

inline constexpr std::size_t kNumArtifacts = 6;

// Canonical order; every serialized vector, report column and model output
// follows it.
enum class Artifact : std::uint8_t {
  kEyelashPresent = 0,
  kLowerEyelidObstructing = 1,
  kUpperEyelidObstructing = 2,
  kImageTooDark = 3,
  kDarkArtifact = 4,
  kImageNotCentered = 5,
};

inline constexpr std::array<Artifact, kNumArtifacts> kAllArtifacts = {
    Artifact::kEyelashPresent,         Artifact::kLowerEyelidObstructing,
    Artifact::kUpperEyelidObstructing, Artifact::kImageTooDark,
    Artifact::kDarkArtifact,           Artifact::kImageNotCentered,
};

inline constexpr std::array<std::string_view, kNumArtifacts> kArtifactNames = {
    "eyelash_present",          "lower_eyelid_obstructing",
    "upper_eyelid_obstructing", "image_too_dark",
    "dark_artifact",            "image_not_centered",
};

inline constexpr std::array<std::string_view, kNumArtifacts> kArtifactTitles = {
    "Eyelash Present", "Lower Eyelid Obstructing", "Upper Eyelid Obstructing",
    "Image Too Dark",  "Dark Artifact",            "Image Not Centered",
};

constexpr std::size_t index_of(Artifact a) { return static_cast<std::size_t>(a); }
constexpr std::string_view name_of(Artifact a) { return kArtifactNames[index_of(a)]; }
constexpr std::string_view title_of(Artifact a) { return kArtifactTitles[index_of(a)]; }

std::optional<Artifact> artifact_from_name(std::string_view name);

/// Six boolean artifact flags in canonical order.
class ArtifactLabelVector {
 public:
  constexpr ArtifactLabelVector() = default;

  /// Throws ValidationError unless `bits` has six entries, each 0 or 1.
  static ArtifactLabelVector from_bits(std::span<const int> bits);
  static ArtifactLabelVector from_mask(std::uint8_t mask);

  constexpr bool operator[](Artifact a) const { return flags_[index_of(a)]; }
  constexpr bool test(std::size_t c) const { return flags_[c]; }
  constexpr void set(Artifact a, bool value = true) { flags_[index_of(a)] = value; }
  constexpr void set(std::size_t c, bool value = true) { flags_[c] = value; }

  std::array<int, kNumArtifacts> to_bits() const;
  std::uint8_t to_mask() const;
  std::size_t count() const;
  bool any() const { return count() > 0; }

  friend constexpr bool operator==(const ArtifactLabelVector&,
                                   const ArtifactLabelVector&) = default;

 private:
  std::array<bool, kNumArtifacts> flags_{};
};

std::string to_string(const ArtifactLabelVector& labels);

}  // namespace uwfqa
