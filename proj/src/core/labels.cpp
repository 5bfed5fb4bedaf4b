#include "uwfqa/labels.hpp"

#include "uwfqa/errors.hpp"

namespace uwfqa {

std::optional<Artifact> artifact_from_name(std::string_view name) {
  for (auto a : kAllArtifacts) {
    if (name_of(a) == name) return a;
  }
  return std::nullopt;
}

ArtifactLabelVector ArtifactLabelVector::from_bits(std::span<const int> bits) {
  if (bits.size() != kNumArtifacts) {
    throw ValidationError("expected " + std::to_string(kNumArtifacts) + " label values, got " +
                          std::to_string(bits.size()));
  }
  ArtifactLabelVector v;
  for (std::size_t c = 0; c < kNumArtifacts; ++c) {
    if (bits[c] != 0 && bits[c] != 1) {
      throw ValidationError("label " + std::string(kArtifactNames[c]) + " must be 0 or 1, got " +
                            std::to_string(bits[c]));
    }
    v.flags_[c] = bits[c] == 1;
  }
  return v;
}

ArtifactLabelVector ArtifactLabelVector::from_mask(std::uint8_t mask) {
  ArtifactLabelVector v;
  for (std::size_t c = 0; c < kNumArtifacts; ++c) v.flags_[c] = (mask >> c) & 1u;
  return v;
}

std::array<int, kNumArtifacts> ArtifactLabelVector::to_bits() const {
  std::array<int, kNumArtifacts> bits{};
  for (std::size_t c = 0; c < kNumArtifacts; ++c) bits[c] = flags_[c] ? 1 : 0;
  return bits;
}

std::uint8_t ArtifactLabelVector::to_mask() const {
  std::uint8_t m = 0;
  for (std::size_t c = 0; c < kNumArtifacts; ++c) {
    if (flags_[c]) m |= static_cast<std::uint8_t>(1u << c);
  }
  return m;
}

std::size_t ArtifactLabelVector::count() const {
  std::size_t n = 0;
  for (bool f : flags_) n += f ? 1 : 0;
  return n;
}

std::string to_string(const ArtifactLabelVector& labels) {
  std::string s;
  for (std::size_t c = 0; c < kNumArtifacts; ++c) s += labels.test(c) ? '1' : '0';
  return s;
}

}  // namespace uwfqa
