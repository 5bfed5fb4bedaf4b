#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uwfqa/labels.hpp"

namespace uwfqa {

enum class Split { kUnassigned, kTrain, kVal, kTest };

std::string_view to_string(Split split);
/// "" maps to kUnassigned; anything other than train/val/test is nullopt.
std::optional<Split> split_from_string(std::string_view text);

struct ImageRecord {
  std::string id;
  std::filesystem::path image_path;  // as written in the manifest
  ArtifactLabelVector labels;
  Split split = Split::kUnassigned;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

using ClassCounts = std::array<std::size_t, kNumArtifacts>;

ClassCounts count_positives(const std::vector<ImageRecord>& records);

/// A validated corpus. Counts are always derived from the records.
class DatasetManifest {
 public:
  DatasetManifest() = default;

  /// Throws ValidationError on duplicate or empty ids.
  explicit DatasetManifest(std::vector<ImageRecord> records,
                           std::filesystem::path base_dir = {});

  const std::vector<ImageRecord>& records() const { return records_; }
  const ClassCounts& class_positive_counts() const { return counts_; }
  std::size_t n_total() const { return records_.size(); }
  const std::filesystem::path& base_dir() const { return base_dir_; }

  /// image_path resolved against the manifest's directory.
  std::filesystem::path resolve(const ImageRecord& record) const;

  std::vector<ImageRecord> subset(Split split) const;
  std::size_t count(Split split) const;

  /// SHA-256 of the canonical CSV rendering.
  std::string digest() const;

 private:
  std::vector<ImageRecord> records_;
  ClassCounts counts_{};
  std::filesystem::path base_dir_;
};

inline constexpr std::string_view kManifestHeader =
    "id,image_path,eyelash_present,lower_eyelid_obstructing,"
    "upper_eyelid_obstructing,image_too_dark,dark_artifact,image_not_centered,split";

DatasetManifest parse_manifest(std::istream& in, std::filesystem::path base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);

void write_manifest(std::ostream& out, const DatasetManifest& manifest);
std::string render_manifest(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace uwfqa
