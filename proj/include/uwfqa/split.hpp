#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "uwfqa/labels.hpp"
#include "uwfqa/manifest.hpp"

namespace uwfqa {

struct SplitRatios {
  double train = 7.0;
  double val = 1.0;
  double test = 2.0;
};

/// |train| = round(n * train / sum), |val| = round(n * val / sum), rounding
/// half up; test takes the remainder.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

/// Iterative multi-label stratification into groups of exactly the given
/// capacities (which must sum to labels.size()). Returns one group index per
/// record. Rarest label is placed first; each record goes to the group with
/// the largest remaining demand for that label, then the largest remaining
/// capacity, then a seeded uniform choice. A seeded swap pass afterwards
/// reduces the remaining per-class count imbalance.
std::vector<std::size_t> stratified_assign(std::span<const ArtifactLabelVector> labels,
                                           std::span<const std::size_t> capacities,
                                           std::uint64_t seed);

/// Throws StateError if any record already has a split, ArgumentError if
/// fewer than 10 records.
DatasetManifest split_dataset(const DatasetManifest& manifest, const SplitRatios& ratios,
                              std::uint64_t seed);

struct Fold {
  std::vector<std::size_t> fit;
  std::vector<std::size_t> holdout;
};

/// k stratified folds over indices [0, labels.size()). Holdout sizes differ
/// by at most one. Throws ArgumentError if k < 2 or k > labels.size().
std::vector<Fold> kfold_partition(std::span<const ArtifactLabelVector> labels, std::size_t k,
                                  std::uint64_t seed);

}  // namespace uwfqa
