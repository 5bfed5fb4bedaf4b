#include "uwfqa/split.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uwfqa/errors.hpp"
#include "uwfqa/rng.hpp"

namespace uwfqa {
namespace {

constexpr std::uint64_t kStratifyStream = 0x7374726174ULL;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Sum over groups and classes of the squared positive-rate deviation from the
// group's target rate; the swap pass minimizes it.
class RateObjective {
 public:
  RateObjective(std::span<const ArtifactLabelVector> labels, std::span<const std::size_t> caps,
                const std::vector<std::size_t>& group)
      : labels_(labels), caps_(caps.begin(), caps.end()), counts_(caps.size()),
        target_(caps.size()) {
    std::array<double, kNumArtifacts> positives{};
    for (const auto& l : labels) {
      for (std::size_t c = 0; c < kNumArtifacts; ++c) positives[c] += l.test(c) ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(labels.size());
    for (std::size_t g = 0; g < caps_.size(); ++g) {
      counts_[g].fill(0.0);
      for (std::size_t c = 0; c < kNumArtifacts; ++c) {
        target_[g][c] = positives[c] * static_cast<double>(caps_[g]) / n;
      }
    }
    for (std::size_t i = 0; i < labels.size(); ++i) add(group[i], labels[i], 1.0);
  }

  // Change in the objective if records a (in group ga) and b (in gb) trade places.
  double swap_delta(std::size_t a, std::size_t ga, std::size_t b, std::size_t gb) const {
    double delta = 0.0;
    for (std::size_t c = 0; c < kNumArtifacts; ++c) {
      const double d = (labels_[b].test(c) ? 1.0 : 0.0) - (labels_[a].test(c) ? 1.0 : 0.0);
      if (d == 0.0) continue;
      delta += term(ga, c, counts_[ga][c] + d) - term(ga, c, counts_[ga][c]);
      delta += term(gb, c, counts_[gb][c] - d) - term(gb, c, counts_[gb][c]);
    }
    return delta;
  }

  void swap(std::size_t a, std::size_t ga, std::size_t b, std::size_t gb) {
    add(ga, labels_[a], -1.0);
    add(gb, labels_[a], 1.0);
    add(gb, labels_[b], -1.0);
    add(ga, labels_[b], 1.0);
  }

 private:
  double term(std::size_t g, std::size_t c, double count) const {
    if (caps_[g] == 0) return 0.0;
    const double dev = (count - target_[g][c]) / static_cast<double>(caps_[g]);
    return dev * dev;
  }

  void add(std::size_t g, const ArtifactLabelVector& l, double sign) {
    for (std::size_t c = 0; c < kNumArtifacts; ++c) counts_[g][c] += l.test(c) ? sign : 0.0;
  }

  std::span<const ArtifactLabelVector> labels_;
  std::vector<std::size_t> caps_;
  std::vector<std::array<double, kNumArtifacts>> counts_;
  std::vector<std::array<double, kNumArtifacts>> target_;
};

}  // namespace

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
  const double total = ratios.train + ratios.val + ratios.test;
  if (!(ratios.train >= 0 && ratios.val >= 0 && ratios.test >= 0) || !(total > 0)) {
    throw ArgumentError("split ratios must be non-negative with a positive sum");
  }
  const auto round_half_up = [](double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); };
  const double nd = static_cast<double>(n);
  std::size_t train = std::min(n, round_half_up(nd * ratios.train / total));
  std::size_t val = std::min(n - train, round_half_up(nd * ratios.val / total));
  return {train, val, n - train - val};
}

std::vector<std::size_t> stratified_assign(std::span<const ArtifactLabelVector> labels,
                                           std::span<const std::size_t> capacities,
                                           std::uint64_t seed) {
  const std::size_t n = labels.size();
  const std::size_t groups = capacities.size();
  if (groups == 0) throw ArgumentError("need at least one group");
  if (std::accumulate(capacities.begin(), capacities.end(), std::size_t{0}) != n) {
    throw ArgumentError("group capacities must sum to the number of records");
  }

  Rng rng(derive_seed({seed, kStratifyStream}));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  std::array<std::size_t, kNumArtifacts> remaining_pos{};
  for (const auto& l : labels) {
    for (std::size_t c = 0; c < kNumArtifacts; ++c) remaining_pos[c] += l.test(c) ? 1 : 0;
  }
  std::vector<std::size_t> capacity(capacities.begin(), capacities.end());
  std::vector<std::array<double, kNumArtifacts>> demand(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t c = 0; c < kNumArtifacts; ++c) {
      demand[g][c] = static_cast<double>(remaining_pos[c]) * static_cast<double>(capacity[g]) /
                     static_cast<double>(n);
    }
  }

  std::vector<std::size_t> group(n, kNone);
  std::vector<std::size_t> ties;
  const auto place = [&](std::size_t i, std::size_t g) {
    group[i] = g;
    --capacity[g];
    for (std::size_t c = 0; c < kNumArtifacts; ++c) {
      if (labels[i].test(c)) {
        demand[g][c] -= 1.0;
        --remaining_pos[c];
      }
    }
  };
  const auto pick = [&](auto&& better) {
    ties.clear();
    std::size_t best = kNone;
    for (std::size_t g = 0; g < groups; ++g) {
      if (capacity[g] == 0) continue;
      if (best == kNone) {
        best = g;
        ties = {g};
        continue;
      }
      const int cmp = better(g, best);
      if (cmp > 0) {
        best = g;
        ties = {g};
      } else if (cmp == 0) {
        ties.push_back(g);
      }
    }
    return ties.size() == 1 ? ties.front() : ties[rng.below(ties.size())];
  };

  while (true) {
    std::size_t rarest = kNone;
    for (std::size_t c = 0; c < kNumArtifacts; ++c) {
      if (remaining_pos[c] > 0 && (rarest == kNone || remaining_pos[c] < remaining_pos[rarest])) {
        rarest = c;
      }
    }
    if (rarest == kNone) break;
    for (std::size_t i : order) {
      if (group[i] != kNone || !labels[i].test(rarest)) continue;
      const std::size_t g = pick([&](std::size_t a, std::size_t b) {
        constexpr double kEps = 1e-9;
        if (demand[a][rarest] > demand[b][rarest] + kEps) return 1;
        if (demand[a][rarest] < demand[b][rarest] - kEps) return -1;
        if (capacity[a] != capacity[b]) return capacity[a] > capacity[b] ? 1 : -1;
        return 0;
      });
      place(i, g);
    }
  }
  for (std::size_t i : order) {
    if (group[i] != kNone) continue;
    place(i, pick([&](std::size_t a, std::size_t b) {
            if (capacity[a] != capacity[b]) return capacity[a] > capacity[b] ? 1 : -1;
            return 0;
          }));
  }

  // Greedy random swaps that strictly reduce the rate objective.
  if (groups > 1 && n > 1) {
    RateObjective objective(labels, capacities, group);
    const std::size_t max_tries = 40 * n;
    const std::size_t patience = 4 * n;
    std::size_t since_improvement = 0;
    for (std::size_t t = 0; t < max_tries && since_improvement < patience; ++t) {
      const std::size_t a = rng.below(n);
      const std::size_t b = rng.below(n);
      ++since_improvement;
      if (group[a] == group[b] || labels[a] == labels[b]) continue;
      if (objective.swap_delta(a, group[a], b, group[b]) < -1e-12) {
        objective.swap(a, group[a], b, group[b]);
        std::swap(group[a], group[b]);
        since_improvement = 0;
      }
    }
  }
  return group;
}

DatasetManifest split_dataset(const DatasetManifest& manifest, const SplitRatios& ratios,
                              std::uint64_t seed) {
  const auto& records = manifest.records();
  for (const auto& r : records) {
    if (r.split != Split::kUnassigned) {
      throw StateError("record '" + r.id + "' already has split " + std::string(to_string(r.split)));
    }
  }
  if (records.size() < 10) {
    throw ArgumentError("need at least 10 records to split, got " + std::to_string(records.size()));
  }
  const auto sizes = split_sizes(records.size(), ratios);
  std::vector<ArtifactLabelVector> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.labels);
  const auto group = stratified_assign(labels, sizes, seed);

  static constexpr std::array<Split, 3> kSplits = {Split::kTrain, Split::kVal, Split::kTest};
  std::vector<ImageRecord> out = records;
  for (std::size_t i = 0; i < out.size(); ++i) out[i].split = kSplits[group[i]];
  return DatasetManifest(std::move(out), manifest.base_dir());
}

std::vector<Fold> kfold_partition(std::span<const ArtifactLabelVector> labels, std::size_t k,
                                  std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (k < 2) throw ArgumentError("k must be at least 2");
  if (k > n) {
    throw ArgumentError("k = " + std::to_string(k) + " exceeds the number of records (" +
                        std::to_string(n) + ")");
  }
  std::vector<std::size_t> caps(k, n / k);
  for (std::size_t i = 0; i < n % k; ++i) ++caps[i];
  const auto group = stratified_assign(labels, caps, derive_seed({seed, k}));

  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (group[i] == f ? folds[f].holdout : folds[f].fit).push_back(i);
    }
  }
  return folds;
}

}  // namespace uwfqa
