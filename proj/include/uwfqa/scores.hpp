#pragma once

#include <array>
#include <cmath>

#include "uwfqa/labels.hpp"

namespace uwfqa {

/// Raw per-class network outputs.
struct LogitVector {
  std::array<double, kNumArtifacts> values{};
  friend bool operator==(const LogitVector&, const LogitVector&) = default;
};

/// Independent per-class probabilities (multi-label: no sum constraint).
struct ProbabilityVector {
  std::array<double, kNumArtifacts> values{};
  friend bool operator==(const ProbabilityVector&, const ProbabilityVector&) = default;
};

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline ProbabilityVector to_probabilities(const LogitVector& logits) {
  ProbabilityVector p;
  for (std::size_t c = 0; c < kNumArtifacts; ++c) p.values[c] = logistic(logits.values[c]);
  return p;
}

}  // namespace uwfqa
