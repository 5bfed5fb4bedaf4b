#pragma once

#include <span>
#include <vector>

namespace uwfqa {

// Reference (double precision) forms of the weighted binary cross entropy.
// `logits` and `targets` are row-major B x C with C = weights.size().
//
//   loss = mean over b, c of  -[w_c y log s(z) + (1 - y) log(1 - s(z))]
//
// evaluated as (1 - y) z + (1 + (w_c - 1) y) softplus(-z) so it stays finite
// for large |z|.

/// Throws ArgumentError on shape mismatch or a target outside {0, 1}.
double weighted_bce(std::span<const double> logits, std::span<const double> targets,
                    std::span<const double> weights);

/// d loss / d logits, same layout as `logits`.
std::vector<double> weighted_bce_grad(std::span<const double> logits,
                                      std::span<const double> targets,
                                      std::span<const double> weights);

double softplus(double x);

}  // namespace uwfqa
