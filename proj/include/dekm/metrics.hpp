#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dekm/linalg.hpp"

namespace dekm {

using LabelVector = std::vector<int>;

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
/// potentials, O(k^3)). Element r of the result is the column matched to row r.
std::vector<int> hungarian(const Matrix& cost);

double assignment_cost(const Matrix& cost, std::span<const int> assignment);

/// Contingency counts, rows indexed by label in `a`, columns by label in `b`.
Matrix contingency(std::span<const int> a, std::span<const int> b);

/// Number of samples that agree under the best one-to-one relabeling of `c`.
std::size_t matched_count(std::span<const int> g, std::span<const int> c);

/// Relabels `c` onto `reference` using the overlap-maximizing one-to-one map.
/// Cluster labels without a partner get fresh labels past the reference range.
LabelVector align_labels(std::span<const int> reference, std::span<const int> c);

/// Unsupervised clustering accuracy: matched_count / n.
double acc(std::span<const int> g, std::span<const int> c);

/// 2 I(G;C) / (H(G) + H(C)), natural log; defined as 1 when both entropies vanish.
double nmi(std::span<const int> g, std::span<const int> c);

/// Differential entropy (1/2) ln(2 pi e prod(sigma_i^2)), in nats.
double gaussian_entropy(std::span<const double> variances);

/// Entropy of the uniform distribution over n outcomes: ln(n).
double uniform_entropy(std::size_t n);

}  // namespace dekm
