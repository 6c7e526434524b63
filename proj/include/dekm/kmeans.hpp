#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dekm/linalg.hpp"

namespace dekm {

struct ClusterResult {
    std::vector<int> assignments;  // one cluster index in [0, k) per sample
    Matrix centroids;              // k x e, centroid i is the mean of cluster i
    double inertia = 0.0;          // sum of squared distances to assigned centroids
    int iterations_run = 0;
    std::vector<double> inertia_trace;  // inertia after every Lloyd iteration
};

enum class KMeansInit { kmeanspp, random };

struct LloydOptions {
    int max_iter = 300;
    double tol = 1e-6;  // relative inertia improvement
};

/// k-means++ seeding: first centroid uniform, then D^2-weighted draws.
Matrix kmeanspp_init(const Matrix& h, int k, std::uint64_t seed);

/// k distinct samples drawn uniformly without replacement.
Matrix random_init(const Matrix& h, int k, std::uint64_t seed);

Matrix init_centroids(const Matrix& h, int k, KMeansInit method, std::uint64_t seed);

/// Index of the nearest centroid; ties go to the lowest index.
int nearest_centroid(const Matrix& centroids, const RowVector& point);

/// Lloyd iterations from `init` until assignments repeat, the relative
/// inertia improvement drops below tol, or max_iter is reached. An empty
/// cluster takes over the sample farthest from its centroid.
ClusterResult lloyd(const Matrix& h, const Matrix& init, const LloydOptions& options = {});

/// Sum of squared distances of each row to its assigned centroid.
double inertia(const Matrix& h, std::span<const int> assignments, const Matrix& centroids);

/// Means of the assigned rows; empty clusters yield zero rows.
Matrix cluster_means(const Matrix& h, std::span<const int> assignments, int k);

/// S_w = sum_i sum_{h in C_i} (h - mu_i)(h - mu_i)^T, an e x e PSD matrix
/// whose trace equals the K-means objective.
Matrix within_class_scatter(const Matrix& h, const ClusterResult& r);

}  // namespace dekm
