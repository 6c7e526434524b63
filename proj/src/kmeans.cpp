#include "dekm/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "dekm/errors.hpp"

namespace dekm {

namespace {

void check_k(const Matrix& h, int k, const char* where) {
    if (h.rows() == 0) throw ConfigError(std::string(where) + ": empty input");
    if (k < 1) throw ConfigError(std::string(where) + ": k must be >= 1");
    if (k > h.rows()) {
        throw ConfigError(std::string(where) + ": k = " + std::to_string(k) + " exceeds n = " +
                          std::to_string(h.rows()));
    }
}

double squared_distance(const Matrix& a, Index i, const Matrix& b, Index j) {
    return (a.row(i) - b.row(j)).squaredNorm();
}

// Repairs empty clusters in place: the sample farthest from its centroid
// (among clusters with more than one member) becomes the empty cluster's
// sole member, then its old cluster's mean is recomputed.
void repair_empty(const Matrix& h, std::vector<int>& assign, Matrix& centroids,
                  std::vector<Index>& counts) {
    const int k = static_cast<int>(centroids.rows());
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) continue;
        Index far = -1;
        double far_d = -1.0;
        for (Index i = 0; i < h.rows(); ++i) {
            const int a = assign[static_cast<std::size_t>(i)];
            if (counts[static_cast<std::size_t>(a)] < 2) continue;
            const double d = squared_distance(h, i, centroids, a);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far < 0) break;  // cannot happen when k <= n
        const int old = assign[static_cast<std::size_t>(far)];
        assign[static_cast<std::size_t>(far)] = c;
        --counts[static_cast<std::size_t>(old)];
        counts[static_cast<std::size_t>(c)] = 1;
        centroids.row(c) = h.row(far);
        RowVector sum = RowVector::Zero(h.cols());
        for (Index i = 0; i < h.rows(); ++i) {
            if (assign[static_cast<std::size_t>(i)] == old) sum += h.row(i);
        }
        centroids.row(old) = sum / static_cast<double>(counts[static_cast<std::size_t>(old)]);
    }
}

}  // namespace

Matrix kmeanspp_init(const Matrix& h, int k, std::uint64_t seed) {
    check_k(h, k, "kmeanspp_init");
    std::mt19937_64 rng(seed);
    const Index n = h.rows();
    Matrix centroids(k, h.cols());
    std::uniform_int_distribution<Index> first(0, n - 1);
    centroids.row(0) = h.row(first(rng));

    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = squared_distance(h, i, centroids, 0);
    for (int c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        Index pick;
        if (total > 0.0) {
            std::discrete_distribution<Index> draw(d2.begin(), d2.end());
            pick = draw(rng);
        } else {
            pick = first(rng);
        }
        centroids.row(c) = h.row(pick);
        for (Index i = 0; i < n; ++i) {
            auto& d = d2[static_cast<std::size_t>(i)];
            d = std::min(d, squared_distance(h, i, centroids, c));
        }
    }
    return centroids;
}

Matrix random_init(const Matrix& h, int k, std::uint64_t seed) {
    check_k(h, k, "random_init");
    std::mt19937_64 rng(seed);
    std::vector<Index> idx(static_cast<std::size_t>(h.rows()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::vector<Index> chosen;
    std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), k, rng);
    Matrix centroids(k, h.cols());
    for (int c = 0; c < k; ++c) centroids.row(c) = h.row(chosen[static_cast<std::size_t>(c)]);
    return centroids;
}

Matrix init_centroids(const Matrix& h, int k, KMeansInit method, std::uint64_t seed) {
    return method == KMeansInit::kmeanspp ? kmeanspp_init(h, k, seed) : random_init(h, k, seed);
}

int nearest_centroid(const Matrix& centroids, const RowVector& point) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.rows(); ++c) {
        const double d = (centroids.row(c) - point).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

double inertia(const Matrix& h, std::span<const int> assignments, const Matrix& centroids) {
    if (assignments.size() != static_cast<std::size_t>(h.rows())) {
        throw DimensionError("inertia: " + std::to_string(assignments.size()) +
                             " assignments for " + shape_of(h) + " data");
    }
    if (centroids.cols() != h.cols()) {
        throw DimensionError("inertia: centroids " + shape_of(centroids) + " vs data " +
                             shape_of(h));
    }
    double total = 0.0;
    for (Index i = 0; i < h.rows(); ++i) {
        const int a = assignments[static_cast<std::size_t>(i)];
        if (a < 0 || a >= centroids.rows()) throw DimensionError("inertia: assignment out of range");
        total += squared_distance(h, i, centroids, a);
    }
    return total;
}

Matrix cluster_means(const Matrix& h, std::span<const int> assignments, int k) {
    if (assignments.size() != static_cast<std::size_t>(h.rows())) {
        throw DimensionError("cluster_means: " + std::to_string(assignments.size()) +
                             " assignments for " + shape_of(h) + " data");
    }
    Matrix sums = Matrix::Zero(k, h.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < h.rows(); ++i) {
        const int a = assignments[static_cast<std::size_t>(i)];
        if (a < 0 || a >= k) throw DimensionError("cluster_means: assignment out of range");
        sums.row(a) += h.row(i);
        ++counts[static_cast<std::size_t>(a)];
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
            sums.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
        }
    }
    return sums;
}

ClusterResult lloyd(const Matrix& h, const Matrix& init, const LloydOptions& options) {
    if (h.rows() == 0) throw ConfigError("lloyd: empty input");
    if (options.max_iter < 1) throw ConfigError("lloyd: max_iter must be >= 1");
    if (init.cols() != h.cols()) {
        throw DimensionError("lloyd: centroids " + shape_of(init) + " vs data " + shape_of(h));
    }
    const int k = static_cast<int>(init.rows());
    check_k(h, k, "lloyd");
    require_finite(h, "lloyd");

    const auto n = static_cast<std::size_t>(h.rows());
    ClusterResult r;
    r.centroids = init;
    r.assignments.assign(n, -1);
    std::vector<int> next(n);
    double previous = std::numeric_limits<double>::infinity();

    for (int it = 0; it < options.max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = nearest_centroid(r.centroids, h.row(static_cast<Index>(i)));
        }
        const bool stable = next == r.assignments;
        r.assignments = next;
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (int a : r.assignments) ++counts[static_cast<std::size_t>(a)];
        r.centroids = cluster_means(h, r.assignments, k);
        repair_empty(h, r.assignments, r.centroids, counts);
        r.inertia = inertia(h, r.assignments, r.centroids);
        r.inertia_trace.push_back(r.inertia);
        r.iterations_run = it + 1;
        if (stable || r.inertia == 0.0) break;
        if (std::isfinite(previous)) {
            const double gain = previous - r.inertia;
            if (previous <= 0.0 || gain <= options.tol * previous) break;
        }
        previous = r.inertia;
    }
    return r;
}

Matrix within_class_scatter(const Matrix& h, const ClusterResult& r) {
    if (r.assignments.size() != static_cast<std::size_t>(h.rows()) ||
        r.centroids.cols() != h.cols()) {
        throw DimensionError("within_class_scatter: result does not match data " + shape_of(h));
    }
    Matrix centered(h.rows(), h.cols());
    for (Index i = 0; i < h.rows(); ++i) {
        const int a = r.assignments[static_cast<std::size_t>(i)];
        if (a < 0 || a >= r.centroids.rows()) {
            throw DimensionError("within_class_scatter: assignment out of range");
        }
        centered.row(i) = h.row(i) - r.centroids.row(a);
    }
    Matrix s(h.cols(), h.cols());
    s.noalias() = centered.transpose() * centered;
    return 0.5 * (s + s.transpose());
}

}  // namespace dekm
