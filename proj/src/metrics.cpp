#include "dekm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dekm/errors.hpp"

namespace dekm {

namespace {

void check_lengths(std::span<const int> a, std::span<const int> b, const char* where) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(where) + ": label vectors have lengths " +
                             std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
}

// Sorted distinct labels and, per sample, the dense index of its label.
struct DenseLabels {
    std::vector<int> values;
    std::vector<int> index;
};

DenseLabels densify(std::span<const int> labels, const char* where) {
    DenseLabels out;
    out.values.assign(labels.begin(), labels.end());
    std::sort(out.values.begin(), out.values.end());
    out.values.erase(std::unique(out.values.begin(), out.values.end()), out.values.end());
    if (!out.values.empty() && out.values.front() < 0) {
        throw DomainError(std::string(where) + ": labels must be nonnegative");
    }
    out.index.reserve(labels.size());
    for (int l : labels) {
        const auto it = std::lower_bound(out.values.begin(), out.values.end(), l);
        out.index.push_back(static_cast<int>(it - out.values.begin()));
    }
    return out;
}

// Contingency of dense labels, zero-padded to a square matrix.
Matrix square_overlap(const DenseLabels& a, const DenseLabels& b) {
    const auto k = static_cast<Index>(std::max(a.values.size(), b.values.size()));
    Matrix w = Matrix::Zero(k, k);
    for (std::size_t i = 0; i < a.index.size(); ++i) w(a.index[i], b.index[i]) += 1.0;
    return w;
}

}  // namespace

std::vector<int> hungarian(const Matrix& cost) {
    if (cost.rows() != cost.cols()) {
        throw DimensionError("hungarian: cost matrix must be square, got " + shape_of(cost));
    }
    require_finite(cost, "hungarian");
    const auto n = static_cast<std::size_t>(cost.rows());
    if (n == 0) return {};
    constexpr double inf = std::numeric_limits<double>::infinity();

    // 1-based potentials formulation; column 0 is a virtual start.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t row = 1; row <= n; ++row) {
        match[0] = row;
        std::size_t col0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[col0] = true;
            const std::size_t r0 = match[col0];
            double delta = inf;
            std::size_t col1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(static_cast<Index>(r0 - 1), static_cast<Index>(j - 1)) -
                                   u[r0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = col0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
        } while (match[col0] != 0);
        do {
            const std::size_t col1 = way[col0];
            match[col0] = match[col1];
            col0 = col1;
        } while (col0 != 0);
    }
    std::vector<int> assignment(n);
    for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = static_cast<int>(j - 1);
    return assignment;
}

double assignment_cost(const Matrix& cost, std::span<const int> assignment) {
    double total = 0.0;
    for (std::size_t r = 0; r < assignment.size(); ++r) {
        total += cost(static_cast<Index>(r), assignment[r]);
    }
    return total;
}

Matrix contingency(std::span<const int> a, std::span<const int> b) {
    check_lengths(a, b, "contingency");
    const DenseLabels da = densify(a, "contingency");
    const DenseLabels db = densify(b, "contingency");
    Matrix w = Matrix::Zero(static_cast<Index>(da.values.size()),
                            static_cast<Index>(db.values.size()));
    for (std::size_t i = 0; i < a.size(); ++i) w(da.index[i], db.index[i]) += 1.0;
    return w;
}

std::size_t matched_count(std::span<const int> g, std::span<const int> c) {
    check_lengths(g, c, "matched_count");
    if (g.empty()) return 0;
    const Matrix w = square_overlap(densify(g, "matched_count"), densify(c, "matched_count"));
    const auto match = hungarian(-w);
    double total = 0.0;
    for (std::size_t r = 0; r < match.size(); ++r) total += w(static_cast<Index>(r), match[r]);
    return static_cast<std::size_t>(std::llround(total));
}

LabelVector align_labels(std::span<const int> reference, std::span<const int> c) {
    check_lengths(reference, c, "align_labels");
    if (c.empty()) return {};
    const DenseLabels dr = densify(reference, "align_labels");
    const DenseLabels dc = densify(c, "align_labels");
    const Matrix w = square_overlap(dc, dr);  // rows: labels of c
    const auto match = hungarian(-w);
    int fresh = dr.values.back() + 1;
    std::vector<int> relabel(dc.values.size());
    for (std::size_t r = 0; r < dc.values.size(); ++r) {
        const auto col = static_cast<std::size_t>(match[r]);
        relabel[r] = col < dr.values.size() ? dr.values[col] : fresh++;
    }
    LabelVector out;
    out.reserve(c.size());
    for (int idx : dc.index) out.push_back(relabel[static_cast<std::size_t>(idx)]);
    return out;
}

double acc(std::span<const int> g, std::span<const int> c) {
    check_lengths(g, c, "acc");
    if (g.empty()) throw DomainError("acc: empty label vectors");
    return static_cast<double>(matched_count(g, c)) / static_cast<double>(g.size());
}

double nmi(std::span<const int> g, std::span<const int> c) {
    check_lengths(g, c, "nmi");
    if (g.empty()) throw DomainError("nmi: empty label vectors");
    const Matrix w = contingency(g, c);
    const double n = static_cast<double>(g.size());
    const RowVector pg = w.rowwise().sum().transpose() / n;
    const RowVector pc = w.colwise().sum() / n;

    auto entropy = [](const RowVector& p) {
        double acc_h = 0.0;
        for (Index i = 0; i < p.size(); ++i) {
            if (p(i) > 0.0) acc_h -= p(i) * std::log(p(i));
        }
        return acc_h;
    };
    const double hg = entropy(pg);
    const double hc = entropy(pc);
    double mi = 0.0;
    for (Index i = 0; i < w.rows(); ++i) {
        for (Index j = 0; j < w.cols(); ++j) {
            if (w(i, j) == 0.0) continue;
            const double pij = w(i, j) / n;
            mi -= pij * (std::log(pg(i)) + std::log(pc(j)) - std::log(pij));
        }
    }
    if (hg + hc == 0.0) return 1.0;
    return std::clamp(2.0 * std::max(mi, 0.0) / (hg + hc), 0.0, 1.0);
}

double gaussian_entropy(std::span<const double> variances) {
    if (variances.empty()) throw DomainError("gaussian_entropy: no variances given");
    double log_det = 0.0;
    for (double s2 : variances) {
        if (!(s2 > 0.0) || !std::isfinite(s2)) {
            throw DomainError("gaussian_entropy: variances must be positive and finite");
        }
        log_det += std::log(s2);
    }
    return 0.5 * (std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det);
}

double uniform_entropy(std::size_t n) {
    if (n < 1) throw DomainError("uniform_entropy: n must be >= 1");
    return std::log(static_cast<double>(n));
}

}  // namespace dekm
