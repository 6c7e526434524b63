#include "dekm/dekm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "dekm/errors.hpp"

namespace dekm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent streams derived from the run seed.
enum class Stream : std::uint64_t { kmeans = 1, shuffle = 2, dimension = 3 };

std::uint64_t stream_seed(std::uint64_t seed, Stream s, std::uint64_t index = 0) {
    return splitmix64(splitmix64(seed ^ (static_cast<std::uint64_t>(s) << 56)) + index);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::last_dim_Y: return "last_dim_Y";
        case Strategy::random_dim_Y: return "random_dim_Y";
        case Strategy::all_dims_Y: return "all_dims_Y";
        case Strategy::random_dim_H: return "random_dim_H";
        case Strategy::all_dims_H: return "all_dims_H";
    }
    return "?";
}

std::string_view to_string(BatchMode m) {
    return m == BatchMode::mini_batch ? "mini_batch" : "full_batch";
}

Strategy parse_strategy(std::string_view tag) {
    for (Strategy s : kAllStrategies) {
        if (to_string(s) == tag) return s;
    }
    throw ConfigError("unknown strategy '" + std::string(tag) +
                      "' (expected last_dim_Y, random_dim_Y, all_dims_Y, random_dim_H or "
                      "all_dims_H)");
}

BatchMode parse_batch_mode(std::string_view tag) {
    if (tag == "mini_batch") return BatchMode::mini_batch;
    if (tag == "full_batch") return BatchMode::full_batch;
    throw ConfigError("unknown batch mode '" + std::string(tag) +
                      "' (expected mini_batch or full_batch)");
}

bool in_y_space(Strategy s) {
    return s == Strategy::last_dim_Y || s == Strategy::random_dim_Y || s == Strategy::all_dims_Y;
}

std::uint64_t kmeans_seed(std::uint64_t seed, int iter) {
    return stream_seed(seed, Stream::kmeans, static_cast<std::uint64_t>(iter));
}

void DekmConfig::validate() const {
    if (k < 1) throw ConfigError("dekm: k must be >= 1");
    if (max_outer_iters < 0) throw ConfigError("dekm: max_outer_iters must be >= 0");
    if (inner_batch_size < 1) throw ConfigError("dekm: inner_batch_size must be >= 1");
    if (inner_steps < 0) throw ConfigError("dekm: inner_steps must be >= 0");
    if (!(stop_fraction > 0.0 && stop_fraction < 1.0)) {
        throw ConfigError("dekm: stop_fraction must lie in (0, 1)");
    }
    if (!(adam.lr > 0.0)) throw ConfigError("dekm: learning rate must be positive");
    if (lloyd.max_iter < 1) throw ConfigError("dekm: kmeans max_iter must be >= 1");
    if (kmeans_restarts < 1) throw ConfigError("dekm: kmeans_restarts must be >= 1");
}

TransformState build_transform(const Matrix& s_w) {
    TransformState t = sym_eig(s_w);
    const Index e = t.v.rows();
    for (Index i = 1; i < e; ++i) {
        if (t.eigenvalues(i) < t.eigenvalues(i - 1)) {
            throw NumericError("build_transform: eigenvalues not ascending");
        }
    }
    const double ortho = (t.v * t.v.transpose() - Matrix::Identity(e, e)).cwiseAbs().maxCoeff();
    if (ortho > 1e-8) {
        throw NumericError("build_transform: eigenbasis not orthonormal (" +
                           std::to_string(ortho) + ")");
    }
    return t;
}

GreedyTargets greedy_targets(const Matrix& h, const TransformState& t, const ClusterResult& r,
                             Strategy strategy, std::mt19937_64& rng) {
    const Index n = h.rows();
    const Index e = h.cols();
    if (r.assignments.size() != static_cast<std::size_t>(n) || r.centroids.cols() != e) {
        throw DimensionError("greedy_targets: clustering does not match embedding " + shape_of(h));
    }
    const bool y_space = in_y_space(strategy);
    if (y_space && (t.v.rows() != e || t.v.cols() != e)) {
        throw DimensionError("greedy_targets: transform " + shape_of(t.v) +
                             " does not match embedding " + shape_of(h));
    }

    GreedyTargets out;
    Matrix points = y_space ? Matrix(h * t.v.transpose()) : h;
    Matrix centres = y_space ? Matrix(r.centroids * t.v.transpose()) : r.centroids;
    if (y_space) out.projection = t.v;

    switch (strategy) {
        case Strategy::last_dim_Y: out.dimension = static_cast<int>(e - 1); break;
        case Strategy::random_dim_Y:
        case Strategy::random_dim_H: {
            std::uniform_int_distribution<int> pick(0, static_cast<int>(e - 1));
            out.dimension = pick(rng);
            break;
        }
        case Strategy::all_dims_Y:
        case Strategy::all_dims_H: out.dimension = -1; break;
    }

    if (out.dimension < 0) {
        out.targets.resize(n, e);
        for (Index i = 0; i < n; ++i) {
            out.targets.row(i) = centres.row(r.assignments[static_cast<std::size_t>(i)]);
        }
    } else {
        out.targets = std::move(points);
        for (Index i = 0; i < n; ++i) {
            out.targets(i, out.dimension) =
                centres(r.assignments[static_cast<std::size_t>(i)], out.dimension);
        }
    }
    return out;
}

double representation_loss(const Matrix& h, const GreedyTargets& targets) {
    if (targets.projection) {
        return (h * targets.projection->transpose() - targets.targets).squaredNorm();
    }
    return (h - targets.targets).squaredNorm();
}

double representation_step(AutoencoderModel& model, const Matrix& x_batch,
                           const Matrix& targets_batch, const std::optional<Matrix>& projection,
                           AdamState& encoder_adam) {
    const Gradients g = backprop(model, x_batch, EmbeddingTarget{targets_batch, projection});
    if (!std::isfinite(g.loss)) throw DivergenceError("representation_step: non-finite loss");
    adam_step(model.encoder, g.encoder, encoder_adam);
    return g.loss;
}

double changed_fraction(std::span<const int> prev_assignments, std::span<const int> assignments) {
    if (prev_assignments.size() != assignments.size()) {
        throw DimensionError("changed_fraction: assignment vectors have lengths " +
                             std::to_string(prev_assignments.size()) + " and " +
                             std::to_string(assignments.size()));
    }
    if (assignments.empty()) return 0.0;
    const std::size_t kept = matched_count(prev_assignments, assignments);
    return static_cast<double>(assignments.size() - kept) /
           static_cast<double>(assignments.size());
}

bool should_stop(std::span<const int> prev_assignments, std::span<const int> assignments,
                 double stop_fraction) {
    return changed_fraction(prev_assignments, assignments) < stop_fraction;
}

nlohmann::json to_json(const IterationRecord& r) {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {{"iter", r.iter},
            {"inertia", r.inertia},
            {"l4", opt(r.l4)},
            {"changed_fraction", opt(r.changed_fraction)},
            {"acc", opt(r.acc)},
            {"nmi", opt(r.nmi)},
            {"seconds", r.seconds},
            {"final", r.final}};
}

std::string to_jsonl(const RunHistory& h) {
    std::string out;
    for (const auto& r : h.records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

DekmResult run_dekm(AutoencoderModel model, const Matrix& x, const DekmConfig& config,
                    const LabelVector* labels, const IterationCallback& on_iter,
                    const AdamState* carried_adam) {
    config.validate();
    validate(model);
    if (x.cols() != model.input_dim()) {
        throw DimensionError("run_dekm: data " + shape_of(x) + " does not match input width " +
                             std::to_string(model.input_dim()));
    }
    if (x.rows() < config.k) {
        throw ConfigError("run_dekm: need at least k = " + std::to_string(config.k) + " samples");
    }
    if (labels && labels->size() != static_cast<std::size_t>(x.rows())) {
        throw DimensionError("run_dekm: " + std::to_string(labels->size()) + " labels for " +
                             std::to_string(x.rows()) + " samples");
    }

    const auto n = static_cast<std::size_t>(x.rows());
    const std::size_t batch = config.batch_mode == BatchMode::full_batch
                                  ? n
                                  : std::min(n, static_cast<std::size_t>(config.inner_batch_size));
    const std::size_t steps = config.inner_steps > 0
                                  ? static_cast<std::size_t>(config.inner_steps)
                                  : (n + batch - 1) / batch;

    AdamState adam = !config.reset_optimizer && carried_adam
                         ? *carried_adam
                         : make_adam_state(model.encoder, config.adam);
    std::mt19937_64 shuffle_rng(stream_seed(config.seed, Stream::shuffle));
    std::mt19937_64 dim_rng(stream_seed(config.seed, Stream::dimension));

    // A warm start seeds Lloyd with the previous partition's means taken in
    // the current embedding, since the encoder has moved every point.
    auto cluster = [&](const Matrix& h, int iter, const ClusterResult* prev) {
        if (config.warm_start && prev) {
            return lloyd(h, cluster_means(h, prev->assignments, config.k), config.lloyd);
        }
        const std::uint64_t base = kmeans_seed(config.seed, iter);
        ClusterResult best;
        for (int restart = 0; restart < config.kmeans_restarts; ++restart) {
            const std::uint64_t s =
                restart == 0 ? base
                             : stream_seed(base, Stream::kmeans, static_cast<std::uint64_t>(restart));
            ClusterResult r = lloyd(h, init_centroids(h, config.k, config.kmeans_init, s), config.lloyd);
            if (restart == 0 || r.inertia < best.inertia) best = std::move(r);
        }
        return best;
    };
    auto score = [&](IterationRecord& rec, const ClusterResult& r) {
        if (!labels) return;
        rec.acc = acc(*labels, r.assignments);
        rec.nmi = nmi(*labels, r.assignments);
    };

    DekmResult out;
    std::optional<ClusterResult> prev;
    std::optional<IterationRecord> terminal;
    int iter = 0;
    for (; iter < config.max_outer_iters; ++iter) {
        const auto t0 = Clock::now();
        IterationRecord rec;
        rec.iter = iter;
        Matrix h = encode(model, x);
        ClusterResult r = cluster(h, iter, prev ? &*prev : nullptr);
        rec.inertia = r.inertia;
        score(rec, r);
        if (prev) rec.changed_fraction = changed_fraction(prev->assignments, r.assignments);

        if (rec.changed_fraction && *rec.changed_fraction < config.stop_fraction) {
            out.history.converged = true;
            rec.final = true;
            rec.seconds = seconds_since(t0);
            terminal = rec;
            out.clustering = std::move(r);
            out.embedding = std::move(h);
            break;
        }

        const TransformState transform = build_transform(within_class_scatter(h, r));
        const GreedyTargets targets = greedy_targets(h, transform, r, config.strategy, dim_rng);
        rec.l4 = representation_loss(h, targets);

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::size_t pos = n;
        for (std::size_t s = 0; s < steps; ++s) {
            if (pos >= n) {
                std::shuffle(order.begin(), order.end(), shuffle_rng);
                pos = 0;
            }
            const std::size_t count = std::min(batch, n - pos);
            const auto idx = std::span<const std::size_t>(order).subspan(pos, count);
            pos += count;
            representation_step(model, gather_rows(x, idx), gather_rows(targets.targets, idx),
                                 targets.projection, adam);
        }

        rec.seconds = seconds_since(t0);
        out.history.records.push_back(rec);
        if (on_iter) on_iter(rec);
        prev = std::move(r);
    }

    if (!terminal) {
        const auto t0 = Clock::now();
        IterationRecord rec;
        rec.iter = iter;
        rec.final = true;
        Matrix h = encode(model, x);
        ClusterResult r = cluster(h, iter, prev ? &*prev : nullptr);
        rec.inertia = r.inertia;
        score(rec, r);
        if (prev) rec.changed_fraction = changed_fraction(prev->assignments, r.assignments);
        rec.seconds = seconds_since(t0);
        terminal = rec;
        out.clustering = std::move(r);
        out.embedding = std::move(h);
        out.history.hit_max_iters = true;
    }
    out.history.records.push_back(*terminal);
    if (on_iter) on_iter(*terminal);
    out.model = std::move(model);
    return out;
}

}  // namespace dekm
