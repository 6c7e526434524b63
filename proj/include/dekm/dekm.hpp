#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dekm/autoencoder.hpp"
#include "dekm/kmeans.hpp"
#include "dekm/linalg.hpp"
#include "dekm/metrics.hpp"

namespace dekm {

// Which coordinates are pulled toward the assigned centroid during the
// representation update, and in which space (Y = H V^T, or H itself).
enum class Strategy { last_dim_Y, random_dim_Y, all_dims_Y, random_dim_H, all_dims_H };
enum class BatchMode { mini_batch, full_batch };

std::string_view to_string(Strategy s);
std::string_view to_string(BatchMode m);
Strategy parse_strategy(std::string_view tag);   // ConfigError on unknown tags
BatchMode parse_batch_mode(std::string_view tag);
bool in_y_space(Strategy s);

inline constexpr Strategy kAllStrategies[] = {Strategy::last_dim_Y, Strategy::random_dim_Y,
                                              Strategy::all_dims_Y, Strategy::random_dim_H,
                                              Strategy::all_dims_H};

struct DekmConfig {
    int k = 0;
    int max_outer_iters = 100;
    Index inner_batch_size = 256;
    int inner_steps = 0;  // 0: one pass over the data per outer iteration
    Strategy strategy = Strategy::last_dim_Y;
    BatchMode batch_mode = BatchMode::mini_batch;
    double stop_fraction = 0.001;
    std::uint64_t seed = 0;
    AdamOptions adam;
    bool reset_optimizer = true;
    bool warm_start = false;
    KMeansInit kmeans_init = KMeansInit::kmeanspp;
    int kmeans_restarts = 10;  // seeded k-means++ runs per clustering, lowest inertia kept
    LloydOptions lloyd;

    void validate() const;  // throws ConfigError
};

/// Eigenbasis of a within-class scatter matrix, rows ascending by eigenvalue.
TransformState build_transform(const Matrix& s_w);

struct GreedyTargets {
    Matrix targets;                // n x e, in Y space or H space
    std::optional<Matrix> projection;  // V for Y-space strategies
    int dimension = -1;            // replaced coordinate, -1 for all coordinates
};

/// Builds the per-sample regression targets for one outer iteration.
/// Single-dimension strategies copy the current point and replace one
/// coordinate with the centroid's; all-dimension strategies use the
/// centroid itself. `rng` is consumed only by the random_dim strategies.
GreedyTargets greedy_targets(const Matrix& h, const TransformState& t, const ClusterResult& r,
                             Strategy strategy, std::mt19937_64& rng);

/// Objective ||h P^T - targets||^2 (P = projection or identity), summed over samples.
double representation_loss(const Matrix& h, const GreedyTargets& targets);

/// One Adam step on the encoder only. The decoder is never touched.
/// Returns the batch loss before the step.
double representation_step(AutoencoderModel& model, const Matrix& x_batch,
                           const Matrix& targets_batch, const std::optional<Matrix>& projection,
                           AdamState& encoder_adam);

/// True iff the fraction of samples whose cluster changed, after aligning
/// labels with the Hungarian matching, is below stop_fraction.
bool should_stop(std::span<const int> prev_assignments, std::span<const int> assignments,
                 double stop_fraction);

/// Fraction of samples that changed cluster after optimal label alignment.
double changed_fraction(std::span<const int> prev_assignments, std::span<const int> assignments);

struct IterationRecord {
    int iter = 0;
    double inertia = 0.0;
    std::optional<double> l4;                // objective before the update
    std::optional<double> changed_fraction;  // vs the previous outer iteration
    std::optional<double> acc;
    std::optional<double> nmi;
    double seconds = 0.0;
    bool final = false;
};

struct RunHistory {
    std::vector<IterationRecord> records;
    bool converged = false;
    bool hit_max_iters = false;
};

nlohmann::json to_json(const IterationRecord& r);
std::string to_jsonl(const RunHistory& h);

struct DekmResult {
    ClusterResult clustering;
    AutoencoderModel model;
    RunHistory history;
    Matrix embedding;  // final H
};

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Alternates encode -> K-means -> scatter eigenbasis -> encoder update
/// until the assignment change falls below stop_fraction or
/// max_outer_iters is reached, then returns a terminal clustering.
/// With reset_optimizer unset, `carried_adam` (the pretraining encoder
/// state) seeds the encoder optimizer; otherwise it starts fresh.
DekmResult run_dekm(AutoencoderModel model, const Matrix& x, const DekmConfig& config,
                    const LabelVector* labels = nullptr, const IterationCallback& on_iter = {},
                    const AdamState* carried_adam = nullptr);

/// Seed used for K-means at outer iteration `iter` of a run seeded `seed`.
std::uint64_t kmeans_seed(std::uint64_t seed, int iter);

}  // namespace dekm
