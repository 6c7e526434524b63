#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dekm/linalg.hpp"

namespace dekm {

enum class Activation { linear, relu };

// Fully connected layer acting on row vectors: out = act(in * weight + bias).
struct Layer {
    Matrix weight;  // fan_in x fan_out
    RowVector bias;
    Activation activation = Activation::linear;
};

// MLP autoencoder. The decoder mirrors the encoder; intermediate layers are
// ReLU, the embedding and reconstruction layers are linear.
struct AutoencoderModel {
    std::vector<Index> encoder_dims;  // d, ..., e
    std::vector<Layer> encoder;
    std::vector<Layer> decoder;
    std::uint64_t seed = 0;
    nlohmann::json metadata = nlohmann::json::object();

    Index input_dim() const { return encoder_dims.front(); }
    Index embedding_dim() const { return encoder_dims.back(); }
    std::vector<Index> decoder_dims() const;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
AutoencoderModel xavier_init(std::span<const Index> encoder_dims, std::uint64_t seed);

/// Checks the mirror/conformability invariants; throws ConfigError.
void validate(const AutoencoderModel& model);

Matrix forward(std::span<const Layer> layers, const Matrix& x);
Matrix encode(const AutoencoderModel& model, const Matrix& x);
Matrix decode(const AutoencoderModel& model, const Matrix& h);

/// Sum over samples of ||x_i - g(f(x_i))||^2.
double reconstruction_loss(const AutoencoderModel& model, const Matrix& x);

struct LayerGradient {
    Matrix weight;
    RowVector bias;
};

struct ReconstructionTarget {};

// Squared error between the (optionally projected) embedding and a target:
// ||f(x) P^T - targets||^2, with P = projection when present. Only the
// encoder participates.
struct EmbeddingTarget {
    Matrix targets;
    std::optional<Matrix> projection;
};

using TargetSpec = std::variant<ReconstructionTarget, EmbeddingTarget>;

struct Gradients {
    double loss = 0.0;
    std::vector<LayerGradient> encoder;
    std::vector<LayerGradient> decoder;  // empty for embedding targets
};

Gradients backprop(const AutoencoderModel& model, const Matrix& x, const TargetSpec& target);

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamOptions options;
    std::uint64_t step = 0;
    std::vector<LayerGradient> first_moment;
    std::vector<LayerGradient> second_moment;
};

AdamState make_adam_state(std::span<const Layer> layers, const AdamOptions& options = {});

/// One bias-corrected Adam update of `layers`; increments state.step.
void adam_step(std::span<Layer> layers, std::span<const LayerGradient> grads, AdamState& state);

struct PretrainOptions {
    int epochs = 200;
    Index batch_size = 256;
    AdamOptions adam;
    std::uint64_t seed = 0;
};

struct PretrainResult {
    AutoencoderModel model;
    double initial_loss = 0.0;
    std::vector<double> epoch_losses;  // full-data reconstruction loss after each epoch
    AdamState encoder_adam;            // optimizer state of the encoder at the end
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Mini-batch Adam on the reconstruction loss. Throws DivergenceError on a
/// non-finite loss.
PretrainResult pretrain(AutoencoderModel model, const Matrix& x, const PretrainOptions& options,
                        const EpochCallback& on_epoch = {});

// Checkpoints: `.json` paths get a JSON document, anything else a versioned
// binary container (JSON header followed by raw little-endian doubles).
// Parameters round-trip bit-exactly in both formats.
void save_checkpoint(const AutoencoderModel& model, const std::filesystem::path& path);
AutoencoderModel load_checkpoint(const std::filesystem::path& path);

}  // namespace dekm
