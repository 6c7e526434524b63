#include "dekm/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dekm/errors.hpp"

namespace dekm {

std::vector<Index> AutoencoderModel::decoder_dims() const {
    return {encoder_dims.rbegin(), encoder_dims.rend()};
}

namespace {

Layer make_layer(Index fan_in, Index fan_out, Activation act, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Layer layer{Matrix(fan_in, fan_out), RowVector::Zero(fan_out), act};
    for (Index i = 0; i < fan_in; ++i) {
        for (Index j = 0; j < fan_out; ++j) layer.weight(i, j) = dist(rng);
    }
    return layer;
}

void check_input(std::span<const Layer> layers, const Matrix& x, const char* where) {
    if (layers.empty()) throw ConfigError(std::string(where) + ": network has no layers");
    if (x.cols() != layers.front().weight.rows()) {
        throw DimensionError(std::string(where) + ": input " + shape_of(x) +
                             " does not match first layer " + shape_of(layers.front().weight));
    }
}

// Pre-activations and activations of every layer; activations[0] is the input.
struct ForwardCache {
    std::vector<Matrix> pre;
    std::vector<Matrix> act;
};

ForwardCache forward_cached(std::span<const Layer> layers, const Matrix& x) {
    ForwardCache cache;
    cache.pre.reserve(layers.size());
    cache.act.reserve(layers.size() + 1);
    cache.act.push_back(x);
    for (const Layer& layer : layers) {
        Matrix z(cache.act.back().rows(), layer.weight.cols());
        z.noalias() = cache.act.back() * layer.weight;
        z.rowwise() += layer.bias;
        Matrix a = layer.activation == Activation::relu ? Matrix(z.cwiseMax(0.0)) : z;
        cache.pre.push_back(std::move(z));
        cache.act.push_back(std::move(a));
    }
    return cache;
}

// Propagates d(loss)/d(output) back through `layers`, filling per-layer
// gradients. Returns d(loss)/d(input) when `want_input_grad` is set.
Matrix backward(std::span<const Layer> layers, const ForwardCache& cache, Matrix grad_out,
                std::vector<LayerGradient>& grads, bool want_input_grad) {
    grads.resize(layers.size());
    for (std::size_t l = layers.size(); l-- > 0;) {
        const Layer& layer = layers[l];
        if (layer.activation == Activation::relu) {
            grad_out.array() *= (cache.pre[l].array() > 0.0).cast<double>();
        }
        grads[l].weight.noalias() = cache.act[l].transpose() * grad_out;
        grads[l].bias = grad_out.colwise().sum();
        if (l == 0 && !want_input_grad) return {};
        Matrix next(grad_out.rows(), layer.weight.rows());
        next.noalias() = grad_out * layer.weight.transpose();
        grad_out = std::move(next);
    }
    return grad_out;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

}  // namespace

AutoencoderModel xavier_init(std::span<const Index> encoder_dims, std::uint64_t seed) {
    if (encoder_dims.size() < 2) throw ConfigError("xavier_init: need at least two layer widths");
    for (Index w : encoder_dims) {
        if (w < 1) throw ConfigError("xavier_init: layer widths must be >= 1");
    }
    AutoencoderModel model;
    model.encoder_dims.assign(encoder_dims.begin(), encoder_dims.end());
    model.seed = seed;
    std::mt19937_64 rng(seed);
    const std::size_t depth = encoder_dims.size() - 1;
    for (std::size_t l = 0; l < depth; ++l) {
        const Activation act = l + 1 == depth ? Activation::linear : Activation::relu;
        model.encoder.push_back(make_layer(encoder_dims[l], encoder_dims[l + 1], act, rng));
    }
    const auto dec = model.decoder_dims();
    for (std::size_t l = 0; l < depth; ++l) {
        const Activation act = l + 1 == depth ? Activation::linear : Activation::relu;
        model.decoder.push_back(make_layer(dec[l], dec[l + 1], act, rng));
    }
    return model;
}

void validate(const AutoencoderModel& model) {
    const auto& dims = model.encoder_dims;
    if (dims.size() < 2) throw ConfigError("autoencoder: need at least two layer widths");
    const std::size_t depth = dims.size() - 1;
    if (model.encoder.size() != depth || model.decoder.size() != depth) {
        throw ConfigError("autoencoder: layer count does not match dims");
    }
    const auto dec = model.decoder_dims();
    for (std::size_t l = 0; l < depth; ++l) {
        const Layer& e = model.encoder[l];
        const Layer& d = model.decoder[l];
        if (e.weight.rows() != dims[l] || e.weight.cols() != dims[l + 1] ||
            e.bias.size() != dims[l + 1]) {
            throw ConfigError("autoencoder: encoder layer " + std::to_string(l) + " has shape " +
                              shape_of(e.weight));
        }
        if (d.weight.rows() != dec[l] || d.weight.cols() != dec[l + 1] ||
            d.bias.size() != dec[l + 1]) {
            throw ConfigError("autoencoder: decoder layer " + std::to_string(l) + " has shape " +
                              shape_of(d.weight));
        }
        if (!e.weight.allFinite() || !e.bias.allFinite() || !d.weight.allFinite() ||
            !d.bias.allFinite()) {
            throw NumericError("autoencoder: non-finite parameter in layer " + std::to_string(l));
        }
    }
}

Matrix forward(std::span<const Layer> layers, const Matrix& x) {
    check_input(layers, x, "forward");
    Matrix a = x;
    for (const Layer& layer : layers) {
        Matrix z(a.rows(), layer.weight.cols());
        z.noalias() = a * layer.weight;
        z.rowwise() += layer.bias;
        if (layer.activation == Activation::relu) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

Matrix encode(const AutoencoderModel& model, const Matrix& x) { return forward(model.encoder, x); }

Matrix decode(const AutoencoderModel& model, const Matrix& h) { return forward(model.decoder, h); }

double reconstruction_loss(const AutoencoderModel& model, const Matrix& x) {
    return (decode(model, encode(model, x)) - x).squaredNorm();
}

Gradients backprop(const AutoencoderModel& model, const Matrix& x, const TargetSpec& target) {
    check_input(model.encoder, x, "backprop");
    Gradients out;
    const ForwardCache enc = forward_cached(model.encoder, x);
    const Matrix& h = enc.act.back();

    Matrix grad_h;
    if (std::holds_alternative<ReconstructionTarget>(target)) {
        const ForwardCache dec = forward_cached(model.decoder, h);
        const Matrix residual = dec.act.back() - x;
        out.loss = residual.squaredNorm();
        grad_h = backward(model.decoder, dec, 2.0 * residual, out.decoder, true);
    } else {
        const auto& spec = std::get<EmbeddingTarget>(target);
        const Index width = spec.projection ? spec.projection->rows() : h.cols();
        if (spec.projection && spec.projection->cols() != h.cols()) {
            throw DimensionError("backprop: projection " + shape_of(*spec.projection) +
                                 " does not match embedding " + shape_of(h));
        }
        if (spec.targets.rows() != h.rows() || spec.targets.cols() != width) {
            throw DimensionError("backprop: targets " + shape_of(spec.targets) +
                                 " do not match embedding output " + std::to_string(h.rows()) +
                                 "x" + std::to_string(width));
        }
        if (spec.projection) {
            const Matrix residual = h * spec.projection->transpose() - spec.targets;
            out.loss = residual.squaredNorm();
            grad_h = 2.0 * residual * *spec.projection;
        } else {
            const Matrix residual = h - spec.targets;
            out.loss = residual.squaredNorm();
            grad_h = 2.0 * residual;
        }
    }
    backward(model.encoder, enc, std::move(grad_h), out.encoder, false);
    return out;
}

AdamState make_adam_state(std::span<const Layer> layers, const AdamOptions& options) {
    AdamState state;
    state.options = options;
    for (const Layer& layer : layers) {
        LayerGradient zero{Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                           RowVector::Zero(layer.bias.size())};
        state.first_moment.push_back(zero);
        state.second_moment.push_back(std::move(zero));
    }
    return state;
}

void adam_step(std::span<Layer> layers, std::span<const LayerGradient> grads, AdamState& state) {
    if (grads.size() != layers.size() || state.first_moment.size() != layers.size()) {
        throw DimensionError("adam_step: " + std::to_string(layers.size()) + " layers but " +
                             std::to_string(grads.size()) + " gradients and " +
                             std::to_string(state.first_moment.size()) + " moment slots");
    }
    const AdamOptions& o = state.options;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correct1 = 1.0 - std::pow(o.beta1, t);
    const double correct2 = 1.0 - std::pow(o.beta2, t);

    auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
        if (grad.rows() != param.rows() || grad.cols() != param.cols()) {
            throw DimensionError("adam_step: gradient shape " + std::to_string(grad.rows()) + "x" +
                                 std::to_string(grad.cols()) + " vs parameter " +
                                 std::to_string(param.rows()) + "x" +
                                 std::to_string(param.cols()));
        }
        m = o.beta1 * m + (1.0 - o.beta1) * grad;
        v = o.beta2 * v + (1.0 - o.beta2) * grad.cwiseProduct(grad);
        param.array() -= o.lr * (m.array() / correct1) /
                         ((v.array() / correct2).sqrt() + o.eps);
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weight, grads[l].weight, state.first_moment[l].weight,
               state.second_moment[l].weight);
        update(layers[l].bias, grads[l].bias, state.first_moment[l].bias,
               state.second_moment[l].bias);
    }
}

PretrainResult pretrain(AutoencoderModel model, const Matrix& x, const PretrainOptions& options,
                        const EpochCallback& on_epoch) {
    if (options.batch_size < 1) throw ConfigError("pretrain: batch_size must be >= 1");
    if (options.epochs < 0) throw ConfigError("pretrain: epochs must be >= 0");
    validate(model);
    check_input(model.encoder, x, "pretrain");

    PretrainResult result;
    result.initial_loss = reconstruction_loss(model, x);
    if (!std::isfinite(result.initial_loss)) {
        throw DivergenceError("pretrain: non-finite loss before training");
    }
    AdamState enc_state = make_adam_state(model.encoder, options.adam);
    AdamState dec_state = make_adam_state(model.decoder, options.adam);
    std::mt19937_64 rng(options.seed);
    const auto n = static_cast<std::size_t>(x.rows());
    const auto batch = static_cast<std::size_t>(options.batch_size);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const auto order = shuffled_indices(n, rng);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            const Matrix xb =
                gather_rows(x, std::span<const std::size_t>(order).subspan(start, count));
            const Gradients g = backprop(model, xb, ReconstructionTarget{});
            if (!std::isfinite(g.loss)) {
                throw DivergenceError("pretrain: non-finite loss in epoch " +
                                      std::to_string(epoch + 1));
            }
            adam_step(model.encoder, g.encoder, enc_state);
            adam_step(model.decoder, g.decoder, dec_state);
        }
        const double loss = reconstruction_loss(model, x);
        if (!std::isfinite(loss)) {
            throw DivergenceError("pretrain: non-finite loss after epoch " +
                                  std::to_string(epoch + 1));
        }
        result.epoch_losses.push_back(loss);
        if (on_epoch) on_epoch(epoch + 1, loss);
    }
    model.metadata["pretrain"] = {{"epochs", options.epochs},
                                  {"batch_size", options.batch_size},
                                  {"lr", options.adam.lr},
                                  {"beta1", options.adam.beta1},
                                  {"beta2", options.adam.beta2},
                                  {"eps", options.adam.eps},
                                  {"seed", options.seed},
                                  {"initial_loss", result.initial_loss},
                                  {"final_loss", result.epoch_losses.empty()
                                                     ? result.initial_loss
                                                     : result.epoch_losses.back()}};
    result.model = std::move(model);
    result.encoder_adam = std::move(enc_state);
    return result;
}

}  // namespace dekm
