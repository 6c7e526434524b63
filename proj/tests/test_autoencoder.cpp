#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "dekm/autoencoder.hpp"
#include "dekm/errors.hpp"
#include "oracles.hpp"

using namespace dekm;
namespace fs = std::filesystem;

namespace {

AutoencoderModel single_layer(const Matrix& w, const RowVector& b) {
    AutoencoderModel m;
    m.encoder_dims = {w.rows(), w.cols()};
    m.encoder = {Layer{w, b, Activation::linear}};
    m.decoder = {Layer{Matrix::Zero(w.cols(), w.rows()), RowVector::Zero(w.rows()), Activation::linear}};
    return m;
}

bool same_layers(const std::vector<Layer>& a, const std::vector<Layer>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t l = 0; l < a.size(); ++l) {
        if (a[l].weight != b[l].weight || a[l].bias != b[l].bias || a[l].activation != b[l].activation)
            return false;
    }
    return true;
}

// Random biases so ReLU kinks are exercised away from zero inputs.
AutoencoderModel random_net(const std::vector<Index>& dims, std::uint64_t seed) {
    AutoencoderModel m = xavier_init(dims, seed);
    std::mt19937_64 rng(seed + 1000);
    for (auto* layers : {&m.encoder, &m.decoder})
        for (auto& l : *layers) l.bias = oracle::random_matrix(1, l.bias.size(), rng, -0.3, 0.3);
    return m;
}

// Rank-2 data: x = z A with z uniform in the unit square.
Matrix linear_fixture(Index n, Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return oracle::random_matrix(n, 2, rng, 0.0, 1.0) * oracle::random_matrix(2, d, rng);
}

fs::path temp_path(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "dekm_test_autoencoder";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("xavier_init respects the Glorot bound and zero biases") {
    const std::vector<Index> dims{4, 2};
    const AutoencoderModel m = xavier_init(dims, 11);
    for (const auto* layers : {&m.encoder, &m.decoder}) {
        for (const auto& l : *layers) {
            CHECK(l.weight.cwiseAbs().maxCoeff() <= 1.0);
            CHECK(l.bias.cwiseAbs().maxCoeff() == 0.0);
        }
    }
    const std::vector<Index> wide{30, 10};
    const double bound = std::sqrt(6.0 / 40.0);
    const AutoencoderModel w = xavier_init(wide, 3);
    CHECK(w.encoder[0].weight.cwiseAbs().maxCoeff() <= bound);
    // A uniform draw over 300 entries should come close to the bound.
    CHECK(w.encoder[0].weight.cwiseAbs().maxCoeff() > 0.9 * bound);
}

TEST_CASE("xavier_init is deterministic per seed") {
    const std::vector<Index> dims{6, 5, 3};
    const AutoencoderModel a = xavier_init(dims, 42), b = xavier_init(dims, 42), c = xavier_init(dims, 43);
    CHECK(same_layers(a.encoder, b.encoder));
    CHECK(same_layers(a.decoder, b.decoder));
    CHECK_FALSE(same_layers(a.encoder, c.encoder));
}

TEST_CASE("paper-sized network has the expected layer shapes and activations") {
    const std::vector<Index> dims{784, 500, 500, 2000, 10};
    const AutoencoderModel m = xavier_init(dims, 0);
    REQUIRE(m.encoder.size() == 4);
    CHECK(m.encoder[0].weight.rows() == 784);
    CHECK(m.encoder[0].weight.cols() == 500);
    CHECK(m.encoder[1].weight.cols() == 500);
    CHECK(m.encoder[2].weight.cols() == 2000);
    CHECK(m.encoder[3].weight.cols() == 10);
    CHECK(m.decoder_dims() == std::vector<Index>{10, 2000, 500, 500, 784});
    CHECK(m.decoder[0].weight.rows() == 10);
    CHECK(m.decoder[3].weight.cols() == 784);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(m.encoder[l].activation == Activation::relu);
        CHECK(m.decoder[l].activation == Activation::relu);
    }
    CHECK(m.encoder[3].activation == Activation::linear);
    CHECK(m.decoder[3].activation == Activation::linear);
    CHECK_NOTHROW(validate(m));
}

TEST_CASE("xavier_init rejects bad widths") {
    const std::vector<Index> zero{4, 0, 2}, single{4};
    CHECK_THROWS_AS(xavier_init(zero, 0), ConfigError);
    CHECK_THROWS_AS(xavier_init(single, 0), ConfigError);
}

TEST_CASE("validate catches a broken mirror") {
    const std::vector<Index> dims{5, 4, 2};
    AutoencoderModel m = xavier_init(dims, 0);
    m.decoder[0].weight = Matrix::Zero(2, 3);
    CHECK_THROWS_AS(validate(m), ConfigError);
}

TEST_CASE("encode of a zero network is zero") {
    const std::vector<Index> dims{5, 4, 3};
    AutoencoderModel m = xavier_init(dims, 0);
    for (auto& l : m.encoder) l.weight.setZero();
    std::mt19937_64 rng(1);
    CHECK(encode(m, oracle::random_matrix(7, 5, rng)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single linear layer computes x W + b") {
    std::mt19937_64 rng(2);
    const Matrix w = oracle::random_matrix(3, 2, rng);
    const RowVector b = oracle::random_matrix(1, 2, rng);
    const Matrix x = oracle::random_matrix(4, 3, rng);
    const Matrix expected = (x * w).rowwise() + b;
    CHECK((encode(single_layer(w, b), x) - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("forward pass matches the scalar oracle") {
    std::mt19937_64 rng(3);
    const AutoencoderModel m = random_net({6, 5, 4, 3}, 9);
    const Matrix x = oracle::random_matrix(10, 6, rng);
    const Matrix h = encode(m, x);
    const auto ref = oracle::hand_forward(m.encoder, x);
    double worst = 0.0;
    for (Index i = 0; i < h.rows(); ++i)
        for (Index j = 0; j < h.cols(); ++j)
            worst = std::max(worst, std::abs(h(i, j) - ref[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
    CHECK(worst < 1e-12);
}

TEST_CASE("encode rejects the wrong input width") {
    const std::vector<Index> dims{5, 2};
    CHECK_THROWS_AS(encode(xavier_init(dims, 0), Matrix::Zero(3, 4)), DimensionError);
}

TEST_CASE("reconstruction loss edge cases") {
    AutoencoderModel id = single_layer(Matrix::Identity(3, 3), RowVector::Zero(3));
    id.decoder[0].weight = Matrix::Identity(3, 3);
    std::mt19937_64 rng(4);
    CHECK(reconstruction_loss(id, oracle::random_matrix(5, 3, rng)) == 0.0);

    const std::vector<Index> dims{6, 4, 2};
    AutoencoderModel zero = xavier_init(dims, 0);
    for (auto* layers : {&zero.encoder, &zero.decoder})
        for (auto& l : *layers) l.weight.setZero();
    CHECK(reconstruction_loss(zero, Matrix::Ones(1, 6)) == 6.0);
}

TEST_CASE("reconstruction loss is the summed squared error") {
    std::mt19937_64 rng(5);
    const AutoencoderModel m = random_net({5, 4, 2}, 17);
    const Matrix x = oracle::random_matrix(9, 5, rng);
    const double direct = oracle::hand_loss(m, x, ReconstructionTarget{});
    CHECK(std::abs(reconstruction_loss(m, x) - direct) < 1e-12 * (1.0 + direct));
    const Matrix xhat = decode(m, encode(m, x));
    CHECK(std::abs(reconstruction_loss(m, x) - (x - xhat).squaredNorm()) < 1e-12);
}

TEST_CASE("backprop at a zero-loss point gives zero gradients") {
    std::mt19937_64 rng(6);
    const AutoencoderModel m = random_net({4, 3, 2}, 21);
    const Matrix x = oracle::random_matrix(5, 4, rng);
    const Gradients g = backprop(m, x, EmbeddingTarget{encode(m, x), std::nullopt});
    CHECK(g.loss == 0.0);
    CHECK(g.decoder.empty());
    for (const auto& lg : g.encoder) {
        CHECK(lg.weight.cwiseAbs().maxCoeff() == 0.0);
        CHECK(lg.bias.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("backprop of a linear layer matches the closed form") {
    std::mt19937_64 rng(7);
    const Matrix w = oracle::random_matrix(3, 2, rng);
    const Matrix x = oracle::random_matrix(6, 3, rng);
    const Matrix t = oracle::random_matrix(6, 2, rng);
    const Gradients g = backprop(single_layer(w, RowVector::Zero(2)), x, EmbeddingTarget{t, std::nullopt});
    const Matrix expected = 2.0 * x.transpose() * (x * w - t);
    CHECK((g.encoder[0].weight - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.encoder[0].bias - 2.0 * (x * w - t).colwise().sum()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.loss == doctest::Approx((x * w - t).squaredNorm()).epsilon(1e-14));
}

TEST_CASE("backprop matches central finite differences") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const AutoencoderModel m = random_net({5, 4, 3}, 100 + static_cast<std::uint64_t>(trial));
        const Matrix x = oracle::random_matrix(6, 5, rng);
        const Gradients gr = backprop(m, x, ReconstructionTarget{});
        CHECK(oracle::finite_difference_check(m, x, ReconstructionTarget{}, gr, 1e-5, 1e-6).max_relative_error < 1e-4);

        const Matrix v = sym_eig(oracle::random_symmetric(3, rng)).v;
        const EmbeddingTarget y{oracle::random_matrix(6, 3, rng), v};
        const Gradients gy = backprop(m, x, y);
        CHECK(oracle::finite_difference_check(m, x, y, gy, 1e-5, 1e-6).max_relative_error < 1e-4);

        const EmbeddingTarget h{oracle::random_matrix(6, 3, rng), std::nullopt};
        const Gradients gh = backprop(m, x, h);
        CHECK(oracle::finite_difference_check(m, x, h, gh, 1e-5, 1e-6).max_relative_error < 1e-4);
    }
}

TEST_CASE("backprop rejects mismatched targets") {
    const std::vector<Index> dims{4, 2};
    const AutoencoderModel m = xavier_init(dims, 0);
    const Matrix x = Matrix::Zero(3, 4);
    CHECK_THROWS_AS(backprop(m, x, EmbeddingTarget{Matrix::Zero(2, 2), std::nullopt}), DimensionError);
    CHECK_THROWS_AS(backprop(m, x, EmbeddingTarget{Matrix::Zero(3, 2), Matrix::Identity(3, 3)}), DimensionError);
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
    const std::vector<Index> dims{3, 2};
    AutoencoderModel m = xavier_init(dims, 1);
    const auto before = m.encoder;
    AdamState s = make_adam_state(m.encoder);
    std::vector<LayerGradient> zero{{Matrix::Zero(3, 2), RowVector::Zero(2)}};
    adam_step(m.encoder, zero, s);
    CHECK(same_layers(m.encoder, before));
    CHECK(s.step == 1);
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
    std::vector<Layer> layers{Layer{Matrix::Zero(1, 3), RowVector::Zero(3), Activation::linear}};
    AdamState s = make_adam_state(layers);
    Matrix g(1, 3);
    g << 0.5, -2.0, 1e-3;
    const std::vector<LayerGradient> grads{{g, RowVector::Zero(3)}};
    adam_step(layers, grads, s);
    for (Index j = 0; j < 3; ++j) {
        CHECK(layers[0].weight(0, j) == doctest::Approx(-1e-3 * (g(0, j) > 0 ? 1.0 : -1.0)).epsilon(1e-4));
    }
}

TEST_CASE("adam on w^2 matches a scalar reference trace") {
    std::vector<Layer> layers{Layer{Matrix::Constant(1, 1, 1.0), RowVector::Zero(1), Activation::linear}};
    AdamOptions o;
    o.lr = 0.1;
    AdamState s = make_adam_state(layers, o);
    const auto ref = oracle::adam_trace_quadratic(1.0, 3, o.lr, o.beta1, o.beta2, o.eps);
    for (int t = 0; t < 3; ++t) {
        const std::vector<LayerGradient> grads{{Matrix::Constant(1, 1, 2.0 * layers[0].weight(0, 0)), RowVector::Zero(1)}};
        adam_step(layers, grads, s);
        CHECK(std::abs(layers[0].weight(0, 0) - ref[static_cast<std::size_t>(t)]) < 1e-15);
    }
    CHECK(s.step == 3);
}

TEST_CASE("pretrain with zero epochs returns the model unchanged") {
    const std::vector<Index> dims{6, 4, 2};
    const AutoencoderModel m = xavier_init(dims, 5);
    PretrainOptions o;
    o.epochs = 0;
    const PretrainResult r = pretrain(m, linear_fixture(20, 6, 1), o);
    CHECK(same_layers(r.model.encoder, m.encoder));
    CHECK(same_layers(r.model.decoder, m.decoder));
    CHECK(r.epoch_losses.empty());
}

TEST_CASE("pretrain fits linearly embeddable data") {
    const Matrix x = linear_fixture(512, 8, 2);
    const std::vector<Index> dims{8, 16, 2};
    PretrainOptions o;
    o.epochs = 200;
    o.batch_size = 64;
    o.seed = 7;
    const PretrainResult r = pretrain(xavier_init(dims, 7), x, o);
    REQUIRE(r.epoch_losses.size() == 200);
    CHECK(r.epoch_losses.back() < 0.1 * r.initial_loss);
    int non_increasing = 0;
    double prev = r.initial_loss;
    for (double l : r.epoch_losses) {
        CHECK(std::isfinite(l));
        non_increasing += l <= prev;
        prev = l;
    }
    CHECK(non_increasing >= 180);
}

TEST_CASE("pretrain is deterministic per seed") {
    const Matrix x = linear_fixture(100, 6, 3);
    const std::vector<Index> dims{6, 5, 2};
    PretrainOptions o;
    o.epochs = 5;
    o.batch_size = 16;
    o.seed = 4;
    const PretrainResult a = pretrain(xavier_init(dims, 1), x, o);
    const PretrainResult b = pretrain(xavier_init(dims, 1), x, o);
    CHECK(same_layers(a.model.encoder, b.model.encoder));
    CHECK(same_layers(a.model.decoder, b.model.decoder));
    CHECK(a.epoch_losses == b.epoch_losses);
}

TEST_CASE("pretrain reports divergence") {
    const std::vector<Index> dims{4, 3, 2};
    PretrainOptions o;
    o.epochs = 20;
    o.batch_size = 4;
    o.adam.lr = 1e100;
    CHECK_THROWS_AS(pretrain(xavier_init(dims, 0), linear_fixture(16, 4, 5), o), DivergenceError);
    o.adam.lr = 1e-3;
    o.batch_size = 0;
    CHECK_THROWS_AS(pretrain(xavier_init(dims, 0), linear_fixture(16, 4, 5), o), ConfigError);
}

TEST_CASE("checkpoints round-trip bit-exactly in both formats") {
    AutoencoderModel m = random_net({7, 5, 3}, 77);
    m.metadata["note"] = "round trip";
    for (const char* name : {"model.bin", "model.json"}) {
        const fs::path p = temp_path(name);
        save_checkpoint(m, p);
        const AutoencoderModel back = load_checkpoint(p);
        CHECK(back.encoder_dims == m.encoder_dims);
        CHECK(back.seed == m.seed);
        CHECK(back.metadata == m.metadata);
        CHECK(same_layers(back.encoder, m.encoder));
        CHECK(same_layers(back.decoder, m.decoder));
    }
}

TEST_CASE("checkpoint loading rejects damaged files") {
    const AutoencoderModel m = random_net({4, 3, 2}, 1);
    const fs::path p = temp_path("damaged.bin");
    save_checkpoint(m, p);
    const auto size = fs::file_size(p);

    fs::resize_file(p, size - 8);
    CHECK_THROWS_AS(load_checkpoint(p), IoError);

    save_checkpoint(m, p);
    {
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(load_checkpoint(p), FormatError);
    CHECK_THROWS_AS(load_checkpoint(temp_path("missing.bin")), IoError);

    const fs::path j = temp_path("bad.json");
    std::ofstream(j) << "{\"format\": \"something-else\"}";
    CHECK_THROWS_AS(load_checkpoint(j), FormatError);
}
