#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dekm/linalg.hpp"
#include "dekm/metrics.hpp"

namespace dekm {

struct Dataset {
    Matrix x;                           // n x d
    std::optional<LabelVector> labels;  // length n when present
    std::string name;
    nlohmann::json metadata = nlohmann::json::object();  // image shape, generator params, ...

    Index size() const { return x.rows(); }
};

/// Reads MNIST-layout IDX files (magic 0x00000803 images, 0x00000801 labels,
/// big-endian counts). Pixels are flattened row-major and scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

/// Writes an image IDX file from pixel bytes (n x rows*cols) and a label
/// IDX file. Used to build fixtures and subsets.
void save_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
              std::span<const std::uint8_t> pixels, std::span<const std::uint8_t> labels,
              std::uint32_t rows, std::uint32_t cols);

/// Comma-separated numeric rows; with `has_labels_column` the last column
/// holds integer labels. Lines starting with '#' are skipped.
Dataset load_csv(const std::filesystem::path& path, bool has_labels_column);

/// Shortest round-trip formatting, so save_csv -> load_csv is bit-exact.
void save_csv(const std::filesystem::path& path, const Matrix& x,
              const LabelVector* labels = nullptr, const std::string& comment = {});

/// Rescales each column to [0, 1]; constant columns become 0.
void normalize_minmax(Matrix& x);

/// Keeps `per_class` samples of each listed class, in file order, and
/// relabels them 0..classes.size()-1 in the order given.
Dataset select_classes(const Dataset& d, std::span<const int> classes, Index per_class);

struct SyntheticSpec {
    int k = 4;
    Index per_cluster_n = 500;
    Index latent_dim = 2;
    Index ambient_dim = 10;
    double separation = 6.0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

struct SyntheticData {
    Dataset dataset;  // ambient features in [0, 1]
    Matrix latent;    // n x latent_dim pre-lift coordinates
    Matrix latent_centres;
};

/// k unit-variance isotropic Gaussian clusters whose centres are pairwise at
/// least `separation` apart in latent space, lifted to ambient space by a
/// seeded affine map followed by tanh, then min-max scaled per feature.
SyntheticData gen_synthetic(const SyntheticSpec& spec);

}  // namespace dekm
