#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dekm/autoencoder.hpp"
#include "dekm/data.hpp"
#include "dekm/dekm.hpp"

namespace dekm {

struct DatasetSpec {
    std::string type = "synthetic";  // synthetic | idx | csv
    std::string images;              // idx
    std::string labels;              // idx
    std::string path;                // csv
    bool has_labels = true;          // csv
    bool normalize = false;          // min-max scale features after loading
    std::vector<int> classes;        // optional class subset
    Index per_class = 0;             // samples kept per class when `classes` is set
    SyntheticSpec synthetic;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::vector<Index> hidden = {500, 500, 2000};
    Index embedding_dim = 0;  // 0: number of clusters
    PretrainOptions pretrain;
    DekmConfig dekm;
    int repeats = 3;
    std::string out = "out";
    std::uint64_t seed = 0;
    std::string checkpoint;       // pretrained model to start from
    bool inline_pretrain = false;  // pretrain each repeat before clustering

    /// Fills defaults that depend on other fields (k, embedding width) and
    /// checks everything; throws ConfigError. Touches no files.
    void resolve();

    std::vector<Index> encoder_dims(Index input_dim) const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Applies a dotted-path override such as ("dekm.k", "4"). The value is
/// parsed as JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& dotted_key,
                    const std::string& value);

/// Reads an optional config file, applies overrides in order, resolves.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::pair<std::string, std::string>>& overrides);

Dataset load_dataset(const ExperimentConfig& config);

struct PretrainOutcome {
    std::filesystem::path checkpoint;
    std::filesystem::path loss_csv;
    PretrainResult result;
};

/// Writes <out>/checkpoint.bin and <out>/loss.csv.
PretrainOutcome cmd_pretrain(const ExperimentConfig& config);

struct RunOutcome {
    nlohmann::json results;  // contents of results.json
    std::vector<DekmResult> runs;
};

/// Writes results.json, history.jsonl, embedding.csv and assignments.csv.
RunOutcome cmd_run(const ExperimentConfig& config);

struct AblationOutcome {
    nlohmann::json results;
    std::vector<std::string> variants;
    std::vector<std::vector<double>> mean_acc_curves;  // per variant, padded to equal length
};

/// Runs every strategy (plus full-batch last_dim_Y) from the same pretrained
/// models and seeds. Writes ablation.csv, results.json and one history per
/// variant.
AblationOutcome cmd_ablate(const ExperimentConfig& config);

/// One integer label per line (or first CSV column); '#' lines skipped.
LabelVector read_label_file(const std::filesystem::path& path);

/// Writes <out_dir>/metrics.json when out_dir is non-empty.
nlohmann::json cmd_eval(const std::filesystem::path& labels_path,
                        const std::filesystem::path& assignments_path,
                        const std::filesystem::path& out_dir = {});

/// Writes <out>/synthetic.csv (features plus label column) and
/// <out>/synthetic.json with the generator parameters.
std::filesystem::path cmd_gen_synth(const ExperimentConfig& config);

}  // namespace dekm
