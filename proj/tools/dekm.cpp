#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "dekm/errors.hpp"
#include "dekm/experiment.hpp"

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> iters;
    std::optional<std::string> strategy;
    std::optional<std::string> batch_mode;
    std::optional<int> repeats;
    std::optional<std::string> checkpoint;
    bool pretrain = false;
    std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "Base seed; repeats use seed, seed+1, ...");
    app->add_option("--out", c.out, "Output directory");
    app->add_option("--iters", c.iters, "Maximum outer DEKM iterations (0: AE+K-means baseline)");
    app->add_option("--strategy", c.strategy,
                    "last_dim_Y | random_dim_Y | all_dims_Y | random_dim_H | all_dims_H");
    app->add_option("--batch-mode", c.batch_mode, "mini_batch | full_batch");
    app->add_option("--repeats", c.repeats, "Independent repeats");
    app->add_option("--checkpoint", c.checkpoint, "Pretrained autoencoder to start from");
    app->add_flag("--pretrain", c.pretrain, "Pretrain the autoencoder inline for each repeat");
    app->add_option("--set", c.sets, "Config override key=value, dotted keys (e.g. dekm.k=4)");
}

std::vector<std::pair<std::string, std::string>> overrides_of(const Common& c) {
    std::vector<std::pair<std::string, std::string>> o;
    if (c.seed) o.emplace_back("seed", std::to_string(*c.seed));
    if (c.out) o.emplace_back("out", nlohmann::json(*c.out).dump());
    if (c.iters) o.emplace_back("dekm.max_outer_iters", std::to_string(*c.iters));
    if (c.strategy) o.emplace_back("dekm.strategy", nlohmann::json(*c.strategy).dump());
    if (c.batch_mode) o.emplace_back("dekm.batch_mode", nlohmann::json(*c.batch_mode).dump());
    if (c.repeats) o.emplace_back("repeats", std::to_string(*c.repeats));
    if (c.checkpoint) o.emplace_back("checkpoint", nlohmann::json(*c.checkpoint).dump());
    if (c.pretrain) o.emplace_back("pretrain_inline", "true");
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw dekm::ConfigError("--set expects key=value, got '" + s + "'");
        o.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return o;
}

void apply_thread_limit() {
    if (const char* env = std::getenv("DEKM_THREADS")) {
        const int n = std::atoi(env);
        if (n < 1) throw dekm::ConfigError(std::string("DEKM_THREADS must be a positive integer, got '") + env + "'");
        Eigen::setNbThreads(n);
    }
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const dekm::ConfigError*>(&e)) return 2;
    if (dynamic_cast<const dekm::IoError*>(&e)) return 3;
    if (dynamic_cast<const dekm::FormatError*>(&e)) return 4;
    if (dynamic_cast<const dekm::DimensionError*>(&e)) return 5;
    if (dynamic_cast<const dekm::NumericError*>(&e)) return 6;
    return 1;
}

void print_summary(const nlohmann::json& aggregate) {
    for (const auto& [key, value] : aggregate.items()) {
        if (value.contains("mean")) {
            std::cout << key << ": " << value["mean"].get<double>() << " +/- "
                      << value["std"].get<double>() << '\n';
        } else {
            std::cout << key << ":\n";
            for (const auto& [k2, v2] : value.items()) {
                std::cout << "  " << k2 << ": " << v2["mean"].get<double>() << " +/- "
                          << v2["std"].get<double>() << '\n';
            }
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep Embedded K-Means: pretrain, cluster, ablate and evaluate"};
    app.require_subcommand(1);

    Common pre, run, abl, syn;
    auto* pretrain_cmd = app.add_subcommand("pretrain", "Pretrain the autoencoder on reconstruction loss");
    add_common(pretrain_cmd, pre);
    auto* run_cmd = app.add_subcommand("run", "Run DEKM and report ACC/NMI over repeats");
    add_common(run_cmd, run);
    auto* ablate_cmd = app.add_subcommand("ablate", "Compare representation update strategies");
    add_common(ablate_cmd, abl);
    auto* synth_cmd = app.add_subcommand("gen-synth", "Write the seeded synthetic dataset as CSV");
    add_common(synth_cmd, syn);

    std::string labels_path, assignments_path, eval_out;
    auto* eval_cmd = app.add_subcommand("eval", "Score an assignment file against ground-truth labels");
    eval_cmd->add_option("--labels", labels_path, "Ground-truth label file")->required();
    eval_cmd->add_option("--assignments", assignments_path, "Cluster assignment file")->required();
    eval_cmd->add_option("--out", eval_out, "Directory for metrics.json");

    CLI11_PARSE(app, argc, argv);

    try {
        apply_thread_limit();
        if (*pretrain_cmd) {
            const auto config = dekm::load_config(pre.config, overrides_of(pre));
            const auto outcome = dekm::cmd_pretrain(config);
            const auto& losses = outcome.result.epoch_losses;
            std::cout << "checkpoint: " << outcome.checkpoint.string() << '\n'
                      << "final loss: " << (losses.empty() ? outcome.result.initial_loss : losses.back())
                      << '\n';
        } else if (*run_cmd) {
            const auto config = dekm::load_config(run.config, overrides_of(run));
            const auto outcome = dekm::cmd_run(config);
            print_summary(outcome.results["aggregate"]);
        } else if (*ablate_cmd) {
            const auto config = dekm::load_config(abl.config, overrides_of(abl));
            const auto outcome = dekm::cmd_ablate(config);
            print_summary(outcome.results["aggregate"]);
        } else if (*synth_cmd) {
            const auto config = dekm::load_config(syn.config, overrides_of(syn));
            std::cout << dekm::cmd_gen_synth(config).string() << '\n';
        } else if (*eval_cmd) {
            const auto metrics = dekm::cmd_eval(labels_path, assignments_path, eval_out);
            std::cout << "acc: " << metrics["acc"].get<double>() << '\n'
                      << "nmi: " << metrics["nmi"].get<double>() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "dekm: " << e.what() << '\n';
        return exit_code(e);
    }
    return 0;
}
