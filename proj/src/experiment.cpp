#include "dekm/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "dekm/errors.hpp"

namespace dekm {

namespace fs = std::filesystem;

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!keys.count(key)) {
            throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& field) {
    if (!j.contains(key)) return;
    try {
        field = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

const char* init_name(KMeansInit m) { return m == KMeansInit::kmeanspp ? "kmeans++" : "random"; }

KMeansInit parse_init(const std::string& s) {
    if (s == "kmeans++") return KMeansInit::kmeanspp;
    if (s == "random") return KMeansInit::random;
    throw ConfigError("unknown kmeans init '" + s + "' (expected kmeans++ or random)");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

std::string provenance(const ExperimentConfig& c) {
    return json{{"config", c.to_json()}, {"seed", c.seed}}.dump();
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1); 0 for a single value.
double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

json summarize(const std::vector<double>& v) {
    return {{"mean", mean_of(v)}, {"std", std_of(v)}, {"values", v}};
}

// Model a repeat starts from: the configured checkpoint, or a fresh
// Xavier network pretrained with the repeat's seed.
struct StartingPoint {
    AutoencoderModel model;
    std::optional<AdamState> encoder_adam;
    std::vector<double> epoch_losses;
    double seconds = 0.0;
};

StartingPoint starting_model(const ExperimentConfig& c, const Dataset& data, std::uint64_t seed) {
    const auto t0 = Clock::now();
    StartingPoint sp;
    if (!c.checkpoint.empty()) {
        sp.model = load_checkpoint(c.checkpoint);
        if (sp.model.input_dim() != data.x.cols()) {
            throw ConfigError("checkpoint input width " + std::to_string(sp.model.input_dim()) +
                              " does not match data width " + std::to_string(data.x.cols()));
        }
    } else {
        PretrainOptions p = c.pretrain;
        p.seed = seed;
        const auto dims = c.encoder_dims(data.x.cols());
        PretrainResult r = pretrain(xavier_init(dims, seed), data.x, p);
        sp.model = std::move(r.model);
        sp.encoder_adam = std::move(r.encoder_adam);
        sp.epoch_losses = std::move(r.epoch_losses);
    }
    sp.seconds = seconds_since(t0);
    return sp;
}

json run_summary(const DekmResult& r, const Dataset& data) {
    const IterationRecord& first = r.history.records.front();
    const IterationRecord& last = r.history.records.back();
    json s = {{"outer_iterations", last.iter},
              {"converged", r.history.converged},
              {"initial", {{"inertia", first.inertia}}},
              {"final", {{"inertia", last.inertia}}}};
    if (data.labels) {
        s["initial"]["acc"] = *first.acc;
        s["initial"]["nmi"] = *first.nmi;
        s["final"]["acc"] = *last.acc;
        s["final"]["nmi"] = *last.nmi;
    }
    return s;
}

void write_history(const fs::path& path, const ExperimentConfig& c,
                   const std::vector<std::pair<int, const RunHistory*>>& runs) {
    std::string text = json{{"record", "config"}, {"config", c.to_json()}, {"seed", c.seed}}.dump();
    text += '\n';
    for (const auto& [repeat, history] : runs) {
        for (const auto& rec : history->records) {
            json line = to_json(rec);
            line["repeat"] = repeat;
            text += line.dump();
            text += '\n';
        }
    }
    write_text(path, text);
}

}  // namespace

void ExperimentConfig::resolve() {
    const auto& d = dataset;
    if (d.type == "idx") {
        if (d.images.empty() || d.labels.empty()) {
            throw ConfigError("dataset: idx needs both 'images' and 'labels'");
        }
    } else if (d.type == "csv") {
        if (d.path.empty()) throw ConfigError("dataset: csv needs 'path'");
    } else if (d.type != "synthetic") {
        throw ConfigError("dataset: unknown type '" + d.type + "' (expected synthetic, idx, csv)");
    }
    if (!d.classes.empty() && d.per_class < 1) {
        throw ConfigError("dataset: 'per_class' must be >= 1 when 'classes' is set");
    }
    if (dekm.k == 0) {
        if (!d.classes.empty()) {
            dekm.k = static_cast<int>(d.classes.size());
        } else if (d.type == "synthetic") {
            dekm.k = d.synthetic.k;
        } else {
            throw ConfigError("dekm.k must be set for this dataset");
        }
    }
    if (embedding_dim == 0) embedding_dim = dekm.k;
    if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
    for (Index w : hidden) {
        if (w < 1) throw ConfigError("hidden layer widths must be >= 1");
    }
    if (pretrain.epochs < 0) throw ConfigError("pretrain.epochs must be >= 0");
    if (pretrain.batch_size < 1) throw ConfigError("pretrain.batch_size must be >= 1");
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    if (out.empty()) throw ConfigError("out must be a directory path");
    dekm.seed = seed;
    pretrain.seed = seed;
    dekm.validate();
}

std::vector<Index> ExperimentConfig::encoder_dims(Index input_dim) const {
    std::vector<Index> dims{input_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(embedding_dim);
    return dims;
}

json ExperimentConfig::to_json() const {
    const auto& d = dataset;
    return {
        {"dataset",
         {{"type", d.type},
          {"images", d.images},
          {"labels", d.labels},
          {"path", d.path},
          {"has_labels", d.has_labels},
          {"normalize", d.normalize},
          {"classes", d.classes},
          {"per_class", d.per_class},
          {"synthetic", d.synthetic.to_json()}}},
        {"hidden", hidden},
        {"embedding_dim", embedding_dim},
        {"pretrain",
         {{"epochs", pretrain.epochs},
          {"batch_size", pretrain.batch_size},
          {"lr", pretrain.adam.lr},
          {"beta1", pretrain.adam.beta1},
          {"beta2", pretrain.adam.beta2},
          {"eps", pretrain.adam.eps}}},
        {"dekm",
         {{"k", dekm.k},
          {"max_outer_iters", dekm.max_outer_iters},
          {"inner_batch_size", dekm.inner_batch_size},
          {"inner_steps", dekm.inner_steps},
          {"strategy", std::string(to_string(dekm.strategy))},
          {"batch_mode", std::string(to_string(dekm.batch_mode))},
          {"stop_fraction", dekm.stop_fraction},
          {"lr", dekm.adam.lr},
          {"beta1", dekm.adam.beta1},
          {"beta2", dekm.adam.beta2},
          {"eps", dekm.adam.eps},
          {"reset_optimizer", dekm.reset_optimizer},
          {"warm_start", dekm.warm_start},
          {"kmeans_init", init_name(dekm.kmeans_init)},
          {"kmeans_restarts", dekm.kmeans_restarts},
          {"kmeans_max_iter", dekm.lloyd.max_iter},
          {"kmeans_tol", dekm.lloyd.tol}}},
        {"repeats", repeats},
        {"out", out},
        {"seed", seed},
        {"checkpoint", checkpoint},
        {"pretrain_inline", inline_pretrain}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    reject_unknown(j,
                   {"dataset", "hidden", "embedding_dim", "pretrain", "dekm", "repeats", "out",
                    "seed", "checkpoint", "pretrain_inline"},
                   "config");
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        reject_unknown(d,
                       {"type", "images", "labels", "path", "has_labels", "normalize", "classes",
                        "per_class", "synthetic"},
                       "dataset");
        read(d, "type", c.dataset.type);
        read(d, "images", c.dataset.images);
        read(d, "labels", c.dataset.labels);
        read(d, "path", c.dataset.path);
        read(d, "has_labels", c.dataset.has_labels);
        read(d, "normalize", c.dataset.normalize);
        read(d, "classes", c.dataset.classes);
        read(d, "per_class", c.dataset.per_class);
        if (d.contains("synthetic")) {
            const json& s = d.at("synthetic");
            reject_unknown(s, {"k", "per_cluster_n", "latent_dim", "ambient_dim", "separation", "seed"},
                           "dataset.synthetic");
            auto& syn = c.dataset.synthetic;
            read(s, "k", syn.k);
            read(s, "per_cluster_n", syn.per_cluster_n);
            read(s, "latent_dim", syn.latent_dim);
            read(s, "ambient_dim", syn.ambient_dim);
            read(s, "separation", syn.separation);
            read(s, "seed", syn.seed);
        }
    }
    read(j, "hidden", c.hidden);
    read(j, "embedding_dim", c.embedding_dim);
    if (j.contains("pretrain")) {
        const json& p = j.at("pretrain");
        reject_unknown(p, {"epochs", "batch_size", "lr", "beta1", "beta2", "eps"}, "pretrain");
        read(p, "epochs", c.pretrain.epochs);
        read(p, "batch_size", c.pretrain.batch_size);
        read(p, "lr", c.pretrain.adam.lr);
        read(p, "beta1", c.pretrain.adam.beta1);
        read(p, "beta2", c.pretrain.adam.beta2);
        read(p, "eps", c.pretrain.adam.eps);
    }
    if (j.contains("dekm")) {
        const json& k = j.at("dekm");
        reject_unknown(k,
                       {"k", "max_outer_iters", "inner_batch_size", "inner_steps", "strategy",
                        "batch_mode", "stop_fraction", "lr", "beta1", "beta2", "eps",
                        "reset_optimizer", "warm_start", "kmeans_init", "kmeans_restarts", "kmeans_max_iter",
                        "kmeans_tol"},
                       "dekm");
        read(k, "k", c.dekm.k);
        read(k, "max_outer_iters", c.dekm.max_outer_iters);
        read(k, "inner_batch_size", c.dekm.inner_batch_size);
        read(k, "inner_steps", c.dekm.inner_steps);
        std::string tag;
        if (k.contains("strategy")) {
            read(k, "strategy", tag);
            c.dekm.strategy = parse_strategy(tag);
        }
        if (k.contains("batch_mode")) {
            read(k, "batch_mode", tag);
            c.dekm.batch_mode = parse_batch_mode(tag);
        }
        read(k, "stop_fraction", c.dekm.stop_fraction);
        read(k, "lr", c.dekm.adam.lr);
        read(k, "beta1", c.dekm.adam.beta1);
        read(k, "beta2", c.dekm.adam.beta2);
        read(k, "eps", c.dekm.adam.eps);
        read(k, "reset_optimizer", c.dekm.reset_optimizer);
        read(k, "warm_start", c.dekm.warm_start);
        if (k.contains("kmeans_init")) {
            read(k, "kmeans_init", tag);
            c.dekm.kmeans_init = parse_init(tag);
        }
        read(k, "kmeans_restarts", c.dekm.kmeans_restarts);
        read(k, "kmeans_max_iter", c.dekm.lloyd.max_iter);
        read(k, "kmeans_tol", c.dekm.lloyd.tol);
    }
    read(j, "repeats", c.repeats);
    read(j, "out", c.out);
    read(j, "seed", c.seed);
    read(j, "checkpoint", c.checkpoint);
    read(j, "pretrain_inline", c.inline_pretrain);
    return c;
}

void apply_override(json& config, const std::string& dotted_key, const std::string& value) {
    if (dotted_key.empty()) throw ConfigError("empty override key");
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;
    }
    json* node = &config;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted_key.find('.', start);
        const std::string part = dotted_key.substr(start, dot - start);
        if (part.empty()) throw ConfigError("malformed override key '" + dotted_key + "'");
        if (!node->is_object()) *node = json::object();
        if (dot == std::string::npos) {
            (*node)[part] = parsed;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

ExperimentConfig load_config(const fs::path& path,
                             const std::vector<std::pair<std::string, std::string>>& overrides) {
    json j = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path.string());
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config file " + path.string() + ": " + e.what());
        }
    }
    for (const auto& [key, value] : overrides) apply_override(j, key, value);
    ExperimentConfig c = ExperimentConfig::from_json(j);
    c.resolve();
    return c;
}

Dataset load_dataset(const ExperimentConfig& config) {
    const DatasetSpec& spec = config.dataset;
    auto require_file = [](const std::string& p, const char* what) {
        if (!fs::is_regular_file(p)) {
            throw ConfigError(std::string("dataset ") + what + " not found: " + p);
        }
    };
    Dataset d;
    if (spec.type == "idx") {
        require_file(spec.images, "images file");
        require_file(spec.labels, "labels file");
        d = load_idx(spec.images, spec.labels);
    } else if (spec.type == "csv") {
        require_file(spec.path, "file");
        d = load_csv(spec.path, spec.has_labels);
    } else {
        d = gen_synthetic(spec.synthetic).dataset;
    }
    if (!spec.classes.empty()) d = select_classes(d, spec.classes, spec.per_class);
    if (spec.normalize) normalize_minmax(d.x);
    if (d.x.rows() < config.dekm.k) {
        throw ConfigError("dataset has " + std::to_string(d.x.rows()) + " samples, fewer than k");
    }
    return d;
}

PretrainOutcome cmd_pretrain(const ExperimentConfig& config) {
    const Dataset data = load_dataset(config);
    const auto dims = config.encoder_dims(data.x.cols());
    PretrainResult result = pretrain(xavier_init(dims, config.seed), data.x, config.pretrain);
    result.model.metadata["config"] = config.to_json();
    result.model.metadata["dataset"] = data.metadata;

    const fs::path out(config.out);
    fs::create_directories(out);
    PretrainOutcome outcome{out / "checkpoint.bin", out / "loss.csv", {}};
    save_checkpoint(result.model, outcome.checkpoint);

    std::string csv = "# " + provenance(config) + "\nepoch,loss,mean_loss\n";
    const double n = static_cast<double>(data.x.rows());
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
        csv += std::to_string(e + 1) + ',' + json(result.epoch_losses[e]).dump() + ',' +
               json(result.epoch_losses[e] / n).dump() + '\n';
    }
    write_text(outcome.loss_csv, csv);
    outcome.result = std::move(result);
    return outcome;
}

RunOutcome cmd_run(const ExperimentConfig& config) {
    if (config.checkpoint.empty() && !config.inline_pretrain) {
        throw ConfigError("run: give a checkpoint or request inline pretraining (--pretrain)");
    }
    if (!config.checkpoint.empty() && !fs::is_regular_file(config.checkpoint)) {
        throw ConfigError("checkpoint not found: " + config.checkpoint);
    }
    const Dataset data = load_dataset(config);
    const LabelVector* labels = data.labels ? &*data.labels : nullptr;

    RunOutcome outcome;
    json runs = json::array();
    json timing = json::array();
    std::vector<double> acc0, nmi0, acc1, nmi1, inertia1;
    for (int rep = 0; rep < config.repeats; ++rep) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(rep);
        StartingPoint start = starting_model(config, data, seed);
        DekmConfig dc = config.dekm;
        dc.seed = seed;
        const auto t0 = Clock::now();
        DekmResult r = run_dekm(std::move(start.model), data.x, dc, labels, {},
                                start.encoder_adam ? &*start.encoder_adam : nullptr);
        const double dekm_seconds = seconds_since(t0);

        json summary = run_summary(r, data);
        summary = {{"repeat", rep}, {"seed", seed}, {"summary", summary}};
        runs.push_back(summary);
        timing.push_back({{"repeat", rep}, {"pretrain_seconds", start.seconds},
                          {"dekm_seconds", dekm_seconds}});
        const auto& first = r.history.records.front();
        const auto& last = r.history.records.back();
        inertia1.push_back(last.inertia);
        if (labels) {
            acc0.push_back(*first.acc);
            nmi0.push_back(*first.nmi);
            acc1.push_back(*last.acc);
            nmi1.push_back(*last.nmi);
        }
        outcome.runs.push_back(std::move(r));
    }

    json aggregate = {{"final_inertia", summarize(inertia1)}};
    if (labels) {
        aggregate["initial_acc"] = summarize(acc0);
        aggregate["initial_nmi"] = summarize(nmi0);
        aggregate["final_acc"] = summarize(acc1);
        aggregate["final_nmi"] = summarize(nmi1);
    }
    outcome.results = {{"config", config.to_json()},
                       {"seed", config.seed},
                       {"dataset", data.metadata},
                       {"n", data.x.rows()},
                       {"runs", runs},
                       {"aggregate", aggregate},
                       {"timing", timing}};

    const fs::path out(config.out);
    fs::create_directories(out);
    write_text(out / "results.json", outcome.results.dump(2) + '\n');
    std::vector<std::pair<int, const RunHistory*>> hist;
    for (std::size_t i = 0; i < outcome.runs.size(); ++i) {
        hist.emplace_back(static_cast<int>(i), &outcome.runs[i].history);
    }
    write_history(out / "history.jsonl", config, hist);
    const DekmResult& first = outcome.runs.front();
    save_csv(out / "embedding.csv", first.embedding, nullptr, provenance(config));
    std::string assign = "# " + provenance(config) + '\n';
    for (int a : first.clustering.assignments) assign += std::to_string(a) + '\n';
    write_text(out / "assignments.csv", assign);
    return outcome;
}

AblationOutcome cmd_ablate(const ExperimentConfig& config) {
    if (config.checkpoint.empty() && !config.inline_pretrain) {
        throw ConfigError("ablate: give a checkpoint or request inline pretraining (--pretrain)");
    }
    if (!config.checkpoint.empty() && !fs::is_regular_file(config.checkpoint)) {
        throw ConfigError("checkpoint not found: " + config.checkpoint);
    }
    const Dataset data = load_dataset(config);
    if (!data.labels) throw ConfigError("ablate: dataset needs ground-truth labels");

    struct Variant {
        std::string name;
        Strategy strategy;
        BatchMode mode;
    };
    std::vector<Variant> variants;
    for (Strategy s : kAllStrategies) {
        variants.push_back({std::string(to_string(s)), s, BatchMode::mini_batch});
    }
    variants.push_back({"last_dim_Y_full_batch", Strategy::last_dim_Y, BatchMode::full_batch});

    AblationOutcome outcome;
    std::vector<std::vector<std::vector<double>>> curves(variants.size());  // [variant][repeat]
    std::vector<std::vector<std::pair<int, RunHistory>>> histories(variants.size());
    json per_variant = json::object();
    json timing = json::array();
    for (int rep = 0; rep < config.repeats; ++rep) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(rep);
        StartingPoint start = starting_model(config, data, seed);
        timing.push_back({{"repeat", rep}, {"pretrain_seconds", start.seconds}});
        for (std::size_t v = 0; v < variants.size(); ++v) {
            DekmConfig dc = config.dekm;
            dc.seed = seed;
            dc.strategy = variants[v].strategy;
            dc.batch_mode = variants[v].mode;
            const auto t0 = Clock::now();
            DekmResult r = run_dekm(start.model, data.x, dc, &*data.labels, {},
                                    start.encoder_adam ? &*start.encoder_adam : nullptr);
            timing.back()[variants[v].name + "_seconds"] = seconds_since(t0);
            std::vector<double> curve;
            for (const auto& rec : r.history.records) curve.push_back(*rec.acc);
            curves[v].push_back(std::move(curve));
            per_variant[variants[v].name].push_back(
                {{"repeat", rep}, {"seed", seed}, {"summary", run_summary(r, data)}});
            histories[v].emplace_back(rep, std::move(r.history));
        }
    }

    std::size_t rows = 0;
    for (const auto& vc : curves) {
        for (const auto& c : vc) rows = std::max(rows, c.size());
    }
    json aggregate = json::object();
    for (std::size_t v = 0; v < variants.size(); ++v) {
        std::vector<double> mean(rows, 0.0);
        std::vector<double> finals;
        for (const auto& c : curves[v]) {
            for (std::size_t i = 0; i < rows; ++i) mean[i] += i < c.size() ? c[i] : c.back();
            finals.push_back(c.back());
        }
        for (double& m : mean) m /= static_cast<double>(curves[v].size());
        outcome.variants.push_back(variants[v].name);
        outcome.mean_acc_curves.push_back(std::move(mean));
        aggregate[variants[v].name] = {{"final_acc", summarize(finals)}};
    }
    outcome.results = {{"config", config.to_json()},
                       {"seed", config.seed},
                       {"dataset", data.metadata},
                       {"variants", per_variant},
                       {"aggregate", aggregate},
                       {"timing", timing}};

    const fs::path out(config.out);
    fs::create_directories(out);
    std::string csv = "# " + provenance(config) + "\niter";
    for (const auto& name : outcome.variants) csv += ',' + name;
    csv += '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        csv += std::to_string(i);
        for (const auto& curve : outcome.mean_acc_curves) csv += ',' + json(curve[i]).dump();
        csv += '\n';
    }
    write_text(out / "ablation.csv", csv);
    write_text(out / "results.json", outcome.results.dump(2) + '\n');
    for (std::size_t v = 0; v < variants.size(); ++v) {
        std::vector<std::pair<int, const RunHistory*>> hist;
        for (const auto& [rep, h] : histories[v]) hist.emplace_back(rep, &h);
        write_history(out / ("history_" + variants[v].name + ".jsonl"), config, hist);
    }
    return outcome;
}

LabelVector read_label_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw IoError("label file not found: " + path.string());
    const Dataset d = load_csv(path, false);
    LabelVector labels;
    labels.reserve(static_cast<std::size_t>(d.x.rows()));
    for (Index i = 0; i < d.x.rows(); ++i) {
        const double v = d.x(i, 0);
        if (v != std::floor(v) || v < 0.0) {
            throw ParseError(path.string() + ": row " + std::to_string(i + 1) +
                             " is not a nonnegative integer label");
        }
        labels.push_back(static_cast<int>(v));
    }
    return labels;
}

json cmd_eval(const fs::path& labels_path, const fs::path& assignments_path, const fs::path& out_dir) {
    const LabelVector g = read_label_file(labels_path);
    const LabelVector c = read_label_file(assignments_path);
    if (g.size() != c.size()) {
        throw DimensionError("eval: " + std::to_string(g.size()) + " labels vs " +
                             std::to_string(c.size()) + " assignments");
    }
    json metrics = {{"acc", acc(g, c)},
                    {"nmi", nmi(g, c)},
                    {"n", g.size()},
                    {"labels", labels_path.string()},
                    {"assignments", assignments_path.string()}};
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text(out_dir / "metrics.json", metrics.dump(2) + '\n');
    }
    return metrics;
}

fs::path cmd_gen_synth(const ExperimentConfig& config) {
    const SyntheticData syn = gen_synthetic(config.dataset.synthetic);
    const fs::path out(config.out);
    fs::create_directories(out);
    const fs::path csv = out / "synthetic.csv";
    save_csv(csv, syn.dataset.x, &*syn.dataset.labels, provenance(config));
    json meta = syn.dataset.metadata;
    meta["config"] = config.to_json();
    meta["seed"] = config.seed;
    meta["n"] = syn.dataset.x.rows();
    meta["latent_centres"] = json::array();
    for (Index i = 0; i < syn.latent_centres.rows(); ++i) {
        std::vector<double> row(syn.latent_centres.row(i).begin(), syn.latent_centres.row(i).end());
        meta["latent_centres"].push_back(row);
    }
    write_text(out / "synthetic.json", meta.dump(2) + '\n');
    return csv;
}

}  // namespace dekm
