// Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any criterion fails.
//
//   acceptance --group core    criteria 1-8 and 11
//   acceptance --group mnist   criteria 9 and 10 (needs DEKM_MNIST_DIR)

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "dekm/data.hpp"
#include "dekm/dekm.hpp"
#include "dekm/experiment.hpp"
#include "dekm/kmeans.hpp"
#include "dekm/linalg.hpp"
#include "dekm/metrics.hpp"
#include "oracles.hpp"

using namespace dekm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

fs::path work_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "dekm_acceptance" / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool same_layers(const std::vector<Layer>& a, const std::vector<Layer>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t l = 0; l < a.size(); ++l)
        if (a[l].weight != b[l].weight || a[l].bias != b[l].bias) return false;
    return true;
}

// Random encoder widths: input and hidden layers up to 8 units.
std::vector<Index> random_dims(std::mt19937_64& rng) {
    std::uniform_int_distribution<Index> width(2, 8), depth(1, 3);
    std::vector<Index> dims(static_cast<std::size_t>(depth(rng) + 1));
    for (Index& d : dims) d = width(rng);
    return dims;
}

// Random biases keep pre-activations off the ReLU kink, where the loss has
// no derivative for the difference quotient to approximate.
AutoencoderModel random_net(const std::vector<Index>& dims, std::uint64_t seed, std::mt19937_64& rng) {
    AutoencoderModel m = xavier_init(dims, seed);
    for (auto* layers : {&m.encoder, &m.decoder})
        for (Layer& l : *layers) l.bias = oracle::random_matrix(1, l.bias.size(), rng, -0.5, 0.5);
    return m;
}

Outcome entropy_goldens() {
    const std::vector<double> unit{1.0, 1.0}, quarter{0.25, 0.25};
    const double u = uniform_entropy(400), g1 = gaussian_entropy(unit), g2 = gaussian_entropy(quarter);
    const bool ok = std::abs(u - 5.992) <= 1e-3 && std::abs(g1 - 1.419) <= 1e-3 && std::abs(g2 - 0.033) <= 1e-3;
    return verdict(ok, "uniform(400)=" + fmt4(u) + " gauss(1,1)=" + fmt4(g1) + " gauss(.25,.25)=" + fmt4(g2));
}

Outcome eigensolver_suite() {
    std::mt19937_64 rng(20);
    double ortho = 0.0, recon = 0.0;
    bool ascending = true;
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = 1 + trial % 16;
        const Matrix s = oracle::random_symmetric(n, rng);
        const TransformState t = sym_eig(s);
        ortho = std::max(ortho, (t.v * t.v.transpose() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff());
        const Matrix back = t.v.transpose() * t.eigenvalues.asDiagonal() * t.v;
        recon = std::max(recon, (back - s).cwiseAbs().maxCoeff());
        for (Index i = 1; i < n; ++i) ascending = ascending && t.eigenvalues(i - 1) <= t.eigenvalues(i);
    }
    return verdict(ortho < 1e-8 && recon < 1e-8 && ascending,
                   "200 matrices, max orthonormality residual " + fmt(ortho) + ", max reconstruction residual " +
                       fmt(recon) + (ascending ? ", ascending" : ", NOT ascending"));
}

Outcome trace_identity() {
    std::mt19937_64 rng(30);
    double rotate = 0.0, trace = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 20 + trial % 80, e = 2 + trial % 5;
        const int k = 2 + trial % 4;
        const Matrix h = oracle::random_matrix(n, e, rng, -3.0, 3.0);
        const ClusterResult r = lloyd(h, kmeanspp_init(h, k, static_cast<std::uint64_t>(trial)));
        const Matrix s = within_class_scatter(h, r);
        const Matrix v = sym_eig(s).v;
        const double in_h = inertia(h, r.assignments, r.centroids);
        const double in_y = inertia(h * v.transpose(), r.assignments, r.centroids * v.transpose());
        rotate = std::max(rotate, std::abs(in_y - in_h));
        trace = std::max(trace, std::abs(s.trace() - in_h));
    }
    return verdict(rotate < 1e-8 && trace < 1e-9,
                   "100 instances, max |inertia(VH)-inertia(H)| " + fmt(rotate) + ", max |trace-inertia| " + fmt(trace));
}

Outcome kmeans_oracle() {
    std::mt19937_64 rng(40);
    int matched = 0, monotone_runs = 0, runs = 0;
    double worst_gap = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = 2 + trial % 7;
        const Matrix h = oracle::random_matrix(n, 1 + trial % 3, rng, -5.0, 5.0);
        const oracle::Partition best = oracle::best_two_partition(h);
        const ClusterResult from_opt = lloyd(h, cluster_means(h, best.labels, 2));
        if (from_opt.assignments == best.labels) ++matched;
        worst_gap = std::max(worst_gap, std::abs(from_opt.inertia - best.cost));

        std::vector<const ClusterResult*> all{&from_opt};
        std::vector<ClusterResult> extra;
        extra.push_back(lloyd(h, kmeanspp_init(h, 2, static_cast<std::uint64_t>(trial))));
        extra.push_back(lloyd(h, random_init(h, 2, static_cast<std::uint64_t>(trial))));
        for (const auto& r : extra) all.push_back(&r);
        for (const ClusterResult* r : all) {
            bool monotone = true;
            for (std::size_t i = 1; i < r->inertia_trace.size(); ++i)
                monotone = monotone && r->inertia_trace[i] <= r->inertia_trace[i - 1];
            monotone_runs += monotone;
            ++runs;
        }
    }
    return verdict(matched == 50 && monotone_runs == runs,
                   std::to_string(matched) + "/50 optimal partitions reproduced (max |inertia-optimum| " +
                       fmt(worst_gap) + "), " + std::to_string(monotone_runs) + "/" + std::to_string(runs) +
                       " runs with non-increasing inertia");
}

Outcome acc_oracle() {
    std::mt19937_64 rng(50);
    int equal = 0, self = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int kg = 1 + trial % 6, kc = 1 + (trial / 6) % 6;
        std::uniform_int_distribution<int> ug(0, kg - 1), uc(0, kc - 1);
        LabelVector g(40), c(40);
        for (int& x : g) x = ug(rng);
        for (int& x : c) x = uc(rng);
        equal += acc(g, c) == oracle::brute_force_acc(g, c);
        self += nmi(g, g) == 1.0;
    }
    const double independent = nmi(LabelVector{0, 0, 1, 1}, LabelVector{0, 1, 0, 1});
    return verdict(equal == 100 && self == 100 && independent == 0.0,
                   std::to_string(equal) + "/100 acc equal brute force, " + std::to_string(self) +
                       "/100 NMI(g,g)=1, NMI(4-sample independent)=" + fmt(independent));
}

Outcome gradient_checks() {
    std::mt19937_64 rng(60);
    double recon = 0.0, yspace = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<Index> dims = random_dims(rng);
        const AutoencoderModel m = random_net(dims, static_cast<std::uint64_t>(trial), rng);
        const Index n = 2 + trial % 15;
        const Matrix x = oracle::random_matrix(n, dims.front(), rng);

        const Gradients gr = backprop(m, x, ReconstructionTarget{});
        recon = std::max(recon, oracle::finite_difference_check(m, x, ReconstructionTarget{}, gr, 1e-5, 1e-6)
                                    .max_relative_error);

        const Matrix h = encode(m, x);
        const ClusterResult r = lloyd(h, kmeanspp_init(h, 2, static_cast<std::uint64_t>(trial)));
        const TransformState t = build_transform(within_class_scatter(h, r));
        const GreedyTargets g = greedy_targets(h, t, r, Strategy::last_dim_Y, rng);
        const EmbeddingTarget target{g.targets, g.projection};
        const Gradients gy = backprop(m, x, target);
        yspace = std::max(yspace, oracle::finite_difference_check(m, x, target, gy, 1e-5, 1e-6).max_relative_error);

    }
    return verdict(recon < 1e-4 && yspace < 1e-4,
                   "20 networks, max relative error reconstruction " + fmt(recon) + ", Y-space " + fmt(yspace));
}

Outcome objective_identity() {
    std::mt19937_64 rng(70);
    double all_dims = 0.0, last_dim = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Index> dims = random_dims(rng);
        dims.back() = 2 + trial % 4;
        const AutoencoderModel m = xavier_init(dims, static_cast<std::uint64_t>(trial));
        const Matrix x = oracle::random_matrix(50, dims.front(), rng);
        const Matrix h = encode(m, x);
        const ClusterResult r = lloyd(h, kmeanspp_init(h, 3, static_cast<std::uint64_t>(trial)));
        const TransformState t = build_transform(within_class_scatter(h, r));

        const GreedyTargets ga = greedy_targets(h, t, r, Strategy::all_dims_Y, rng);
        all_dims = std::max(all_dims, std::abs(representation_loss(h, ga) - oracle::partition_cost(h, r.assignments, 3)));

        const GreedyTargets gl = greedy_targets(h, t, r, Strategy::last_dim_Y, rng);
        const Matrix y = h * t.v.transpose();
        const Matrix c = r.centroids * t.v.transpose();
        const Index last = y.cols() - 1;
        double residual = 0.0;
        for (Index i = 0; i < y.rows(); ++i)
            residual += oracle::sq(y(i, last) - c(r.assignments[static_cast<std::size_t>(i)], last));
        last_dim = std::max(last_dim, std::abs(representation_loss(h, gl) - residual));
    }
    return verdict(all_dims < 1e-8 && last_dim < 1e-12,
                   "20 instances, max |all_dims_Y - inertia| " + fmt(all_dims) + ", max |last_dim_Y - residual| " +
                       fmt(last_dim));
}

// Seeded 4-cluster fixture: latent 2, ambient 10, n = 2000, a briefly
// pretrained autoencoder.
ExperimentConfig synthetic_config(const fs::path& out) {
    return load_config({}, {{"dataset.synthetic.separation", "4"},
                            {"hidden", "[64, 64]"},
                            {"pretrain.epochs", "3"},
                            {"pretrain_inline", "true"},
                            {"repeats", "3"},
                            {"seed", "0"},
                            {"out", out.string()}});
}

Outcome synthetic_improvement() {
    const ExperimentConfig c = synthetic_config(work_dir("synthetic"));
    const RunOutcome r = cmd_run(c);
    const json& agg = r.results["aggregate"];
    const double before = agg["initial_acc"]["mean"], after = agg["final_acc"]["mean"];

    // Rebuild each repeat's pretrained model and compare decoders bit for bit.
    const Dataset data = load_dataset(c);
    int untouched = 0;
    for (int rep = 0; rep < c.repeats; ++rep) {
        const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(rep);
        PretrainOptions p = c.pretrain;
        p.seed = seed;
        const AutoencoderModel start = pretrain(xavier_init(c.encoder_dims(data.x.cols()), seed), data.x, p).model;
        untouched += same_layers(start.decoder, r.runs[static_cast<std::size_t>(rep)].model.decoder);
    }
    std::string per_run;
    for (const auto& run : r.results["runs"]) {
        per_run += " " + fmt4(run["summary"]["initial"]["acc"]) + "->" + fmt4(run["summary"]["final"]["acc"]);
    }
    return verdict(after >= before + 0.02 && untouched == c.repeats,
                   "mean ACC " + fmt4(before) + " -> " + fmt4(after) + " (need +0.02; runs" + per_run + "), " +
                       std::to_string(untouched) + "/3 decoders unchanged");
}

Outcome determinism() {
    const fs::path out = work_dir("determinism");
    const ExperimentConfig c = load_config({}, {{"dataset.synthetic.per_cluster_n", "100"},
                                                {"hidden", "[32, 32]"},
                                                {"pretrain.epochs", "10"},
                                                {"pretrain_inline", "true"},
                                                {"repeats", "2"},
                                                {"seed", "11"},
                                                {"out", out.string()}});
    auto strip = [](const std::string& text) {
        json j = json::parse(text);
        j.erase("timing");
        return j.dump(2);
    };
    cmd_run(c);
    const std::string first = slurp(out / "results.json");
    cmd_run(c);
    const std::string second = slurp(out / "results.json");
    const bool same = strip(first) == strip(second);
    return verdict(same, same ? "results.json identical apart from timing (" + std::to_string(first.size()) + " bytes)"
                              : "results.json differs outside timing");
}

struct MnistFiles {
    fs::path images, labels;
};

std::optional<MnistFiles> find_mnist() {
    const char* dir = std::getenv("DEKM_MNIST_DIR");
    if (!dir || !*dir) return std::nullopt;
    for (const char* prefix : {"train", "mnist10k", "t10k"}) {
        MnistFiles f{fs::path(dir) / (std::string(prefix) + "-images-idx3-ubyte"),
                     fs::path(dir) / (std::string(prefix) + "-labels-idx1-ubyte")};
        if (fs::is_regular_file(f.images) && fs::is_regular_file(f.labels)) return f;
    }
    return std::nullopt;
}

// One ablation over three seeds feeds both MNIST criteria.
struct MnistAblation {
    json results;
    fs::path out;
};

MnistAblation run_mnist_ablation(const MnistFiles& f) {
    const fs::path out = work_dir("mnist");
    const ExperimentConfig c = load_config({}, {{"dataset.type", "idx"},
                                                {"dataset.images", f.images.string()},
                                                {"dataset.labels", f.labels.string()},
                                                {"dataset.classes", "[0, 2, 6, 9]"},
                                                {"dataset.per_class", "500"},
                                                {"pretrain.epochs", "100"},
                                                {"pretrain_inline", "true"},
                                                {"repeats", "3"},
                                                {"seed", "0"},
                                                {"out", out.string()}});
    return {cmd_ablate(c).results, out};
}

Outcome mnist_direction(const MnistAblation& a) {
    int improved = 0;
    std::string per_run;
    for (const auto& run : a.results["variants"]["last_dim_Y"]) {
        const json& s = run["summary"];
        const double a0 = s["initial"]["acc"], a1 = s["final"]["acc"];
        const double n0 = s["initial"]["nmi"], n1 = s["final"]["nmi"];
        improved += a1 > a0 && n1 > n0;
        per_run += " (" + fmt4(a0) + "," + fmt4(n0) + ")->(" + fmt4(a1) + "," + fmt4(n1) + ")";
    }
    return verdict(improved >= 2, std::to_string(improved) + "/3 runs improve ACC and NMI:" + per_run +
                                      "; reference trajectory (0.920,0.799)->(0.970,0.898)");
}

Outcome mnist_ablation_order(const MnistAblation& a) {
    const double last = a.results["aggregate"]["last_dim_Y"]["final_acc"]["mean"];
    const double all_h = a.results["aggregate"]["all_dims_H"]["final_acc"]["mean"];
    std::string others;
    for (const auto& [name, v] : a.results["aggregate"].items()) others += " " + name + "=" + fmt4(v["final_acc"]["mean"]);
    const auto& lv = a.results["aggregate"]["last_dim_Y"]["final_acc"]["values"];
    const auto& hv = a.results["aggregate"]["all_dims_H"]["final_acc"]["values"];
    std::string per_seed;
    int wins = 0;
    for (std::size_t r = 0; r < lv.size() && r < hv.size(); ++r) {
        const double l = lv[r], h = hv[r];
        wins += l >= h;
        per_seed += " " + fmt4(l) + "/" + fmt4(h);
    }
    return verdict(last >= all_h, "final mean ACC last_dim_Y " + fmt4(last) + " vs all_dims_H " + fmt4(all_h) +
                                      "; per seed (last_dim_Y/all_dims_H)" + per_seed + ", last_dim_Y ahead in " +
                                      std::to_string(wins) + "/" + std::to_string(lv.size()) + ";" + others +
                                      "; artifacts in " + a.out.string());
}

struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> check;
};

bool report(const Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = c.check();
    } catch (const std::exception& e) {
        o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    char time_buf[32];
    std::snprintf(time_buf, sizeof time_buf, "%.2fs", secs);
    std::cout << tag << " [" << c.id << "] " << c.name << ": " << o.detail << " (" << time_buf << ")" << std::endl;
    return o.status != Status::fail;
}

}  // namespace

int main(int argc, char** argv) {
    std::string group = "all";
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--group") group = argv[i + 1];
    if (group != "all" && group != "core" && group != "mnist") {
        std::cerr << "usage: acceptance [--group core|mnist|all]\n";
        return 2;
    }

    std::vector<Criterion> criteria;
    if (group != "mnist") {
        criteria = {{1, "entropy golden values", entropy_goldens},
                    {2, "eigensolver suite", eigensolver_suite},
                    {3, "trace and transform identity", trace_identity},
                    {4, "k-means enumeration oracle", kmeans_oracle},
                    {5, "hungarian ACC and NMI oracle", acc_oracle},
                    {6, "gradient checks", gradient_checks},
                    {7, "greedy objective identities", objective_identity},
                    {8, "synthetic end-to-end improvement", synthetic_improvement},
                    {11, "determinism of cmd_run", determinism}};
    }
    if (group != "core") {
        const auto files = find_mnist();
        if (!files) {
            const std::string why = "DEKM_MNIST_DIR unset or IDX files missing";
            criteria.push_back({9, "MNIST directional improvement", [why] { return Outcome{Status::skip, why}; }});
            criteria.push_back({10, "MNIST ablation ordering (soft)", [why] { return Outcome{Status::skip, why}; }});
        } else {
            auto shared = std::make_shared<std::optional<MnistAblation>>();
            auto get = [shared, f = *files]() -> const MnistAblation& {
                if (!*shared) *shared = run_mnist_ablation(f);
                return **shared;
            };
            criteria.push_back({9, "MNIST directional improvement", [get] { return mnist_direction(get()); }});
            criteria.push_back({10, "MNIST ablation ordering (soft)", [get] { return mnist_ablation_order(get()); }});
        }
    }

    bool ok = true;
    for (const auto& c : criteria) ok = report(c) && ok;
    return ok ? 0 : 1;
}
