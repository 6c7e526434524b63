#include "dekm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "dekm/errors.hpp"

namespace dekm {

namespace {

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
    if (bytes.size() < offset + 4) throw IoError(path.string() + ": truncated IDX header");
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                       static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(b, 4);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::string where(const std::filesystem::path& path, std::size_t row, std::size_t col) {
    return path.string() + ": row " + std::to_string(row) + ", column " + std::to_string(col);
}

double parse_double(std::string_view cell, const std::filesystem::path& path, std::size_t row,
                    std::size_t col) {
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end) {
        throw ParseError(where(path, row, col) + ": not a number '" + std::string(cell) + "'");
    }
    if (!std::isfinite(v)) throw ParseError(where(path, row, col) + ": non-finite value");
    return v;
}

int parse_label(std::string_view cell, const std::filesystem::path& path, std::size_t row,
                std::size_t col) {
    const double v = parse_double(cell, path, row, col);
    if (v != std::floor(v) || v < 0.0 || v > 2147483647.0) {
        throw ParseError(where(path, row, col) + ": label must be a nonnegative integer");
    }
    return static_cast<int>(v);
}

void format_double(std::string& out, double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
    const auto img = read_bytes(images_path);
    const auto lab = read_bytes(labels_path);

    if (read_be32(img, 0, images_path) != kIdxImages) {
        throw FormatError(images_path.string() + ": bad magic number for an IDX image file");
    }
    if (read_be32(lab, 0, labels_path) != kIdxLabels) {
        throw FormatError(labels_path.string() + ": bad magic number for an IDX label file");
    }
    const std::uint32_t count = read_be32(img, 4, images_path);
    const std::uint32_t rows = read_be32(img, 8, images_path);
    const std::uint32_t cols = read_be32(img, 12, images_path);
    const std::uint32_t label_count = read_be32(lab, 4, labels_path);
    if (count != label_count) {
        throw ConsistencyError(images_path.string() + " holds " + std::to_string(count) +
                               " images but " + labels_path.string() + " holds " +
                               std::to_string(label_count) + " labels");
    }
    const std::size_t pixels = std::size_t{rows} * cols;
    if (img.size() < 16 + std::size_t{count} * pixels) {
        throw IoError(images_path.string() + ": truncated pixel data");
    }
    if (lab.size() < 8 + std::size_t{count}) {
        throw IoError(labels_path.string() + ": truncated label data");
    }

    Dataset d;
    d.name = images_path.filename().string();
    d.x.resize(count, static_cast<Index>(pixels));
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t p = 0; p < pixels; ++p) {
            d.x(static_cast<Index>(i), static_cast<Index>(p)) =
                static_cast<double>(img[16 + i * pixels + p]) / 255.0;
        }
    }
    d.labels.emplace(lab.begin() + 8, lab.begin() + 8 + count);
    d.metadata = {{"source", "idx"},
                  {"images", images_path.string()},
                  {"labels", labels_path.string()},
                  {"image_shape", {rows, cols}}};
    return d;
}

void save_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
              std::span<const std::uint8_t> pixels, std::span<const std::uint8_t> labels,
              std::uint32_t rows, std::uint32_t cols) {
    const std::size_t per = std::size_t{rows} * cols;
    if (per == 0 || pixels.size() != per * labels.size()) {
        throw DimensionError("save_idx: " + std::to_string(pixels.size()) + " pixels for " +
                             std::to_string(labels.size()) + " images of " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }
    std::ofstream img(images_path, std::ios::binary);
    std::ofstream lab(labels_path, std::ios::binary);
    if (!img || !lab) throw IoError("save_idx: cannot open output files");
    write_be32(img, kIdxImages);
    write_be32(img, static_cast<std::uint32_t>(labels.size()));
    write_be32(img, rows);
    write_be32(img, cols);
    img.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    write_be32(lab, kIdxLabels);
    write_be32(lab, static_cast<std::uint32_t>(labels.size()));
    lab.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
    if (!img || !lab) throw IoError("save_idx: write failed");
}

Dataset load_csv(const std::filesystem::path& path, bool has_labels_column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<double> values;
    LabelVector labels;
    std::size_t width = 0;
    std::size_t n = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto cells = split_commas(view);
        if (n == 0) {
            width = cells.size();
            if (has_labels_column && width < 2) {
                throw FormatError(path.string() + ": need at least one feature and a label column");
            }
        } else if (cells.size() != width) {
            throw FormatError(path.string() + ": row " + std::to_string(line_no) + " has " +
                              std::to_string(cells.size()) + " columns, expected " +
                              std::to_string(width));
        }
        const std::size_t features = has_labels_column ? width - 1 : width;
        for (std::size_t c = 0; c < features; ++c) {
            values.push_back(parse_double(cells[c], path, line_no, c + 1));
        }
        if (has_labels_column) labels.push_back(parse_label(cells.back(), path, line_no, width));
        ++n;
    }
    if (n == 0) throw FormatError(path.string() + ": no data rows");

    Dataset d;
    d.name = path.filename().string();
    const std::size_t features = has_labels_column ? width - 1 : width;
    d.x = Eigen::Map<const Matrix>(values.data(), static_cast<Index>(n),
                                   static_cast<Index>(features));
    if (has_labels_column) d.labels = std::move(labels);
    d.metadata = {{"source", "csv"}, {"path", path.string()}};
    return d;
}

void save_csv(const std::filesystem::path& path, const Matrix& x, const LabelVector* labels,
              const std::string& comment) {
    if (labels && labels->size() != static_cast<std::size_t>(x.rows())) {
        throw DimensionError("save_csv: " + std::to_string(labels->size()) + " labels for " +
                             shape_of(x));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    if (!comment.empty()) {
        std::istringstream lines(comment);
        std::string l;
        while (std::getline(lines, l)) out << "# " << l << '\n';
    }
    std::string row;
    for (Index i = 0; i < x.rows(); ++i) {
        row.clear();
        for (Index j = 0; j < x.cols(); ++j) {
            if (j) row += ',';
            format_double(row, x(i, j));
        }
        if (labels) {
            row += ',';
            row += std::to_string((*labels)[static_cast<std::size_t>(i)]);
        }
        row += '\n';
        out << row;
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void normalize_minmax(Matrix& x) {
    for (Index j = 0; j < x.cols(); ++j) {
        const double lo = x.col(j).minCoeff();
        const double hi = x.col(j).maxCoeff();
        if (hi > lo) {
            x.col(j) = (x.col(j).array() - lo) / (hi - lo);
            x.col(j) = x.col(j).cwiseMax(0.0).cwiseMin(1.0);
        } else {
            x.col(j).setZero();
        }
    }
}

Dataset select_classes(const Dataset& d, std::span<const int> classes, Index per_class) {
    if (!d.labels) throw ConfigError("select_classes: dataset has no labels");
    if (classes.empty() || per_class < 1) {
        throw ConfigError("select_classes: need at least one class and per_class >= 1");
    }
    std::vector<std::size_t> rows;
    LabelVector labels;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        Index taken = 0;
        for (std::size_t i = 0; i < d.labels->size() && taken < per_class; ++i) {
            if ((*d.labels)[i] != classes[c]) continue;
            rows.push_back(i);
            labels.push_back(static_cast<int>(c));
            ++taken;
        }
        if (taken < per_class) {
            throw ConfigError("select_classes: class " + std::to_string(classes[c]) + " has only " +
                              std::to_string(taken) + " samples");
        }
    }
    Dataset out;
    out.x = gather_rows(d.x, rows);
    out.labels = std::move(labels);
    out.name = d.name;
    out.metadata = d.metadata;
    out.metadata["classes"] = std::vector<int>(classes.begin(), classes.end());
    out.metadata["per_class"] = per_class;
    return out;
}

nlohmann::json SyntheticSpec::to_json() const {
    return {{"k", k},
            {"per_cluster_n", per_cluster_n},
            {"latent_dim", latent_dim},
            {"ambient_dim", ambient_dim},
            {"separation", separation},
            {"seed", seed}};
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
    if (spec.k < 1) throw ConfigError("gen_synthetic: k must be >= 1");
    if (spec.per_cluster_n < 1) throw ConfigError("gen_synthetic: per_cluster_n must be >= 1");
    if (spec.latent_dim < 1) throw ConfigError("gen_synthetic: latent_dim must be >= 1");
    if (spec.ambient_dim < spec.latent_dim) {
        throw ConfigError("gen_synthetic: ambient_dim must be >= latent_dim");
    }
    if (!(spec.separation > 0.0)) throw ConfigError("gen_synthetic: separation must be > 0");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Index latent = spec.latent_dim;

    // Rejection-sample centres in a box that grows until they fit.
    Matrix centres(spec.k, latent);
    double side = spec.separation *
                  std::max(2.0, 2.0 * std::pow(static_cast<double>(spec.k), 1.0 / latent));
    for (bool placed = false; !placed; side *= 1.25) {
        std::uniform_real_distribution<double> coord(0.0, side);
        int have = 0;
        for (int attempt = 0; attempt < 100000 && have < spec.k; ++attempt) {
            RowVector c(latent);
            for (Index j = 0; j < latent; ++j) c(j) = coord(rng);
            bool ok = true;
            for (int p = 0; p < have && ok; ++p) {
                ok = (centres.row(p) - c).norm() >= spec.separation;
            }
            if (ok) centres.row(have++) = c;
        }
        placed = have == spec.k;
    }

    const Index n = spec.k * spec.per_cluster_n;
    SyntheticData out;
    out.latent_centres = centres;
    out.latent.resize(n, latent);
    LabelVector labels(static_cast<std::size_t>(n));
    for (int c = 0; c < spec.k; ++c) {
        for (Index i = 0; i < spec.per_cluster_n; ++i) {
            const Index row = c * spec.per_cluster_n + i;
            for (Index j = 0; j < latent; ++j) out.latent(row, j) = centres(c, j) + gauss(rng);
            labels[static_cast<std::size_t>(row)] = c;
        }
    }

    // Standardize, apply a random affine map, squash.
    const RowVector mean = out.latent.colwise().mean();
    Matrix u = out.latent.rowwise() - mean;
    const double pooled = std::sqrt(u.squaredNorm() / static_cast<double>(u.size()));
    if (pooled > 0.0) u /= pooled;
    Matrix lift(latent, spec.ambient_dim);
    for (Index i = 0; i < latent; ++i) {
        for (Index j = 0; j < spec.ambient_dim; ++j) lift(i, j) = gauss(rng);
    }
    std::uniform_real_distribution<double> shift(-0.5, 0.5);
    RowVector offset(spec.ambient_dim);
    for (Index j = 0; j < spec.ambient_dim; ++j) offset(j) = shift(rng);
    Matrix ambient = u * lift;
    ambient.rowwise() += offset;
    ambient = ambient.array().tanh().matrix();
    normalize_minmax(ambient);

    out.dataset.x = std::move(ambient);
    out.dataset.labels = std::move(labels);
    out.dataset.name = "synthetic";
    out.dataset.metadata = {{"source", "synthetic"}, {"generator", spec.to_json()}};
    return out;
}

}  // namespace dekm
