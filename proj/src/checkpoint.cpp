#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "dekm/autoencoder.hpp"
#include "dekm/errors.hpp"

namespace dekm {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint binary layout assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'D', 'E', 'K', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

const char* activation_name(Activation a) { return a == Activation::relu ? "relu" : "linear"; }

Activation activation_from(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "linear") return Activation::linear;
    throw FormatError("checkpoint: unknown activation '" + s + "'");
}

nlohmann::json header_of(const AutoencoderModel& model) {
    nlohmann::json h;
    h["format"] = "dekm-autoencoder";
    h["version"] = kVersion;
    h["encoder_dims"] = model.encoder_dims;
    h["seed"] = model.seed;
    h["metadata"] = model.metadata;
    auto acts = [](const std::vector<Layer>& layers) {
        nlohmann::json a = nlohmann::json::array();
        for (const Layer& l : layers) a.push_back(activation_name(l.activation));
        return a;
    };
    h["encoder_activations"] = acts(model.encoder);
    h["decoder_activations"] = acts(model.decoder);
    return h;
}

// Builds an uninitialized model from a header; parameters are filled later.
AutoencoderModel skeleton_from(const nlohmann::json& h) {
    if (h.value("format", "") != "dekm-autoencoder") {
        throw FormatError("checkpoint: not a dekm autoencoder checkpoint");
    }
    if (h.value("version", 0u) != kVersion) {
        throw FormatError("checkpoint: unsupported version " + h.value("version", nlohmann::json()).dump());
    }
    AutoencoderModel m;
    m.encoder_dims = h.at("encoder_dims").get<std::vector<Index>>();
    m.seed = h.at("seed").get<std::uint64_t>();
    m.metadata = h.value("metadata", nlohmann::json::object());
    if (m.encoder_dims.size() < 2) throw FormatError("checkpoint: fewer than two layer widths");
    for (Index w : m.encoder_dims) {
        if (w < 1) throw FormatError("checkpoint: non-positive layer width");
    }
    const auto enc_acts = h.at("encoder_activations").get<std::vector<std::string>>();
    const auto dec_acts = h.at("decoder_activations").get<std::vector<std::string>>();
    const std::size_t depth = m.encoder_dims.size() - 1;
    if (enc_acts.size() != depth || dec_acts.size() != depth) {
        throw FormatError("checkpoint: activation list does not match layer count");
    }
    const auto dec = m.decoder_dims();
    for (std::size_t l = 0; l < depth; ++l) {
        m.encoder.push_back({Matrix(m.encoder_dims[l], m.encoder_dims[l + 1]),
                             RowVector(m.encoder_dims[l + 1]), activation_from(enc_acts[l])});
        m.decoder.push_back(
            {Matrix(dec[l], dec[l + 1]), RowVector(dec[l + 1]), activation_from(dec_acts[l])});
    }
    return m;
}

std::vector<Layer*> all_layers(AutoencoderModel& m) {
    std::vector<Layer*> out;
    for (Layer& l : m.encoder) out.push_back(&l);
    for (Layer& l : m.decoder) out.push_back(&l);
    return out;
}

void save_json(const AutoencoderModel& model, const std::filesystem::path& path) {
    nlohmann::json doc = header_of(model);
    auto dump_layers = [](const std::vector<Layer>& layers) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Layer& l : layers) {
            std::vector<double> w(l.weight.data(), l.weight.data() + l.weight.size());
            std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
            arr.push_back({{"weight", w}, {"bias", b}});
        }
        return arr;
    };
    doc["encoder"] = dump_layers(model.encoder);
    doc["decoder"] = dump_layers(model.decoder);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << doc.dump() << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

AutoencoderModel load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint " + path.string() + ": " + e.what());
    }
    AutoencoderModel m = skeleton_from(doc);
    auto fill = [](std::vector<Layer>& layers, const nlohmann::json& arr) {
        if (!arr.is_array() || arr.size() != layers.size()) {
            throw FormatError("checkpoint: layer array has the wrong length");
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto w = arr[l].at("weight").get<std::vector<double>>();
            const auto b = arr[l].at("bias").get<std::vector<double>>();
            if (static_cast<Index>(w.size()) != layers[l].weight.size() ||
                static_cast<Index>(b.size()) != layers[l].bias.size()) {
                throw FormatError("checkpoint: parameter count mismatch in layer " +
                                  std::to_string(l));
            }
            std::memcpy(layers[l].weight.data(), w.data(), w.size() * sizeof(double));
            std::memcpy(layers[l].bias.data(), b.data(), b.size() * sizeof(double));
        }
    };
    fill(m.encoder, doc.at("encoder"));
    fill(m.decoder, doc.at("decoder"));
    return m;
}

void save_binary(const AutoencoderModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const std::string header = header_of(model).dump();
    const std::uint64_t header_len = header.size();
    out.write(kMagic.data(), kMagic.size());
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
    out.write(reinterpret_cast<const char*>(&header_len), sizeof header_len);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    auto write_layers = [&](const std::vector<Layer>& layers) {
        for (const Layer& l : layers) {
            out.write(reinterpret_cast<const char*>(l.weight.data()),
                      static_cast<std::streamsize>(l.weight.size() * sizeof(double)));
            out.write(reinterpret_cast<const char*>(l.bias.data()),
                      static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
        }
    };
    write_layers(model.encoder);
    write_layers(model.decoder);
    if (!out) throw IoError("failed writing " + path.string());
}

AutoencoderModel load_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::array<char, 8> magic{};
    std::uint32_t version = 0;
    std::uint64_t header_len = 0;
    in.read(magic.data(), magic.size());
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
    if (!in) throw IoError("checkpoint " + path.string() + ": truncated header");
    if (magic != kMagic) throw FormatError("checkpoint " + path.string() + ": bad magic");
    if (version != kVersion) {
        throw FormatError("checkpoint " + path.string() + ": unsupported version " +
                          std::to_string(version));
    }
    if (header_len > (std::uint64_t{1} << 30)) {
        throw FormatError("checkpoint " + path.string() + ": implausible header length");
    }
    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw IoError("checkpoint " + path.string() + ": truncated header");
    AutoencoderModel m;
    try {
        m = skeleton_from(nlohmann::json::parse(header));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint " + path.string() + ": " + e.what());
    }
    for (Layer* l : all_layers(m)) {
        in.read(reinterpret_cast<char*>(l->weight.data()),
                static_cast<std::streamsize>(l->weight.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(l->bias.data()),
                static_cast<std::streamsize>(l->bias.size() * sizeof(double)));
    }
    if (!in) throw IoError("checkpoint " + path.string() + ": truncated parameters");
    return m;
}

}  // namespace

void save_checkpoint(const AutoencoderModel& model, const std::filesystem::path& path) {
    validate(model);
    if (path.extension() == ".json") {
        save_json(model, path);
    } else {
        save_binary(model, path);
    }
}

AutoencoderModel load_checkpoint(const std::filesystem::path& path) {
    AutoencoderModel m = path.extension() == ".json" ? load_json(path) : load_binary(path);
    validate(m);
    return m;
}

}  // namespace dekm
