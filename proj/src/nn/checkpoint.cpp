#include "cssi/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>

#include "cssi/dataset.hpp"
#include "cssi/error.hpp"

namespace cssi::nn {

namespace {

void put_le(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

double get_le(const std::string& in, std::size_t pos) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t{static_cast<unsigned char>(in[pos + static_cast<std::size_t>(b)])} << (8 * b);
    return std::bit_cast<double>(bits);
}

}  // namespace

void save_parameters(const std::vector<const Parameter*>& params, const std::filesystem::path& bin_path,
                     const std::filesystem::path& manifest_path, const nlohmann::json& extra) {
    std::string blob;
    nlohmann::json entries = nlohmann::json::array();
    std::size_t offset = 0;
    for (const Parameter* p : params) {
        entries.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}, {"offset", offset}});
        for (Eigen::Index i = 0; i < p->value.size(); ++i) put_le(blob, p->value.data()[i]);
        offset += static_cast<std::size_t>(p->value.size());
    }
    nlohmann::json manifest = extra.is_object() ? extra : nlohmann::json::object();
    manifest["format"] = "f64le-colmajor";
    manifest["count"] = offset;
    manifest["parameters"] = entries;
    write_text_file(bin_path, blob);
    write_text_file(manifest_path, manifest.dump(2) + "\n");
}

nlohmann::json read_manifest(const std::filesystem::path& manifest_path) {
    if (!std::filesystem::exists(manifest_path))
        throw MissingCheckpoint("checkpoint manifest not found: " + manifest_path.string());
    try {
        return nlohmann::json::parse(read_text_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint manifest " + manifest_path.string() + ": " + e.what());
    }
}

void load_parameters(const std::vector<Parameter*>& params, const std::filesystem::path& bin_path,
                     const std::filesystem::path& manifest_path) {
    const nlohmann::json manifest = read_manifest(manifest_path);
    if (!std::filesystem::exists(bin_path)) throw MissingCheckpoint("checkpoint not found: " + bin_path.string());
    const std::string blob = read_text_file(bin_path);
    if (blob.size() != 8 * manifest.at("count").get<std::size_t>())
        throw ShapeMismatch("checkpoint " + bin_path.string() + " has unexpected size");

    std::map<std::string, nlohmann::json> by_name;
    for (const auto& e : manifest.at("parameters")) by_name[e.at("name").get<std::string>()] = e;
    for (Parameter* p : params) {
        const auto it = by_name.find(p->name);
        if (it == by_name.end()) throw ShapeMismatch("checkpoint lacks parameter '" + p->name + "'");
        const auto rows = it->second.at("rows").get<Eigen::Index>();
        const auto cols = it->second.at("cols").get<Eigen::Index>();
        if (rows != p->value.rows() || cols != p->value.cols())
            throw ShapeMismatch("checkpoint shape of '" + p->name + "' differs");
        const auto offset = it->second.at("offset").get<std::size_t>();
        for (Eigen::Index i = 0; i < p->value.size(); ++i)
            p->value.data()[i] = get_le(blob, 8 * (offset + static_cast<std::size_t>(i)));
        p->zero_grad();
    }
}

}  // namespace cssi::nn
