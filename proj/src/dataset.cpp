#include "cssi/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cssi/error.hpp"

namespace cssi {

int VariableLayout::total_dim() const { return std::accumulate(widths.begin(), widths.end(), 0); }

int VariableLayout::offset(int j) const {
    return std::accumulate(widths.begin(), widths.begin() + j, 0);
}

std::vector<int> VariableLayout::owners() const {
    std::vector<int> out;
    for (int j = 0; j < count(); ++j) out.insert(out.end(), static_cast<std::size_t>(widths[j]), j);
    return out;
}

std::vector<double> VariableLayout::gather(std::span<const double> x, ParentSet vars) const {
    std::vector<double> out;
    int off = 0;
    for (int j = 0; j < count(); ++j) {
        if (vars.contains(j)) out.insert(out.end(), x.begin() + off, x.begin() + off + widths[j]);
        off += widths[j];
    }
    return out;
}

int LabeledDataset::y_dim() const { return std::accumulate(target_widths.begin(), target_widths.end(), 0); }

int LabeledDataset::target_offset(int k) const {
    return std::accumulate(target_widths.begin(), target_widths.begin() + k, 0);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

template <class T>
T parse_int(const std::string& s, std::size_t line_no) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw IoError("line " + std::to_string(line_no) + ": bad integer '" + s + "'");
    return v;
}

std::vector<int> widths_from(const nlohmann::json& meta, const char* key, std::vector<int> fallback) {
    if (meta.contains(key)) return meta.at(key).get<std::vector<int>>();
    return fallback;
}

}  // namespace

std::string dataset_to_csv(const LabeledDataset& ds) {
    std::string out;
    const int dx = ds.x_layout.total_dim();
    const int dy = ds.y_dim();
    const int nt = ds.num_targets();
    for (int i = 0; i < dx; ++i) out += "x" + std::to_string(i + 1) + ",";
    if (dy == 1) out += "y,";
    else
        for (int i = 0; i < dy; ++i) out += "y" + std::to_string(i + 1) + ",";
    out += "region";
    if (nt == 1) out += ",parent_mask";
    else
        for (int k = 0; k < nt; ++k) out += ",parent_mask_" + std::to_string(k + 1);
    out += '\n';
    for (const auto& r : ds.rows) {
        for (double v : r.x) out += format_double(v) + ',';
        for (double v : r.y) out += format_double(v) + ',';
        out += std::to_string(r.region);
        for (const auto& m : r.masks) out += ',' + std::to_string(m.bits());
        out += '\n';
    }
    return out;
}

LabeledDataset dataset_from_csv(const std::string& text, const nlohmann::json& metadata) {
    LabeledDataset ds;
    ds.metadata = metadata;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty dataset file");
    const auto header = split_line(line);
    int dx = 0, dy = 0, nmask = 0;
    for (const auto& h : header) {
        if (h.rfind("parent_mask", 0) == 0) ++nmask;
        else if (!h.empty() && h[0] == 'x') ++dx;
        else if (!h.empty() && h[0] == 'y') ++dy;
    }
    ds.x_layout.widths = widths_from(metadata, "x_widths", std::vector<int>(static_cast<std::size_t>(dx), 1));
    ds.target_widths = widths_from(metadata, "target_widths", {dy});
    if (ds.x_layout.total_dim() != dx || ds.y_dim() != dy || ds.num_targets() != nmask)
        throw IoError("dataset header disagrees with its metadata layout");
    const std::size_t expected = static_cast<std::size_t>(dx + dy + 1 + nmask);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != expected) throw IoError("line " + std::to_string(line_no) + ": wrong column count");
        DatasetRow r;
        std::size_t c = 0;
        for (int i = 0; i < dx; ++i) r.x.push_back(parse_double(cells[c++], line_no));
        for (int i = 0; i < dy; ++i) r.y.push_back(parse_double(cells[c++], line_no));
        r.region = parse_int<int>(cells[c++], line_no);
        for (int k = 0; k < nmask; ++k) r.masks.emplace_back(parse_int<std::uint64_t>(cells[c++], line_no));
        ds.rows.push_back(std::move(r));
    }
    return ds;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
}

void write_dataset(const LabeledDataset& ds, const std::filesystem::path& csv_path,
                   const std::filesystem::path& meta_path) {
    nlohmann::json meta = ds.metadata;
    meta["x_widths"] = ds.x_layout.widths;
    meta["target_widths"] = ds.target_widths;
    meta["rows"] = ds.size();
    write_text_file(csv_path, dataset_to_csv(ds));
    write_text_file(meta_path, meta.dump(2) + "\n");
}

LabeledDataset read_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& meta_path) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(meta_path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad metadata " + meta_path.string() + ": " + e.what());
    }
    return dataset_from_csv(read_text_file(csv_path), meta);
}

}  // namespace cssi
