#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cssi/layout.hpp"
#include "cssi/parent_set.hpp"

namespace cssi {

struct DatasetRow {
    std::vector<double> x;
    std::vector<double> y;
    int region = 0;
    std::vector<ParentSet> masks;  // one per target
};

/// Rows (x, y) with ground-truth labels.
///
/// A scalar-target dataset has one target of width 1 and one mask. Dynamics
/// datasets carry several vector-valued targets, each with its own mask.
struct LabeledDataset {
    VariableLayout x_layout;
    std::vector<int> target_widths{1};
    std::vector<DatasetRow> rows;
    nlohmann::json metadata = nlohmann::json::object();

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
    int num_targets() const { return static_cast<int>(target_widths.size()); }
    int y_dim() const;
    int target_offset(int k) const;
};

/// CSV with header x1..xD, y (or y1..yM), region, parent_mask (or
/// parent_mask_1..parent_mask_K). Floats use 17 significant digits.
std::string dataset_to_csv(const LabeledDataset& ds);
LabeledDataset dataset_from_csv(const std::string& text, const nlohmann::json& metadata);

/// Writes the CSV plus a JSON sidecar holding the metadata and layout.
void write_dataset(const LabeledDataset& ds, const std::filesystem::path& csv_path,
                   const std::filesystem::path& meta_path);
LabeledDataset read_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& meta_path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// printf("%.17g").
std::string format_double(double v);

}  // namespace cssi
