#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cssi/campaigns.hpp"
#include "cssi/eval.hpp"
#include "cssi/ncd.hpp"
#include "cssi/scm.hpp"
#include "cssi/synthgen.hpp"

namespace cssi {

enum class ScoreSource { model, oracle, shuffled };
ScoreSource score_source_from_string(const std::string& s);
const char* to_string(ScoreSource s);

struct BoundaryConfig {
    Plane plane;  // base empty means zeros
    int resolution = 100;
    std::vector<int> epochs;
};

struct EvalConfig {
    ScoreSource score_source = ScoreSource::model;
    std::uint64_t null_seed = 0;
    BoundaryConfig boundary;
};

/// One experiment document:
///   dataset  {kind: example | synthetic | dynamics, ...}
///   model    NcdHyper fields plus checkpoint_every
///   eval     {score_source, null_seed, boundary {dim_x, dim_y, lo, hi, resolution, epochs, base}}
///   seeds    list of training seeds
///   out      output directory
struct ExperimentConfig {
    nlohmann::json dataset;
    NcdHyper model;
    /// Save epoch_{e} checkpoints every this many epochs (0: never).
    int checkpoint_every = 0;
    EvalConfig eval;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path out = "out";
};

/// Throws InvalidConfig naming the offending key.
ExperimentConfig parse_experiment(const nlohmann::json& j);
/// Throws IoError if unreadable, InvalidConfig on malformed JSON.
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Full dataset described by a dataset block, before splitting.
LabeledDataset build_dataset(const nlohmann::json& dataset);
/// Split ratios and seed of a dataset block.
Splits build_splits(const nlohmann::json& dataset);
/// The generating system of an example or synthetic block (none for dynamics).
std::optional<Scm> dataset_scm(const nlohmann::json& dataset);

/// Output layout under cfg.out.
std::filesystem::path data_path(const ExperimentConfig& cfg, const std::string& split, const std::string& ext);
std::filesystem::path model_dir(const ExperimentConfig& cfg, std::uint64_t seed, int target, int num_targets);

/// Keeps freed training buffers in the heap instead of returning them to
/// the kernel after every minibatch (glibc only; no-op elsewhere).
void tune_allocator();

/// Worker count: CSSI_LAB_THREADS if set and positive, else hardware concurrency.
unsigned worker_threads();

/// Writes data/{train,val,test}.csv with JSON sidecars.
void cmd_gen(const ExperimentConfig& cfg);

/// Trains one model per (seed, target) on data/train.csv and writes
/// final.bin/final.json, history.csv and periodic epoch_{e} checkpoints.
/// Throws IoError if the data is missing, NonFinite on divergence.
void cmd_train(const ExperimentConfig& cfg);

/// Scores data/test.csv, writes eval/roc_seed_{s}[_target_{k}].csv, eval/roc.svg and
/// eval/summary.json; returns the summary.
nlohmann::json cmd_eval(const ExperimentConfig& cfg);

/// Boundary grids for the requested epochs of every seed (target 0), plus
/// the ground truth when the generating system is known. Returns a summary
/// with per-grid agreement. Throws MissingCheckpoint naming the epoch.
nlohmann::json cmd_boundary(const ExperimentConfig& cfg, const std::vector<int>& epochs);

/// Named campaign or "all". Writes nothing; the caller prints the report.
std::vector<CampaignReport> cmd_oracle(const std::string& campaign, std::uint64_t seed, std::size_t n_instances);

}  // namespace cssi
