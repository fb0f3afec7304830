#include "cssi/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "cssi/dataset.hpp"
#include "cssi/dynamics.hpp"
#include "cssi/emit.hpp"
#include "cssi/error.hpp"

namespace cssi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) throw InvalidConfig(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
            throw InvalidConfig(where + "." + it.key() + ": unknown key");
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InvalidConfig(where + "." + key + ": wrong type");
    }
}

std::array<double, 3> split_ratios(const json& block, const std::string& where) {
    const auto v = get_or<std::vector<double>>(block, "split", {0.8, 0.1, 0.1}, where);
    if (v.size() != 3) throw InvalidConfig(where + ".split: expected three ratios");
    return {v[0], v[1], v[2]};
}

std::string dataset_kind(const json& block) {
    if (!block.is_object() || !block.contains("kind")) throw InvalidConfig("dataset.kind: missing");
    const auto kind = get_or<std::string>(block, "kind", "", "dataset");
    if (kind != "example" && kind != "synthetic" && kind != "dynamics")
        throw InvalidConfig("dataset.kind: unknown value '" + kind + "'");
    return kind;
}

void validate_dataset(const json& block) {
    const auto kind = dataset_kind(block);
    if (kind == "example") {
        reject_unknown(block, {"kind", "example", "noise_std", "n_samples", "seed", "split"}, "dataset");
        try {
            (void)example_from_string(get_or<std::string>(block, "example", "", "dataset"));
        } catch (const InvalidConfig& e) {
            throw InvalidConfig(std::string("dataset.example: ") + e.what());
        }
        if (get_or<double>(block, "noise_std", 0.1, "dataset") <= 0.0) throw InvalidConfig("dataset.noise_std: must be positive");
        if (get_or<std::int64_t>(block, "n_samples", 50000, "dataset") < 1) throw InvalidConfig("dataset.n_samples: must be positive");
    } else if (kind == "synthetic") {
        synth_config_from_json(block).validate();
    } else {
        reject_unknown(block, {"kind", "n_objects", "n_transitions", "seed", "params", "split"}, "dataset");
        const auto n = get_or<int>(block, "n_objects", 2, "dataset");
        if (n < 1 || n > 8) throw InvalidConfig("dataset.n_objects: must be in 1..8");
        if (get_or<std::int64_t>(block, "n_transitions", 10000, "dataset") < 1)
            throw InvalidConfig("dataset.n_transitions: must be positive");
        if (block.contains("params")) (void)DynamicsParams::from_json(block.at("params"));
    }
    if (kind != "synthetic") (void)split_ratios(block, "dataset");
}

template <class Job>
void run_parallel(std::size_t n, const Job& job) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1U, std::min<unsigned>(worker_threads(), static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

LabeledDataset load_split(const ExperimentConfig& cfg, const std::string& split) {
    const auto csv = data_path(cfg, split, "csv");
    if (!fs::exists(csv)) throw IoError("missing dataset " + csv.string() + " (run gen first)");
    return read_dataset(csv, data_path(cfg, split, "json"));
}

NcdModel load_model(const fs::path& dir, const std::string& stem) {
    const auto bin = dir / (stem + ".bin");
    const auto manifest = dir / (stem + ".json");
    if (!fs::exists(bin) || !fs::exists(manifest)) throw MissingCheckpoint("missing checkpoint " + bin.string());
    return NcdModel::load(bin, manifest);
}

std::vector<char> density_mask(const Scm& scm, const BoundaryGrid& grid) {
    std::vector<double> density;
    for (int iy = 0; iy < grid.resolution; ++iy)
        for (int ix = 0; ix < grid.resolution; ++ix) {
            const auto x = grid.point(ix, iy);
            double v = 0.0;
            if (scm.parent_law() == ParentLaw::standard_normal) {
                for (double c : x) v -= 0.5 * c * c;
            } else {
                for (double c : x) v += (c >= 0.0 && c <= 1.0) ? 0.0 : -INFINITY;
            }
            density.push_back(v);
        }
    std::vector<double> sorted = density;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    std::vector<char> mask(n);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < n; ++i) kept += (mask[i] = density[i] > median ? 1 : 0);
    if (kept == 0)
        for (std::size_t i = 0; i < n; ++i) mask[i] = density[i] >= median ? 1 : 0;
    return mask;
}

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}, {"n", s.n}}; }

}  // namespace

ScoreSource score_source_from_string(const std::string& s) {
    if (s == "model") return ScoreSource::model;
    if (s == "oracle") return ScoreSource::oracle;
    if (s == "shuffled") return ScoreSource::shuffled;
    throw InvalidConfig("eval.score_source: unknown value '" + s + "'");
}

const char* to_string(ScoreSource s) {
    switch (s) {
        case ScoreSource::model: return "model";
        case ScoreSource::oracle: return "oracle";
        case ScoreSource::shuffled: return "shuffled";
    }
    return "?";
}

ExperimentConfig parse_experiment(const json& j) {
    reject_unknown(j, {"dataset", "model", "eval", "seeds", "out"}, "config");
    ExperimentConfig cfg;
    if (!j.contains("dataset")) throw InvalidConfig("config.dataset: missing");
    cfg.dataset = j.at("dataset");
    validate_dataset(cfg.dataset);

    const json model = j.value("model", json::object());
    if (!model.is_object()) throw InvalidConfig("model: expected an object");
    cfg.model = NcdHyper::from_json(model);
    cfg.checkpoint_every = get_or<int>(model, "checkpoint_every", 0, "model");
    if (cfg.checkpoint_every < 0) throw InvalidConfig("model.checkpoint_every: must be non-negative");

    const json ev = j.value("eval", json::object());
    reject_unknown(ev, {"score_source", "null_seed", "boundary"}, "eval");
    cfg.eval.score_source = score_source_from_string(get_or<std::string>(ev, "score_source", "model", "eval"));
    cfg.eval.null_seed = get_or<std::uint64_t>(ev, "null_seed", 0, "eval");
    const json b = ev.value("boundary", json::object());
    reject_unknown(b, {"dim_x", "dim_y", "lo", "hi", "resolution", "epochs", "base"}, "eval.boundary");
    auto& bc = cfg.eval.boundary;
    bc.plane.dim_x = get_or<int>(b, "dim_x", 0, "eval.boundary");
    bc.plane.dim_y = get_or<int>(b, "dim_y", 1, "eval.boundary");
    const double lo = get_or<double>(b, "lo", -1.0, "eval.boundary");
    const double hi = get_or<double>(b, "hi", 1.0, "eval.boundary");
    if (!(hi > lo)) throw InvalidConfig("eval.boundary.hi: must exceed lo");
    bc.plane.x_lo = bc.plane.y_lo = lo;
    bc.plane.x_hi = bc.plane.y_hi = hi;
    bc.plane.base = get_or<std::vector<double>>(b, "base", {}, "eval.boundary");
    bc.resolution = get_or<int>(b, "resolution", 100, "eval.boundary");
    if (bc.resolution < 1) throw InvalidConfig("eval.boundary.resolution: must be at least 1");
    bc.epochs = get_or<std::vector<int>>(b, "epochs", {}, "eval.boundary");

    cfg.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {0}, "config");
    if (cfg.seeds.empty()) throw InvalidConfig("config.seeds: must not be empty");
    cfg.out = get_or<std::string>(j, "out", "out", "config");
    return cfg;
}

ExperimentConfig load_experiment(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("config not found: " + path.string());
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw InvalidConfig("config " + path.string() + ": " + e.what());
    }
    return parse_experiment(j);
}

LabeledDataset build_dataset(const json& block) {
    validate_dataset(block);
    const auto kind = dataset_kind(block);
    const auto seed = get_or<std::uint64_t>(block, "seed", 0, "dataset");
    if (kind == "synthetic") return generate(synth_config_from_json(block));
    if (kind == "example") {
        const auto scm = *dataset_scm(block);
        auto ds = sample(scm, get_or<std::size_t>(block, "n_samples", 50000, "dataset"), seed);
        ds.metadata["config"] = block;
        return ds;
    }
    const auto params = block.contains("params") ? DynamicsParams::from_json(block.at("params")) : DynamicsParams{};
    auto ds = rollout(get_or<int>(block, "n_objects", 2, "dataset"), get_or<std::size_t>(block, "n_transitions", 10000, "dataset"),
                      seed, params);
    ds.metadata["config"] = block;
    return ds;
}

Splits build_splits(const json& block) {
    const auto ds = build_dataset(block);
    const auto kind = dataset_kind(block);
    const auto ratios = kind == "synthetic" ? synth_config_from_json(block).split : split_ratios(block, "dataset");
    const auto seed = get_or<std::uint64_t>(block, "seed", 0, "dataset");
    return split(ds, ratios, mix64(seed ^ 0x5B117ULL));
}

std::optional<Scm> dataset_scm(const json& block) {
    const auto kind = dataset_kind(block);
    if (kind == "synthetic") return build_config(synth_config_from_json(block));
    if (kind == "example")
        return make_example(example_from_string(get_or<std::string>(block, "example", "", "dataset")),
                            get_or<double>(block, "noise_std", 0.1, "dataset"), get_or<std::uint64_t>(block, "seed", 0, "dataset"));
    return std::nullopt;
}

fs::path data_path(const ExperimentConfig& cfg, const std::string& split, const std::string& ext) {
    return cfg.out / "data" / (split + "." + ext);
}

fs::path model_dir(const ExperimentConfig& cfg, std::uint64_t seed, int target, int num_targets) {
    fs::path p = cfg.out / "models" / ("seed_" + std::to_string(seed));
    if (num_targets > 1) p /= "target_" + std::to_string(target);
    return p;
}

void tune_allocator() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

unsigned worker_threads() {
    if (const char* env = std::getenv("CSSI_LAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

void cmd_gen(const ExperimentConfig& cfg) {
    const Splits s = build_splits(cfg.dataset);
    write_dataset(s.train, data_path(cfg, "train", "csv"), data_path(cfg, "train", "json"));
    write_dataset(s.val, data_path(cfg, "val", "csv"), data_path(cfg, "val", "json"));
    write_dataset(s.test, data_path(cfg, "test", "csv"), data_path(cfg, "test", "json"));
}

void cmd_train(const ExperimentConfig& cfg) {
    const LabeledDataset train_ds = load_split(cfg, "train");
    const LabeledDataset val_ds = load_split(cfg, "val");
    const int targets = train_ds.num_targets();
    run_parallel(cfg.seeds.size() * static_cast<std::size_t>(targets), [&](std::size_t job) {
        const std::uint64_t seed = cfg.seeds[job / static_cast<std::size_t>(targets)];
        const int target = static_cast<int>(job % static_cast<std::size_t>(targets));
        NcdHyper hyper = cfg.model;
        hyper.seed = seed;
        const fs::path dir = model_dir(cfg, seed, target, targets);
        NcdModel model = make_model(train_ds, target, hyper);
        TrainOptions opts;
        opts.target = target;
        if (cfg.checkpoint_every > 0)
            opts.on_epoch = [&](int epoch, const NcdModel& m) {
                if (epoch % cfg.checkpoint_every == 0)
                    m.save(dir / ("epoch_" + std::to_string(epoch) + ".bin"), dir / ("epoch_" + std::to_string(epoch) + ".json"));
            };
        TrainingHistory history;
        try {
            history = train(model, train_ds, val_ds, opts);
        } catch (const NonFinite& e) {
            throw NonFinite("seed " + std::to_string(seed) + ", target " + std::to_string(target) + ": " + e.what());
        }
        model.save(dir / "final.bin", dir / "final.json");
        emit(dir / "history.csv", history_to_csv(history));
    });
}

json cmd_eval(const ExperimentConfig& cfg) {
    const LabeledDataset test = load_split(cfg, "test");
    const int targets = test.num_targets();
    const std::size_t jobs = cfg.seeds.size() * static_cast<std::size_t>(targets);
    std::vector<RocCurve> curves(jobs), nulls(jobs);
    run_parallel(jobs, [&](std::size_t job) {
        const std::uint64_t seed = cfg.seeds[job / static_cast<std::size_t>(targets)];
        const int target = static_cast<int>(job % static_cast<std::size_t>(targets));
        std::vector<ScoredPrediction> preds;
        if (cfg.eval.score_source == ScoreSource::oracle) {
            preds = oracle_scores(test, target);
        } else {
            preds = score_dataset(load_model(model_dir(cfg, seed, target, targets), "final"), test, target);
        }
        const std::uint64_t null_seed = mix64(cfg.eval.null_seed ^ mix64(seed + 1) ^ static_cast<std::uint64_t>(target));
        auto shuffled = shuffled_scores(preds, null_seed);
        curves[job] = roc(cfg.eval.score_source == ScoreSource::shuffled ? shuffled : preds);
        nulls[job] = roc(shuffled);
    });

    json per_seed = json::array();
    std::vector<double> aucs, null_aucs;
    std::vector<std::pair<std::string, RocCurve>> plotted;
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        const std::uint64_t seed = cfg.seeds[si];
        json tj = json::array();
        std::vector<double> a, na;
        for (int k = 0; k < targets; ++k) {
            const std::size_t job = si * static_cast<std::size_t>(targets) + static_cast<std::size_t>(k);
            std::string stem = "roc_seed_" + std::to_string(seed);
            if (targets > 1) stem += "_target_" + std::to_string(k);
            emit(cfg.out / "eval" / (stem + ".csv"), roc_to_csv(curves[job]));
            plotted.emplace_back(targets > 1 ? "seed " + std::to_string(seed) + " target " + std::to_string(k)
                                             : "seed " + std::to_string(seed),
                                 curves[job]);
            tj.push_back({{"target", k}, {"auc", curves[job].auc}, {"null_auc", nulls[job].auc}});
            a.push_back(curves[job].auc);
            na.push_back(nulls[job].auc);
        }
        const double auc = summarize(a).mean, null_auc = summarize(na).mean;
        aucs.push_back(auc);
        null_aucs.push_back(null_auc);
        per_seed.push_back({{"seed", seed}, {"auc", auc}, {"null_auc", null_auc}, {"targets", tj}});
    }
    emit(cfg.out / "eval" / "roc.svg", roc_to_svg(plotted, std::string("ROC (") + to_string(cfg.eval.score_source) + " scores)"));
    const Summary s = summarize(aucs), ns = summarize(null_aucs);
    json summary{{"score_source", to_string(cfg.eval.score_source)},
                 {"split", "test"},
                 {"rows", test.size()},
                 {"targets", targets},
                 {"per_seed", per_seed},
                 {"auc", summary_json(s)},
                 {"null_auc", summary_json(ns)},
                 {"margin_over_null", s.mean - ns.mean}};
    emit(cfg.out / "eval" / "summary.json", summary.dump(2) + "\n");
    return summary;
}

json cmd_boundary(const ExperimentConfig& cfg, const std::vector<int>& epochs) {
    json result{{"grids", json::array()}};
    if (epochs.empty()) return result;
    const auto scm = dataset_scm(cfg.dataset);
    const LabeledDataset meta_only = load_split(cfg, "test");
    const int targets = meta_only.num_targets();
    const auto& bc = cfg.eval.boundary;

    std::optional<BoundaryGrid> truth;
    std::vector<char> mask;
    if (scm) {
        Plane plane = bc.plane;
        if (plane.base.empty()) plane.base.assign(static_cast<std::size_t>(scm->layout().total_dim()), 0.0);
        truth = truth_grid(scm->decomposition(), scm->layout().count(), plane, bc.resolution);
        mask = density_mask(*scm, *truth);
        emit(cfg.out / "boundary" / "truth.svg", grid_to_svg(*truth, "ground truth"));
        emit(cfg.out / "boundary" / "truth.csv", grid_to_csv(*truth));
    }
    for (std::uint64_t seed : cfg.seeds) {
        const fs::path dir = model_dir(cfg, seed, 0, targets);
        for (int e : epochs) {
            const auto stem = "epoch_" + std::to_string(e);
            if (!fs::exists(dir / (stem + ".bin")))
                throw MissingCheckpoint("no checkpoint for epoch " + std::to_string(e) + " of seed " + std::to_string(seed) + " in " +
                                        dir.string());
            const NcdModel model = load_model(dir, stem);
            const BoundaryGrid grid = boundary_grid(model, bc.plane, bc.resolution);
            const fs::path out = cfg.out / "boundary" / ("seed_" + std::to_string(seed));
            emit(out / (stem + ".svg"), grid_to_svg(grid, "seed " + std::to_string(seed) + ", epoch " + std::to_string(e)));
            emit(out / (stem + ".csv"), grid_to_csv(grid));
            json entry{{"seed", seed}, {"epoch", e}};
            if (truth) {
                entry["agreement_dense"] = grid_agreement(grid, *truth, mask);
                entry["agreement_all"] = grid_agreement(grid, *truth);
            }
            result["grids"].push_back(entry);
        }
    }
    emit(cfg.out / "boundary" / "summary.json", result.dump(2) + "\n");
    return result;
}

std::vector<CampaignReport> cmd_oracle(const std::string& campaign, std::uint64_t seed, std::size_t n_instances) {
    std::vector<CampaignReport> reports;
    if (campaign == "all") {
        for (const auto& name : campaign_names()) reports.push_back(run_campaign(name, seed, n_instances, worker_threads()));
    } else {
        reports.push_back(run_campaign(campaign, seed, n_instances, worker_threads()));
    }
    return reports;
}

}  // namespace cssi
