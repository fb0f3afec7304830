// cssi-lab: dataset generation, NCD training, evaluation and oracle campaigns.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cssi/emit.hpp"
#include "cssi/error.hpp"
#include "cssi/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNonFinite = 2;
constexpr int kExitViolation = 3;

cssi::ExperimentConfig load(const std::string& path, const std::optional<std::uint64_t>& seed, const std::string& out) {
    auto cfg = cssi::load_experiment(path);
    if (seed) cfg.seeds = {*seed};
    if (!out.empty()) cfg.out = out;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contextual decomposition lab: synthetic data, NCD training and CSSI oracle checks"};
    app.require_subcommand(1);

    std::string config, out, campaign = "all";
    std::optional<std::uint64_t> seed;
    std::size_t instances = 200;
    std::vector<int> epochs;
    bool epochs_given = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "run a single seed instead of the configured list");
        sub->add_option("--out", out, "output directory (overrides the config)");
    };
    auto* gen = app.add_subcommand("gen", "write train/val/test datasets");
    add_common(gen);
    auto* train = app.add_subcommand("train", "train one NCD model per seed and target");
    add_common(train);
    auto* eval = app.add_subcommand("eval", "ROC/AUC on the test split");
    add_common(eval);
    auto* boundary = app.add_subcommand("boundary", "decision-boundary grids from epoch checkpoints");
    add_common(boundary);
    boundary->add_option("--epochs", epochs, "epochs to plot (default: eval.boundary.epochs)")->delimiter(',');
    auto* oracle = app.add_subcommand("oracle-check", "run CSSI property campaigns");
    oracle->add_option("--campaign", campaign, "campaign name or 'all'");
    oracle->add_option("--instances", instances, "randomized instances per campaign");
    oracle->add_option("--seed", seed, "campaign seed");
    oracle->add_option("--out", out, "write the report JSON here");

    CLI11_PARSE(app, argc, argv);
    cssi::tune_allocator();

    try {
        if (gen->parsed()) {
            cssi::cmd_gen(load(config, seed, out));
        } else if (train->parsed()) {
            cssi::cmd_train(load(config, seed, out));
        } else if (eval->parsed()) {
            const auto summary = cssi::cmd_eval(load(config, seed, out));
            std::cout << summary["auc"].dump() << "\n";
        } else if (boundary->parsed()) {
            const auto cfg = load(config, seed, out);
            epochs_given = boundary->count("--epochs") > 0;
            const auto result = cssi::cmd_boundary(cfg, epochs_given ? epochs : cfg.eval.boundary.epochs);
            std::cout << result.dump(2) << "\n";
        } else if (oracle->parsed()) {
            const auto reports = cssi::cmd_oracle(campaign, seed.value_or(0), instances);
            nlohmann::json all = nlohmann::json::array();
            bool ok = true;
            for (const auto& r : reports) {
                std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.instances << " instances, " << r.violations
                          << " violations, " << r.skipped << " skipped, " << r.fixtures - r.fixture_failures << "/"
                          << r.fixtures << " fixtures\n";
                for (const auto& m : r.messages) std::cout << "  " << m << "\n";
                all.push_back(r.to_json());
                ok = ok && r.passed();
            }
            if (!out.empty()) cssi::emit(std::filesystem::path(out) / "oracle_report.json", all.dump(2) + "\n");
            return ok ? kExitOk : kExitViolation;
        }
    } catch (const cssi::NonFinite& e) {
        std::cerr << "error: numeric divergence: " << e.what() << "\n";
        return kExitNonFinite;
    } catch (const cssi::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
