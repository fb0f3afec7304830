#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cssi/error.hpp"
#include "cssi/experiment.hpp"
#include "cssi/nn/checkpoint.hpp"

using namespace cssi;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("cssi_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

nlohmann::json small_config(const fs::path& out, int epochs = 2) {
    return {{"dataset",
             {{"kind", "example"}, {"example", "example1"}, {"noise_std", 0.1}, {"n_samples", 2000}, {"seed", 1}}},
            {"model", {{"epochs", epochs}, {"batch_size", 200}, {"hidden", {16, 16}}}},
            {"seeds", {0}},
            {"out", out.string()}};
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CSSI_LAB_BINARY) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config errors name the offending key") {
    const auto base = small_config("x");
    auto bad = base;
    bad["dataset"]["example"] = "example9";
    CHECK_THROWS_WITH_AS(parse_experiment(bad), doctest::Contains("example"), InvalidConfig);
    bad = base;
    bad["modle"] = nlohmann::json::object();
    CHECK_THROWS_WITH_AS(parse_experiment(bad), doctest::Contains("modle"), InvalidConfig);
    bad = base;
    bad["model"]["epoch"] = 3;
    CHECK_THROWS_WITH_AS(parse_experiment(bad), doctest::Contains("epoch"), InvalidConfig);
    bad = base;
    bad["eval"] = {{"score_source", "psychic"}};
    CHECK_THROWS_WITH_AS(parse_experiment(bad), doctest::Contains("score_source"), InvalidConfig);
    bad = base;
    bad["dataset"]["kind"] = "tabular";
    CHECK_THROWS_AS(parse_experiment(bad), InvalidConfig);
    CHECK_THROWS_AS(load_experiment("/nonexistent/cfg.json"), IoError);
}

TEST_CASE("gen is deterministic and splits 8:1:1") {
    const auto dir = fresh_dir("gen");
    auto j = small_config(dir / "a");
    j["dataset"]["n_samples"] = 50000;
    cmd_gen(parse_experiment(j));
    j["out"] = (dir / "b").string();
    cmd_gen(parse_experiment(j));
    for (const char* split : {"train", "val", "test"})
        CHECK(slurp(dir / "a" / "data" / (std::string(split) + ".csv")) ==
              slurp(dir / "b" / "data" / (std::string(split) + ".csv")));
    const auto meta = nlohmann::json::parse(slurp(dir / "a" / "data" / "train.json"));
    CHECK(meta.at("n").get<std::size_t>() == 40000);
    CHECK(nlohmann::json::parse(slurp(dir / "a" / "data" / "val.json")).at("n").get<std::size_t>() == 5000);
    CHECK(nlohmann::json::parse(slurp(dir / "a" / "data" / "test.json")).at("n").get<std::size_t>() == 5000);
    fs::remove_all(dir);
}

TEST_CASE("training needs data and zero epochs keeps the initialisation") {
    const auto dir = fresh_dir("train0");
    auto cfg = parse_experiment(small_config(dir, 0));
    CHECK_THROWS_AS(cmd_train(cfg), IoError);
    cmd_gen(cfg);
    cmd_train(cfg);
    const auto md = model_dir(cfg, 0, 0, 1);
    const NcdModel trained = NcdModel::load(md / "final.bin", md / "final.json");
    const auto train_ds = read_dataset(data_path(cfg, "train", "csv"), data_path(cfg, "train", "json"));
    const NcdModel init = make_model(train_ds, 0, trained.hyper());
    const auto a = trained.parameters(), b = init.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value == b[i]->value);
    fs::remove_all(dir);
}

TEST_CASE("three seeds give three checkpoints and a summary with spread") {
    const auto dir = fresh_dir("seeds");
    auto j = small_config(dir);
    j["seeds"] = {0, 1, 2};
    const auto cfg = parse_experiment(j);
    cmd_gen(cfg);
    cmd_train(cfg);
    for (std::uint64_t s : {0, 1, 2}) {
        CHECK(fs::exists(model_dir(cfg, s, 0, 1) / "final.bin"));
        CHECK(fs::exists(model_dir(cfg, s, 0, 1) / "history.csv"));
    }
    const auto summary = cmd_eval(cfg);
    CHECK(summary.at("auc").at("n") == 3);
    CHECK(summary.at("auc").contains("mean"));
    CHECK(summary.at("auc").contains("std"));
    CHECK(summary.at("per_seed").size() == 3);
    CHECK(fs::exists(dir / "eval" / "roc.svg"));
    CHECK(fs::exists(dir / "eval" / "roc_seed_2.csv"));
    CHECK(nlohmann::json::parse(slurp(dir / "eval" / "summary.json")) == summary);

    auto oracle = j;
    oracle["seeds"] = {1};
    oracle["eval"] = {{"score_source", "oracle"}};
    const auto one = cmd_eval(parse_experiment(oracle));
    CHECK(one.at("auc").at("mean") == 1.0);
    CHECK(one.at("auc").at("std") == 0.0);
    fs::remove_all(dir);
}

TEST_CASE("boundary grids per checkpointed epoch") {
    const auto dir = fresh_dir("boundary");
    auto j = small_config(dir, 4);
    j["model"]["checkpoint_every"] = 1;
    j["eval"] = {{"boundary", {{"dim_x", 0}, {"dim_y", 1}, {"lo", 0.0}, {"hi", 1.0}, {"resolution", 10}}}};
    const auto cfg = parse_experiment(j);
    cmd_gen(cfg);
    cmd_train(cfg);
    const auto result = cmd_boundary(cfg, {1, 2, 3, 4});
    for (int e = 1; e <= 4; ++e) CHECK(fs::exists(dir / "boundary" / "seed_0" / ("epoch_" + std::to_string(e) + ".svg")));
    CHECK(fs::exists(dir / "boundary" / "truth.svg"));
    CHECK(result.contains("grids"));
    CHECK_THROWS_WITH_AS(cmd_boundary(cfg, {7}), doctest::Contains("7"), MissingCheckpoint);

    const auto empty_dir = fresh_dir("boundary_empty");
    auto k = j;
    k["out"] = empty_dir.string();
    cmd_boundary(parse_experiment(k), {});
    CHECK(fs::is_empty(empty_dir));
    fs::remove_all(dir);
    fs::remove_all(empty_dir);
}

TEST_CASE("command line exit codes") {
    const auto dir = fresh_dir("exit");
    const auto cfg_path = dir / "cfg.json";
    {
        std::ofstream(cfg_path) << small_config(dir / "run", 1).dump();
    }
    CHECK(run_cli("gen --config " + cfg_path.string()) == 0);
    CHECK(run_cli("train --config " + cfg_path.string()) == 0);
    CHECK(run_cli("eval --config " + cfg_path.string()) == 0);
    CHECK(run_cli("oracle-check --campaign entailment --instances 5") == 0);
    CHECK(run_cli("oracle-check --campaign nope") == 1);
    {
        auto bad = small_config(dir / "run", 1);
        bad["dataset"]["n_samples"] = "many";
        std::ofstream(cfg_path) << bad.dump();
    }
    CHECK(run_cli("gen --config " + cfg_path.string()) == 1);
    CHECK(run_cli("train") != 0);
    fs::remove_all(dir);
}

TEST_CASE("oracle command runs all campaigns") {
    const auto reports = cmd_oracle("all", 3, 10);
    CHECK(reports.size() == campaign_names().size());
    for (const auto& r : reports) CHECK(r.passed());
    CHECK_THROWS_AS(cmd_oracle("nope", 0, 1), UnknownCampaign);
}

}
