// Acceptance checks: `acceptance N` runs criterion N, `acceptance` runs all.
// Prints one "criterion N: PASS|FAIL ..." line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "cssi/campaigns.hpp"
#include "cssi/dynamics.hpp"
#include "cssi/error.hpp"
#include "cssi/eval.hpp"
#include "cssi/experiment.hpp"
#include "cssi/ncd.hpp"
#include "cssi/nn/ops.hpp"
#include "cssi/oracle.hpp"
#include "cssi/synthgen.hpp"

namespace fs = std::filesystem;
using namespace cssi;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

fs::path work_dir(const std::string& name) {
    const char* env = std::getenv("CSSI_ACCEPTANCE_DIR");
    const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "cssi_acceptance";
    const auto dir = root / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentConfig repo_config(const std::string& file, const fs::path& out) {
    auto cfg = load_experiment(fs::path(CSSI_SOURCE_DIR) / "configs" / file);
    cfg.out = out;
    return cfg;
}

// ---------------------------------------------------------------- 1

Verdict oracle_suite() {
    const auto t0 = Clock::now();
    const auto reports = cmd_oracle("all", 0, 200);
    std::size_t violations = 0, fixture_failures = 0, instances = 0;
    std::string failed;
    for (const auto& r : reports) {
        violations += r.violations;
        fixture_failures += r.fixture_failures;
        instances += r.instances;
        if (!r.passed()) failed += " " + r.name;
    }
    // The diagonal-quadrant union satisfies both CSSIs, yet their intersection fails.
    const auto f = fixtures::non_convex_union(10);
    const ParentSet a = ParentSet::of({0, 2}), b = ParentSet::of({1, 2});
    const bool counterexample = check_cssi(f.m, f.e1_or_e2, a) && check_cssi(f.m, f.e1_or_e2, b) &&
                                !check_intersection_property(f.m, f.e1_or_e2, a, b) &&
                                !intersection_precondition(f.m, f.e1_or_e2, a, b);
    const double secs = seconds_since(t0);
    const bool ok = failed.empty() && counterexample && reports.size() == 7 && secs <= 300.0;
    return {ok, std::to_string(reports.size()) + " campaigns, " + std::to_string(instances) + " instances, " +
                    std::to_string(violations) + " violations, " + std::to_string(fixture_failures) +
                    " fixture failures, counterexample " + (counterexample ? "fails intersection" : "NOT rejected") +
                    (failed.empty() ? "" : ", failing:" + failed) + ", " + fmt("%.1f s", secs)};
}

// ---------------------------------------------------------------- 2

using Builder = std::function<nn::Var(nn::Tape&, std::vector<nn::Var>&)>;

double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4}); }

double fd_check(std::vector<nn::Parameter>& ps, const Builder& f) {
    auto eval = [&] {
        nn::Tape t;
        std::vector<nn::Var> vs;
        for (auto& p : ps) vs.push_back(t.parameter(p));
        return t.scalar(f(t, vs));
    };
    nn::Tape t;
    std::vector<nn::Var> vs;
    for (auto& p : ps) {
        p.zero_grad();
        vs.push_back(t.parameter(p));
    }
    t.backward(f(t, vs));
    constexpr double h = 1e-6;
    double worst = 0.0;
    for (auto& p : ps)
        for (Eigen::Index k = 0; k < p.value.size(); ++k) {
            const double orig = p.value(k);
            p.value(k) = orig + h;
            const double up = eval();
            p.value(k) = orig - h;
            const double down = eval();
            p.value(k) = orig;
            worst = std::max(worst, relative_error(p.grad(k), (up - down) / (2.0 * h)));
        }
    return worst;
}

nn::Matrix uniform_matrix(int r, int c, CounterRng& rng, double lo, double hi) {
    nn::Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(lo, hi);
    return m;
}

// Values kept at least `gap` away from every kink in `kinks`.
nn::Matrix away_from(int r, int c, CounterRng& rng, std::vector<double> kinks, double gap) {
    nn::Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        double v;
        bool near;
        do {
            v = rng.uniform(-2.0, 2.0);
            near = false;
            for (double k : kinks) near = near || std::abs(v - k) < gap;
        } while (near);
        m(i) = v;
    }
    return m;
}

Verdict gradient_integrity() {
    using namespace nn;
    const auto t0 = Clock::now();
    CounterRng rng(2024);
    double worst_op = 0.0;
    std::string worst_name;
    std::size_t ops = 0;
    auto check = [&](const std::string& name, std::vector<Parameter> ps, const Builder& f) {
        const double e = fd_check(ps, f);
        ++ops;
        if (e > worst_op) {
            worst_op = e;
            worst_name = name;
        }
    };
    auto P = [](std::initializer_list<Matrix> ms) {
        std::vector<Parameter> ps;
        for (const auto& m : ms) ps.push_back(Parameter{"p" + std::to_string(ps.size()), m, Matrix()});
        return ps;
    };
    const std::vector<int> widths{2, 1, 3};
    const Matrix a = uniform_matrix(5, 4, rng, -1, 1), b = uniform_matrix(5, 4, rng, -1, 1);
    const Matrix w = uniform_matrix(4, 3, rng, -1, 1), row = uniform_matrix(1, 3, rng, -1, 1);
    const Matrix pos = uniform_matrix(5, 4, rng, 0.2, 2.0), prob = uniform_matrix(5, 4, rng, 0.1, 0.9);
    const Matrix e6 = uniform_matrix(5, 6, rng, -1, 1), g3 = uniform_matrix(6, 1, rng, -3, 3);
    const Matrix noise = uniform_matrix(5, 4, rng, -3, 3);
    const Matrix y = uniform_matrix(5, 1, rng, -2, 2), mu = uniform_matrix(5, 1, rng, -2, 2), lv = uniform_matrix(5, 1, rng, -3, 3);
    check("matmul+add_row", P({a, w, row}), [](Tape& t, auto& v) { return sum(t, square(t, add_row(t, matmul(t, v[0], v[1]), v[2]))); });
    check("add", P({a, b}), [](Tape& t, auto& v) { return sum(t, square(t, add(t, v[0], v[1]))); });
    check("sub", P({a, b}), [](Tape& t, auto& v) { return sum(t, square(t, sub(t, v[0], v[1]))); });
    check("mul", P({a, b}), [](Tape& t, auto& v) { return sum(t, mul(t, v[0], v[1])); });
    check("scale", P({a}), [](Tape& t, auto& v) { return sum(t, square(t, scale(t, v[0], 1.7))); });
    check("add_scalar", P({a}), [](Tape& t, auto& v) { return sum(t, square(t, add_scalar(t, v[0], -0.4))); });
    check("tanh", P({a, b}), [](Tape& t, auto& v) { return sum(t, mul(t, tanh(t, v[0]), v[1])); });
    check("relu", P({away_from(5, 4, rng, {0.0}, 0.05), b}), [](Tape& t, auto& v) { return sum(t, mul(t, relu(t, v[0]), v[1])); });
    check("sigmoid", P({a, b}), [](Tape& t, auto& v) { return sum(t, mul(t, sigmoid(t, v[0]), v[1])); });
    check("exp", P({a, b}), [](Tape& t, auto& v) { return sum(t, mul(t, exp(t, v[0]), v[1])); });
    check("log", P({pos, b}), [](Tape& t, auto& v) { return sum(t, mul(t, log(t, v[0]), v[1])); });
    check("square", P({a}), [](Tape& t, auto& v) { return sum(t, square(t, v[0])); });
    check("row_sum", P({a, b}), [](Tape& t, auto& v) { return sum(t, square(t, row_sum(t, mul(t, v[0], v[1])))); });
    check("concat_cols", P({a, b}), [](Tape& t, auto& v) { return sum(t, square(t, concat_cols(t, v[0], v[1]))); });
    check("slice_cols", P({a}), [](Tape& t, auto& v) { return sum(t, square(t, slice_cols(t, v[0], 1, 2))); });
    check("repeat_rows", P({a}), [](Tape& t, auto& v) { return sum(t, square(t, repeat_rows(t, v[0], 3))); });
    check("expand_cols", P({uniform_matrix(5, 3, rng, -1, 1), e6}),
          [&](Tape& t, auto& v) { return sum(t, mul(t, expand_cols(t, v[0], widths), v[1])); });
    check("clamp", P({away_from(5, 4, rng, {-0.5, 0.5}, 0.05), b}),
          [](Tape& t, auto& v) { return sum(t, mul(t, clamp(t, v[0], -0.5, 0.5), v[1])); });
    check("group_log_mean_exp", P({g3}), [](Tape& t, auto& v) { return sum(t, group_log_mean_exp(t, v[0], 3)); });
    check("binary_concrete", P({a, b}), [&](Tape& t, auto& v) { return sum(t, mul(t, binary_concrete(t, v[0], noise, 0.4), v[1])); });
    check("logit", P({prob, b}), [](Tape& t, auto& v) { return sum(t, mul(t, logit(t, v[0]), v[1])); });
    check("gaussian_loglik", P({y, mu, lv}), [](Tape& t, auto& v) { return sum(t, gaussian_loglik(t, v[0], v[1], v[2])); });

    // Full objective on 5 minibatches of a reduced model (tanh keeps the loss smooth).
    const auto ds = sample(make_example(Example::toy2d, 0.1, 5), 2000, 5);
    NcdHyper h;
    h.hidden = {32, 32, 32};
    h.activation = Activation::tanh;
    h.l1_lambda = 0.01;
    h.seed = 5;
    NcdModel model = make_model(ds, 0, h);
    double worst_loss = 0.0;
    std::size_t coords = 0;
    constexpr std::size_t kBatch = 32;
    for (std::size_t mb = 0; mb < 5; ++mb) {
        std::vector<std::size_t> rows(kBatch);
        for (std::size_t i = 0; i < kBatch; ++i) rows[i] = mb * kBatch + i;
        const Batch batch = make_batch(ds, 0, rows);
        CounterRng nrng(77, mb);
        const Matrix gumbel = draw_logistic_noise(kBatch, h.n_mc, model.num_vars(), nrng);
        const double tau = 1.0 - 0.15 * static_cast<double>(mb);
        for (auto* p : model.parameters()) p->zero_grad();
        Tape tape;
        tape.backward(ncd_loss(tape, model, batch, gumbel, tau).loss);
        constexpr double step = 1e-5;
        for (auto* p : model.parameters())
            for (Eigen::Index k = 0; k < p->value.size(); ++k) {
                const double orig = p->value(k);
                p->value(k) = orig + step;
                const double up = ncd_loss_value(model, batch, gumbel, tau);
                p->value(k) = orig - step;
                const double down = ncd_loss_value(model, batch, gumbel, tau);
                p->value(k) = orig;
                worst_loss = std::max(worst_loss, relative_error(p->grad(k), (up - down) / (2.0 * step)));
                ++coords;
            }
    }
    const double secs = seconds_since(t0);
    const bool ok = worst_op <= 1e-4 && worst_loss <= 1e-4 && secs <= 60.0;
    return {ok, std::to_string(ops) + " ops, worst op rel err " + fmt("%.2e", worst_op) + " (" + worst_name +
                    "), NCD loss worst rel err " + fmt("%.2e", worst_loss) + " over " + std::to_string(coords) +
                    " parameter checks on 5 minibatches, " + fmt("%.1f s", secs)};
}

// ---------------------------------------------------------------- 3

Verdict masking_exactness() {
    // Vector-valued variables (width 2) exercise the per-variable expansion.
    const auto ds = rollout(2, 500, 3);
    NcdHyper h;
    h.seed = 11;
    const NcdModel model = make_model(ds, 0, h);
    CounterRng rng(33);
    const int d = model.num_vars();
    std::size_t probes = 0, violations = 0;
    while (probes < 10000) {
        nn::Matrix x(1, model.x_dim()), z(1, d);
        for (int c = 0; c < model.x_dim(); ++c) x(0, c) = rng.uniform(-1.0, 2.0);
        for (int j = 0; j < d; ++j) z(0, j) = rng.uniform() < 0.5 ? 0.0 : 1.0;
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
        z(0, j) = 0.0;
        const nn::Matrix base = model.density_head(x, z);
        nn::Matrix moved = x;
        const int width = model.layout().widths[static_cast<std::size_t>(j)];
        const int c = model.layout().offset(j) + static_cast<int>(rng.below(static_cast<std::uint64_t>(width)));
        moved(0, c) += rng.normal() * 10.0;
        if (!(model.density_head(moved, z).array() == base.array()).all()) ++violations;
        ++probes;
    }
    return {violations == 0, std::to_string(probes) + " probes, " + std::to_string(violations) + " outputs changed"};
}

// ---------------------------------------------------------------- 4-7

struct PipelineResult {
    nlohmann::json summary;
    double train_seconds_per_seed = 0.0;
};

PipelineResult run_pipeline(const ExperimentConfig& cfg) {
    cmd_gen(cfg);
    const auto t0 = Clock::now();
    cmd_train(cfg);
    PipelineResult r;
    r.train_seconds_per_seed = seconds_since(t0) / static_cast<double>(cfg.seeds.size());
    r.summary = cmd_eval(cfg);
    return r;
}

std::string per_seed(const nlohmann::json& summary) {
    std::string s;
    for (const auto& e : summary.at("per_seed")) s += (s.empty() ? "" : ", ") + fmt("%.3f", e.at("auc").get<double>());
    return "[" + s + "]";
}

Verdict example1_recovery() {
    const auto cfg = repo_config("example1.json", work_dir("example1"));
    const auto r = run_pipeline(cfg);
    double worst = 1.0;
    for (const auto& e : r.summary.at("per_seed")) worst = std::min(worst, e.at("auc").get<double>());
    const double mean = r.summary.at("auc").at("mean").get<double>();
    const bool ok = cfg.seeds.size() == 3 && worst >= 0.95 && r.train_seconds_per_seed <= 600.0;
    return {ok, "test AUC per seed " + per_seed(r.summary) + ", mean " + fmt("%.3f", mean) + ", " +
                    fmt("%.1f min/seed", r.train_seconds_per_seed / 60.0)};
}

Verdict synthetic_recovery() {
    const auto cfg = repo_config("synthetic_uniform_linear.json", work_dir("synthetic"));
    const auto r = run_pipeline(cfg);
    const double mean = r.summary.at("auc").at("mean").get<double>();
    const double margin = r.summary.at("margin_over_null").get<double>();
    const bool ok = cfg.seeds.size() == 3 && mean >= 0.85 && margin >= 0.10 && r.train_seconds_per_seed <= 1200.0;
    return {ok, "test AUC per seed " + per_seed(r.summary) + ", mean " + fmt("%.3f", mean) + ", null " +
                    fmt("%.3f", r.summary.at("null_auc").at("mean").get<double>()) + ", margin " + fmt("%.3f", margin) +
                    ", " + fmt("%.1f min/seed", r.train_seconds_per_seed / 60.0)};
}

Verdict boundary_agreement() {
    const auto cfg = repo_config("toy2d.json", work_dir("toy2d"));
    cmd_gen(cfg);
    cmd_train(cfg);
    const auto result = cmd_boundary(cfg, {5, 10, 15, 20});
    double sum = 0.0;
    int n = 0;
    std::string trail;
    for (const auto& g : result.at("grids")) {
        trail += (trail.empty() ? "" : " ") + std::string("e") + std::to_string(g.at("epoch").get<int>()) + "=" +
                 fmt("%.3f", g.at("agreement_dense").get<double>());
        if (g.at("epoch").get<int>() == 20) {
            sum += g.at("agreement_dense").get<double>();
            ++n;
        }
    }
    const double mean = n ? sum / n : 0.0;
    const bool ok = n > 0 && cfg.eval.boundary.resolution == 100 && mean >= 0.90;
    return {ok, "epoch-20 agreement above median density " + fmt("%.3f", mean) + " over " + std::to_string(n) +
                    " seeds (" + trail + ")"};
}

Verdict dynamics_recovery() {
    CounterRng rng(99);
    double worst = 0.0;
    std::size_t collisions = 0;
    for (int trial = 0; collisions < 10000 && trial < 1000000; ++trial) {
        std::vector<ObjectState> objs(2);
        for (auto& o : objs) {
            o.p = {rng.uniform(0.4, 0.6), rng.uniform(0.4, 0.6)};
            o.v = {rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
        }
        const double px = objs[0].v[0] + objs[1].v[0], py = objs[0].v[1] + objs[1].v[1];
        if (resolve_collisions(objs).empty()) continue;
        ++collisions;
        worst = std::max({worst, std::abs(objs[0].v[0] + objs[1].v[0] - px), std::abs(objs[0].v[1] + objs[1].v[1] - py)});
    }
    const auto cfg = repo_config("dynamics2.json", work_dir("dynamics"));
    const auto r = run_pipeline(cfg);
    const double mean = r.summary.at("auc").at("mean").get<double>();
    const bool ok = cfg.seeds.size() == 3 && r.summary.at("targets").get<int>() == 4 && mean >= 0.80 && worst <= 1e-12;
    return {ok, "mean per-target AUC " + fmt("%.3f", mean) + " per seed " + per_seed(r.summary) + ", " +
                    std::to_string(r.summary.at("rows").get<int>()) + " test rows, momentum error " + fmt("%.1e", worst) +
                    " over " + std::to_string(collisions) + " collisions"};
}

// ---------------------------------------------------------------- 8

Verdict roc_harness() {
    std::vector<double> pi(9, 0.1);
    pi[0] = 0.9;
    pi[1] = 0.8;
    const auto c = confusion(pi, ParentSet::of({0}), 0.5);
    const bool worked = c.tp == 1 && c.fp == 1 && c.fn == 0 && c.tn == 7;

    CounterRng rng(8);
    std::size_t thresholds = 0, broken = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t rows = 1 + rng.below(300);
        const int d = 1 + static_cast<int>(rng.below(9));
        std::vector<ScoredPrediction> preds(rows);
        for (auto& p : preds) {
            for (int j = 0; j < d; ++j) {
                p.scores.push_back(std::round(rng.uniform() * 20.0) / 20.0);
                if (rng.uniform() < 0.3) p.truth = p.truth.with(j);
            }
        }
        for (const auto& pt : roc(preds).points) {
            ++thresholds;
            if (pooled_confusion(preds, pt.threshold).total() != rows * static_cast<std::size_t>(d)) ++broken;
        }
    }
    return {worked && broken == 0, std::string("worked example (TP,FP,FN,TN) = (") + std::to_string(c.tp) + "," +
                                       std::to_string(c.fp) + "," + std::to_string(c.fn) + "," + std::to_string(c.tn) +
                                       "), B*d identity held at " + std::to_string(thresholds - broken) + "/" +
                                       std::to_string(thresholds) + " thresholds"};
}

// ---------------------------------------------------------------- 9

Verdict determinism() {
    const auto root = work_dir("determinism");
    std::string summaries[2];
    for (int run = 0; run < 2; ++run) {
        const auto out = root / ("run" + std::to_string(run));
        const auto cfg_path = root / ("cfg" + std::to_string(run) + ".json");
        nlohmann::json j{{"dataset", {{"kind", "example"}, {"example", "example1"}, {"n_samples", 5000}, {"seed", 3}}},
                         {"model", {{"epochs", 3}, {"hidden", {32, 32}}, {"batch_size", 250}}},
                         {"seeds", {7}},
                         {"out", out.string()}};
        std::ofstream(cfg_path) << j.dump(2);
        for (const char* cmd : {"gen", "train", "eval"}) {
            const std::string line = std::string(CSSI_LAB_BINARY) + " " + cmd + " --config " + cfg_path.string() + " > /dev/null";
            if (std::system(line.c_str()) != 0) return {false, std::string("cssi-lab ") + cmd + " failed"};
        }
        summaries[run] = read_text_file(out / "eval" / "summary.json");
    }
    const bool same = summaries[0] == summaries[1];
    return {same && !summaries[0].empty(), "summary.json of two gen/train/eval runs " +
                                               std::string(same ? "byte-identical" : "DIFFER") + " (" +
                                               std::to_string(summaries[0].size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
    tune_allocator();
    const std::function<Verdict()> criteria[] = {oracle_suite,       gradient_integrity, masking_exactness,
                                                 example1_recovery,  synthetic_recovery, boundary_agreement,
                                                 dynamics_recovery,  roc_harness,        determinism};
    int first = 1, last = 9;
    if (argc > 1) {
        first = last = std::atoi(argv[1]);
        if (first < 1 || first > 9) {
            std::cerr << "usage: acceptance [1-9]\n";
            return 2;
        }
    }
    bool all = true;
    for (int n = first; n <= last; ++n) {
        Verdict v;
        try {
            v = criteria[n - 1]();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.detail << std::endl;
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
