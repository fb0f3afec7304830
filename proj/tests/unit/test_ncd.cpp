#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "cssi/error.hpp"
#include "cssi/ncd.hpp"
#include "cssi/nn/ops.hpp"
#include "cssi/synthgen.hpp"

using namespace cssi;

namespace {

NcdHyper small_hyper(nn::Activation act = nn::Activation::tanh) {
    NcdHyper h;
    h.hidden = {16, 16};
    h.activation = act;
    h.batch_size = 32;
    h.l1_lambda = 0.05;
    h.seed = 3;
    return h;
}

std::vector<std::size_t> first_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = i;
    return r;
}

// Independent evaluation of -log sum_z p(y|x,z) p(z|x) for one-dimensional targets.
double brute_nll(const NcdModel& model, const Batch& b, Eigen::Index row) {
    const int d = model.num_vars();
    const nn::Matrix x = b.x.row(row);
    const nn::Matrix pi = model.parent_scores(x);
    double total = 0.0;
    for (int mask = 0; mask < (1 << d); ++mask) {
        nn::Matrix z(1, d);
        double prior = 1.0;
        for (int j = 0; j < d; ++j) {
            const bool on = (mask >> j) & 1;
            z(0, j) = on ? 1.0 : 0.0;
            prior *= on ? pi(0, j) : 1.0 - pi(0, j);
        }
        const nn::Matrix head = model.density_head(x, z);
        const double ys = (b.y(row, 0) - model.y_mean()[0]) / model.y_std()[0];
        const double ll = nn::gaussian_loglik(ys, head(0, 0), head(0, 1)) - std::log(model.y_std()[0]);
        total += prior * std::exp(ll);
    }
    return -std::log(total);
}

}  // namespace

TEST_SUITE("ncd_model") {

TEST_CASE("masked input layout") {
    const VariableLayout layout{{1, 2}};
    const std::vector<double> x{1.5, -2.0, 3.0}, z{0.0, 1.0};
    const auto in = build_masked_input(x, z, layout);
    CHECK(in == std::vector<double>{0.0, -2.0, 3.0, 0.0, 1.0});
}

TEST_CASE("masked variables cannot influence the density head") {
    const auto ds = sample(make_example(Example::toy2d, 0.1, 1), 2000, 1);
    NcdModel model = make_model(ds, 0, small_hyper(nn::Activation::relu));
    CounterRng rng(9);
    int probes = 0;
    for (int i = 0; i < 500; ++i) {
        nn::Matrix x(1, 6), z(1, 2);
        for (int c = 0; c < 6; ++c) x(0, c) = 3.0 * rng.normal();
        const int off = static_cast<int>(rng.below(2));
        z(0, off) = 0.0;
        z(0, 1 - off) = rng.uniform();
        const nn::Matrix base = model.density_head(x, z);
        nn::Matrix x2 = x;
        for (int c = 0; c < 3; ++c) x2(0, 3 * off + c) = 100.0 * rng.normal();
        CHECK((model.density_head(x2, z).array() == base.array()).all());
        ++probes;
    }
    CHECK(probes == 500);
}

TEST_CASE("the objective gradient matches finite differences") {
    const auto ds = sample(make_example(Example::example1), 200, 2);
    NcdModel model = make_model(ds, 0, small_hyper());
    const Batch b = make_batch(ds, 0, first_rows(32));
    CounterRng rng(4);
    const nn::Matrix noise = draw_logistic_noise(32, model.hyper().n_mc, 2, rng);

    for (auto* p : model.parameters()) p->zero_grad();
    nn::Tape tape;
    tape.backward(ncd_loss(tape, model, b, noise, 0.7).loss);

    const double h = 1e-6;
    double worst = 0.0;
    int checked = 0;
    for (auto* p : model.parameters())
        for (Eigen::Index k = 0; k < p->value.size(); k += 7) {
            const double orig = p->value(k);
            p->value(k) = orig + h;
            const double up = ncd_loss_value(model, b, noise, 0.7);
            p->value(k) = orig - h;
            const double down = ncd_loss_value(model, b, noise, 0.7);
            p->value(k) = orig;
            const double fd = (up - down) / (2.0 * h);
            worst = std::max(worst, std::abs(p->grad(k) - fd) / std::max({std::abs(p->grad(k)), std::abs(fd), 1e-4}));
            ++checked;
        }
    CHECK(checked > 50);
    CHECK(worst < 1e-4);
}

TEST_CASE("oracle and all-ones gates ignore the relaxation noise") {
    const auto ds = sample(make_example(Example::example1), 100, 3);
    NcdModel model = make_model(ds, 0, small_hyper());
    const Batch b = make_batch(ds, 0);
    CounterRng r1(1), r2(2);
    const auto n1 = draw_logistic_noise(100, 5, 2, r1), n2 = draw_logistic_noise(100, 5, 2, r2);
    for (auto g : {GateSource::oracle, GateSource::all_ones})
        CHECK(ncd_loss_value(model, b, n1, 0.5, g) == ncd_loss_value(model, b, n2, 0.5, g));
    CHECK(ncd_loss_value(model, b, n1, 0.5) != ncd_loss_value(model, b, n2, 0.5));
}

TEST_CASE("exact NLL enumerates every gate pattern") {
    const auto ds = sample(make_example(Example::example1), 50, 4);
    NcdModel model = make_model(ds, 0, small_hyper());
    const Batch b = make_batch(ds, 0);
    const auto nll = exact_nll(model, b);
    REQUIRE(nll.size() == 50);
    for (Eigen::Index i = 0; i < 50; ++i) CHECK(nll[static_cast<std::size_t>(i)] == doctest::Approx(brute_nll(model, b, i)).epsilon(1e-9));
}

TEST_CASE("pattern labels put the first variable in the high bit") {
    CHECK(pattern_label(ParentSet::of({0}), 2) == 2);
    CHECK(pattern_label(ParentSet::of({1}), 2) == 1);
    CHECK(pattern_label(ParentSet::full(2), 2) == 3);
    CHECK(pattern_label(ParentSet{}, 3) == 0);
    CHECK(pattern_label(ParentSet::of({0, 2}), 3) == 5);
}

TEST_CASE("temperature anneals to its floor") {
    NcdHyper h;
    h.epochs = 10;
    CHECK(h.temperature(0) == doctest::Approx(1.0));
    CHECK(h.temperature(10) == doctest::Approx(0.3));
    CHECK(h.temperature(50) == doctest::Approx(0.3));
    CHECK(h.temperature(5) < 1.0);
    CHECK(h.temperature(5) > 0.3);
}

TEST_CASE("hyperparameter parsing") {
    const auto h = NcdHyper::from_json({{"lr", 0.5}, {"hidden", {8, 8}}});
    CHECK(h.lr == 0.5);
    CHECK(h.hidden == std::vector<int>{8, 8});
    CHECK(h.n_mc == 5);
    CHECK_THROWS_WITH_AS(NcdHyper::from_json({{"learning_rate", 0.1}}), doctest::Contains("learning_rate"), InvalidConfig);
    CHECK(NcdHyper::from_json(h.to_json()).to_json() == h.to_json());
}

TEST_CASE("short training lowers the loss and is reproducible") {
    const auto scm = make_example(Example::toy2d, 0.1, 1);
    const auto tr = sample(scm, 4000, 1), va = sample(scm, 500, 2);
    NcdHyper h = small_hyper(nn::Activation::relu);
    h.hidden = {32, 32};
    h.batch_size = 200;
    h.epochs = 5;
    NcdModel a = make_model(tr, 0, h), b = make_model(tr, 0, h);
    int callbacks = 0;
    TrainOptions opts;
    opts.on_epoch = [&](int, const NcdModel&) { ++callbacks; };
    const auto ha = train(a, tr, va, opts);
    const auto hb = train(b, tr, va);
    CHECK(callbacks == 5);
    REQUIRE(ha.epochs.size() == 5);
    CHECK(ha.epochs.back().train_nll < ha.epochs.front().train_nll);
    CHECK(ha.epochs.back().val_nll == hb.epochs.back().val_nll);
    CHECK(ha.epochs.front().mean_pi.size() == 2);
}

TEST_CASE("models survive save and load") {
    const auto dir = std::filesystem::temp_directory_path() / "cssi_ncd_ckpt";
    std::filesystem::remove_all(dir);
    const auto ds = sample(make_example(Example::example2), 300, 5);
    const NcdModel m = make_model(ds, 0, small_hyper());
    m.save(dir / "m.bin", dir / "m.json");
    const NcdModel back = NcdModel::load(dir / "m.bin", dir / "m.json");
    const Batch b = make_batch(ds, 0);
    CHECK(back.parent_scores(b.x) == m.parent_scores(b.x));
    CHECK(back.density_head(b.x, b.masks) == m.density_head(b.x, b.masks));
    CHECK(back.hyper().to_json() == m.hyper().to_json());
    CHECK_THROWS_AS(NcdModel::load(dir / "x.bin", dir / "x.json"), MissingCheckpoint);
    std::filesystem::remove_all(dir);
}

TEST_CASE("decomposition extraction groups samples by hard pattern") {
    const auto ds = sample(make_example(Example::example1), 200, 6);
    NcdModel m = make_model(ds, 0, small_hyper());
    m.g_phi().zero_output_layer();  // pi = 1/2 everywhere
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < 20; ++i) pts.push_back(ds.rows[i].x);
    const auto cd = extract_decomposition(m, pts, 0.5);
    REQUIRE(cd.size() == 1);
    CHECK(cd.regions()[0].parents == ParentSet::full(2));
    const auto none = extract_decomposition(m, pts, 0.6);
    CHECK(none.regions()[0].parents == ParentSet::full(2));
    CHECK(none.regions().back().parents == ParentSet{});
    CHECK(infer_parent_scores(m, pts[0]) == std::vector<double>{0.5, 0.5});
}

}
