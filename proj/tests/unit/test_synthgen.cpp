#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "cssi/error.hpp"
#include "cssi/random_function.hpp"
#include "cssi/synthgen.hpp"

using namespace cssi;

namespace {

std::map<int, double> region_shares(const LabeledDataset& ds) {
    std::map<int, double> s;
    for (const auto& r : ds.rows) s[r.region] += 1.0 / static_cast<double>(ds.size());
    return s;
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("random functions are deterministic and seed dependent") {
    const auto f = make_random_function({3, 10, 1}, nn::Activation::tanh, 4);
    const auto g = make_random_function({3, 10, 1}, nn::Activation::tanh, 4);
    const auto h = make_random_function({3, 10, 1}, nn::Activation::tanh, 5);
    const std::vector<double> zero{0.0, 0.0, 0.0};
    CHECK(std::isfinite(f(zero)));
    CHECK(f(zero) == g(zero));
    CounterRng rng(1);
    double diff = 0.0;
    for (int i = 0; i < 10; ++i) {
        const std::vector<double> x{rng.normal(), rng.normal(), rng.normal()};
        CHECK(f(x) == g(x));
        diff = std::max(diff, std::abs(f(x) - h(x)));
    }
    CHECK(diff > 1e-6);
}

TEST_CASE("a linear random function is affine") {
    const auto g = make_random_function({3, 1}, nn::Activation::identity, 9);
    const std::vector<double> a{1.0, 2.0, -1.0}, b{-0.5, 0.25, 3.0}, mid{0.25, 1.125, 1.0};
    CHECK(g(mid) == doctest::Approx(0.5 * g(a) + 0.5 * g(b)).epsilon(1e-12));
    CHECK_THROWS_AS(RandomFunction({3}, nn::Activation::tanh, 0), InvalidConfig);
}

TEST_CASE("uniform layout with a linear boundary") {
    SynthConfig cfg;
    cfg.seed = 1;
    const Scm scm = build_config(cfg);
    const auto& regions = scm.decomposition().regions();
    REQUIRE(regions.size() == 4);
    CHECK(regions[1].parents == ParentSet::of({0, 1, 2}));
    CHECK(regions[2].parents == ParentSet::of({3, 4, 5}));
    CHECK(regions[3].parents == ParentSet::of({6, 7, 8}));
    CHECK(regions[1].context.kind() == ContextKind::halfspace_argmax);
    const auto ds = sample(scm, 50000, 2);
    const auto shares = region_shares(ds);
    CHECK(shares.count(0) == 0);
    for (int k = 1; k <= 3; ++k) CHECK(shares.at(k) >= kMinRegionMass);
}

TEST_CASE("non-uniform layout keeps every region populated") {
    for (auto boundary : {Boundary::linear_argmax, Boundary::nonlinear_argmax}) {
        SynthConfig cfg;
        cfg.layout = ParentLayout::nonuniform;
        cfg.boundary = boundary;
        cfg.seed = 2;
        const Scm scm = build_config(cfg);
        CHECK(scm.decomposition().regions()[1].parents == ParentSet::of({0, 1, 2}));
        CHECK(scm.decomposition().regions()[2].parents == ParentSet::of({3, 4, 5, 6, 7, 8}));
        const auto shares = region_shares(sample(scm, 50000, 3));
        for (int k = 0; k <= 2; ++k) CHECK(shares.at(k) >= kMinRegionMass);
    }
}

TEST_CASE("norm-band thresholds split the mass in thirds") {
    const auto t = calibrate_norm_thresholds(9, 0);
    CHECK(t.c1 < t.c2);
    const auto again = calibrate_norm_thresholds(9, 0);
    CHECK(t.c1 == again.c1);
    CHECK(t.c2 == again.c2);
    const auto t1 = calibrate_norm_thresholds(1, 4);
    CHECK(0.0 < t1.c1);
    CHECK(t1.c1 < t1.c2);

    SynthConfig cfg;
    cfg.boundary = Boundary::norm_band;
    const Scm scm = build_config(cfg);
    const auto shares = region_shares(sample(scm, 100000, 77));
    for (int k = 1; k <= 3; ++k) CHECK(std::abs(shares.at(k) - 1.0 / 3.0) < 0.02);
    std::vector<double> small(9, 0.1);
    CHECK(scm.decomposition().ground_truth_parents(small) == ParentSet::of({0, 1, 2}));
}

TEST_CASE("additive noise enters as y = f(x_A) + u") {
    SynthConfig cfg;
    cfg.noise = NoiseKind::additive;
    cfg.seed = 6;
    const Scm scm = build_config(cfg);
    CounterRng rng(3);
    std::vector<double> x(9);
    for (int i = 0; i < 200; ++i) {
        scm.sample_parents(rng, x);
        const double u = rng.normal();
        CHECK(scm.evaluate(x, u).y - scm.evaluate(x, 0.0).y == doctest::Approx(u).epsilon(1e-9));
    }
}

TEST_CASE("additive configs have constant residual variance within a region") {
    SynthConfig cfg;
    cfg.noise = NoiseKind::additive;
    cfg.seed = 8;
    const Scm scm = build_config(cfg);
    const auto ds = sample(scm, 50000, 1);
    // Residuals binned by the first local parent of each region.
    std::map<std::pair<int, int>, std::pair<double, double>> acc;  // (region, bin) -> (sum r^2, count)
    for (const auto& r : ds.rows) {
        const double res = r.y[0] - scm.evaluate(r.x, 0.0).y;
        const int j = r.masks[0].indices().front();
        const int bin = std::clamp(static_cast<int>(std::floor(r.x[static_cast<std::size_t>(j)] + 2.0)), 0, 3);
        auto& a = acc[{r.region, bin}];
        a.first += res * res;
        a.second += 1.0;
    }
    for (const auto& [key, a] : acc) {
        if (a.second < 500) continue;
        CHECK(std::abs(a.first / a.second - 1.0) < 0.2);
    }
}

TEST_CASE("non-additive mechanisms depend on the noise non-trivially") {
    SynthConfig cfg;
    cfg.seed = 6;
    const Scm scm = build_config(cfg);
    CounterRng rng(5);
    std::vector<double> x(9);
    int non_additive = 0;
    for (int i = 0; i < 200; ++i) {
        scm.sample_parents(rng, x);
        const double d1 = scm.evaluate(x, 1.0).y - scm.evaluate(x, 0.0).y;
        const double d2 = scm.evaluate(x, 0.0).y - scm.evaluate(x, -1.0).y;
        if (std::abs(d1 - d2) > 1e-6) ++non_additive;
    }
    CHECK(non_additive > 100);
}

TEST_CASE("worked examples carry their published decompositions") {
    const Scm e1 = make_example(Example::example1);
    CHECK(e1.decomposition().regions()[1].parents == ParentSet::of({0}));
    CHECK(e1.decomposition().regions()[2].parents == ParentSet::of({1}));

    const Scm e2 = make_example(Example::example2);
    std::multiset<std::uint64_t> masks;
    for (const auto& r : e2.decomposition().regions()) masks.insert(r.parents.bits());
    CHECK(masks == std::multiset<std::uint64_t>{4, 4, 7});

    const Scm ce = make_example(Example::canonical_example);
    const std::vector<double> top{0.3, 0.9};
    CHECK(ce.decomposition().ground_truth_parents(top) == ParentSet::of({0}));

    const Scm toy = make_example(Example::toy2d, 0.1, 3);
    CHECK(toy.layout().widths == std::vector<int>{3, 3});
    const std::vector<double> near(6, 0.1), far(6, 2.0);
    CHECK(toy.decomposition().ground_truth_parents(near) == ParentSet::of({0}));
    CHECK(toy.decomposition().ground_truth_parents(far) == ParentSet::of({1}));
}

TEST_CASE("toy2d radius balances the two regions") {
    const double eps = toy2d_epsilon();
    CHECK(eps == doctest::Approx(std::sqrt(5.348120627447)).epsilon(1e-9));
    const auto ds = sample(make_example(Example::toy2d, 0.1, 1), 50000, 4);
    CHECK(std::abs(region_shares(ds).at(1) - 0.5) < 0.01);
}

TEST_CASE("split sizes, determinism and degenerate ratios") {
    const auto ds = sample(make_example(Example::example1), 50000, 0);
    const auto s = split(ds, {0.8, 0.1, 0.1}, 5);
    CHECK(s.train.size() == 40000);
    CHECK(s.val.size() == 5000);
    CHECK(s.test.size() == 5000);
    const auto again = split(ds, {0.8, 0.1, 0.1}, 5);
    CHECK(dataset_to_csv(s.test) == dataset_to_csv(again.test));
    CHECK(dataset_to_csv(s.test) != dataset_to_csv(split(ds, {0.8, 0.1, 0.1}, 6).test));

    const auto all = split(ds, {1.0, 0.0, 0.0}, 5);
    CHECK(all.train.size() == 50000);
    CHECK(all.val.empty());
    CHECK(all.test.empty());

    const auto tiny = sample(make_example(Example::example1), 3, 0);
    CHECK_THROWS_AS(split(tiny, {0.9, 0.05, 0.05}, 1), EmptySplit);
    CHECK_THROWS_AS(split(ds, {0.5, 0.1, 0.1}, 1), InvalidConfig);
}

TEST_CASE("config validation names the offending field") {
    SynthConfig cfg;
    cfg.n_samples = 50;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    CHECK_THROWS_WITH_AS(synth_config_from_json({{"kind", "synthetic"}, {"boundry", "norm-band"}}),
                         doctest::Contains("boundry"), InvalidConfig);
    CHECK_THROWS_AS(synth_config_from_json({{"boundary", "spiral"}}), InvalidConfig);
    const auto parsed = synth_config_from_json({{"layout", "nonuniform"}, {"noise", "additive"}, {"seed", 12}});
    CHECK(parsed.layout == ParentLayout::nonuniform);
    CHECK(parsed.noise == NoiseKind::additive);
    CHECK(synth_config_from_json(to_json(parsed)).seed == 12);
}

TEST_CASE("generation is reproducible") {
    SynthConfig cfg;
    cfg.n_samples = 2000;
    cfg.seed = 21;
    CHECK(dataset_to_csv(generate(cfg)) == dataset_to_csv(generate(cfg)));
}

}
