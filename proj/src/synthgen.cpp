#include "cssi/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <boost/math/distributions/chi_squared.hpp>

#include "cssi/error.hpp"
#include "cssi/random_function.hpp"

namespace cssi {

namespace {

constexpr std::uint64_t kBoundaryStream = 0xB0;
constexpr std::uint64_t kMechanismStream = 0xF0;
constexpr std::uint64_t kDataStream = 0xDA7A;
constexpr std::uint64_t kSplitStream = 0x5B11;
constexpr std::size_t kProbeSize = 50000;

ParentSet block(int first, int last) {
    ParentSet s;
    for (int j = first; j <= last; ++j) s = s.with(j);
    return s;
}

/// Parent sets of the three non-trivial mechanisms f1, f2, f3.
std::array<ParentSet, 3> layout_parents(ParentLayout layout, int d) {
    if (layout == ParentLayout::uniform) return {block(0, 2), block(3, 5), block(6, 8)};
    return {block(0, 2), block(3, 8), ParentSet::full(d)};
}

Mechanism make_mechanism(NoiseKind noise, int width, int hidden, std::uint64_t seed) {
    if (noise == NoiseKind::additive) {
        RandomFunction f({width, hidden, 1}, nn::Activation::tanh, seed);
        return Mechanism::additive([f](std::span<const double> x) { return f(x); });
    }
    RandomFunction f({width + 1, hidden, 1}, nn::Activation::tanh, seed);
    return Mechanism::non_additive([f](std::span<const double> x, double u) {
        thread_local std::vector<double> in;
        in.assign(x.begin(), x.end());
        in.push_back(u);
        return f(in);
    });
}

/// g applied to coordinate triples (i, i+3, i+6).
std::vector<ContextSet::Score> triple_scores(const RandomFunction& g) {
    std::vector<ContextSet::Score> scores;
    for (int i = 0; i < 3; ++i)
        scores.push_back([g, i](std::span<const double> x) {
            const double t[3] = {x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i + 3)],
                                 x[static_cast<std::size_t>(i + 6)]};
            return g(std::span<const double>(t, 3));
        });
    return scores;
}

/// Region contexts for f1, f2, f3 in that order.
std::array<ContextSet, 3> boundary_contexts(const SynthConfig& cfg, std::uint64_t seed) {
    if (cfg.boundary == Boundary::norm_band) {
        const auto c = calibrate_norm_thresholds(cfg.d, seed);
        return {ContextSet::norm_band(0.0, c.c1), ContextSet::norm_band(c.c1, c.c2),
                ContextSet::norm_band(c.c2, std::numeric_limits<double>::infinity())};
    }
    const bool linear = cfg.boundary == Boundary::linear_argmax;
    const RandomFunction g = linear ? RandomFunction({3, 1}, nn::Activation::identity, seed)
                                    : RandomFunction({3, 10, 1}, nn::Activation::tanh, seed);
    const auto scores = triple_scores(g);
    return {ContextSet::argmax(scores, 0, linear), ContextSet::argmax(scores, 1, linear),
            ContextSet::argmax(scores, 2, linear)};
}

ContextualDecomposition assemble(const SynthConfig& cfg, const std::array<ContextSet, 3>& ctx,
                                 const std::array<ParentSet, 3>& parents) {
    std::vector<Region> regions;
    if (cfg.layout == ParentLayout::uniform) {
        regions.push_back(Region{ContextSet::remainder(), ParentSet::full(cfg.d)});
        for (int k = 0; k < 3; ++k) regions.push_back(Region{ctx[static_cast<std::size_t>(k)], parents[static_cast<std::size_t>(k)]});
    } else {
        // f3 reads every parent, so its region is E_0.
        regions.push_back(Region{ctx[2], parents[2]});
        regions.push_back(Region{ctx[0], parents[0]});
        regions.push_back(Region{ctx[1], parents[1]});
    }
    return ContextualDecomposition(cfg.d, std::move(regions));
}

std::vector<double> region_shares(const ContextualDecomposition& cd, int d, std::uint64_t seed) {
    std::vector<double> counts(cd.size(), 0.0);
    const CounterRng root(seed, 0x9C0BE);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < kProbeSize; ++i) {
        CounterRng rng = root.substream(i);
        for (double& v : x) v = rng.normal();
        counts[static_cast<std::size_t>(cd.region_of(x))] += 1.0;
    }
    for (double& c : counts) c /= static_cast<double>(kProbeSize);
    return counts;
}

}  // namespace

void SynthConfig::validate() const {
    if (d != 9) throw InvalidConfig("dataset.d: the synthetic layouts are defined for d = 9");
    if (n_samples < static_cast<std::size_t>(10 * d)) throw InvalidConfig("dataset.n_samples: must be at least 10 * d");
    double total = 0.0;
    for (double r : split) {
        if (r < 0.0) throw InvalidConfig("dataset.split: ratios must be non-negative");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidConfig("dataset.split: ratios must sum to 1");
    if (mechanism_hidden < 1) throw InvalidConfig("dataset.mechanism_hidden: must be positive");
}

const char* to_string(ParentLayout layout) { return layout == ParentLayout::uniform ? "uniform" : "nonuniform"; }

const char* to_string(Boundary boundary) {
    switch (boundary) {
        case Boundary::linear_argmax: return "linear-argmax";
        case Boundary::norm_band: return "norm-band";
        case Boundary::nonlinear_argmax: return "nonlinear-argmax";
    }
    return "?";
}

ParentLayout parent_layout_from_string(const std::string& s) {
    if (s == "uniform") return ParentLayout::uniform;
    if (s == "nonuniform" || s == "non-uniform") return ParentLayout::nonuniform;
    throw InvalidConfig("dataset.layout: unknown value '" + s + "'");
}

Boundary boundary_from_string(const std::string& s) {
    if (s == "linear-argmax") return Boundary::linear_argmax;
    if (s == "norm-band") return Boundary::norm_band;
    if (s == "nonlinear-argmax") return Boundary::nonlinear_argmax;
    throw InvalidConfig("dataset.boundary: unknown value '" + s + "'");
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "additive") return NoiseKind::additive;
    if (s == "non-additive" || s == "nonadditive") return NoiseKind::non_additive;
    throw InvalidConfig("dataset.noise: unknown value '" + s + "'");
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
    static const char* known[] = {"kind", "d", "layout", "boundary", "noise", "seed", "n_samples", "split", "mechanism_hidden"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) == std::end(known))
            throw InvalidConfig("dataset." + it.key() + ": unknown key");
    SynthConfig cfg;
    try {
        if (j.contains("d")) cfg.d = j.at("d").get<int>();
        if (j.contains("layout")) cfg.layout = parent_layout_from_string(j.at("layout").get<std::string>());
        if (j.contains("boundary")) cfg.boundary = boundary_from_string(j.at("boundary").get<std::string>());
        if (j.contains("noise")) cfg.noise = noise_kind_from_string(j.at("noise").get<std::string>());
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("n_samples")) cfg.n_samples = j.at("n_samples").get<std::size_t>();
        if (j.contains("split")) {
            const auto v = j.at("split").get<std::vector<double>>();
            if (v.size() != 3) throw InvalidConfig("dataset.split: expected three ratios");
            const double total = v[0] + v[1] + v[2];
            if (!(total > 0.0)) throw InvalidConfig("dataset.split: ratios must sum to a positive value");
            cfg.split = {v[0] / total, v[1] / total, v[2] / total};
        }
        if (j.contains("mechanism_hidden")) cfg.mechanism_hidden = j.at("mechanism_hidden").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig(std::string("dataset: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

nlohmann::json to_json(const SynthConfig& cfg) {
    return {{"kind", "synthetic"},
            {"d", cfg.d},
            {"layout", to_string(cfg.layout)},
            {"boundary", to_string(cfg.boundary)},
            {"noise", to_string(cfg.noise)},
            {"seed", cfg.seed},
            {"n_samples", cfg.n_samples},
            {"split", cfg.split},
            {"mechanism_hidden", cfg.mechanism_hidden}};
}

NormThresholds calibrate_norm_thresholds(int d, std::uint64_t seed) {
    if (d < 1) throw InvalidConfig("norm thresholds need d >= 1");
    constexpr std::size_t n = 100000;
    std::vector<double> norms(n);
    const CounterRng root(seed, 0xC41B);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng = root.substream(i);
        double sq = 0.0;
        for (int j = 0; j < d; ++j) {
            const double v = rng.normal();
            sq += v * v;
        }
        norms[i] = std::sqrt(sq);
    }
    std::sort(norms.begin(), norms.end());
    return NormThresholds{norms[n / 3], norms[2 * n / 3]};
}

Scm build_config(const SynthConfig& cfg) {
    cfg.validate();
    const auto parents = layout_parents(cfg.layout, cfg.d);
    const VariableLayout layout = VariableLayout::scalars(cfg.d);

    std::uint64_t boundary_seed = mix64(cfg.seed ^ kBoundaryStream);
    std::optional<ContextualDecomposition> cd;
    int attempt = 0;
    for (;; ++attempt) {
        boundary_seed = mix64(cfg.seed ^ mix64(kBoundaryStream + static_cast<std::uint64_t>(attempt)));
        cd.emplace(assemble(cfg, boundary_contexts(cfg, boundary_seed), parents));
        if (cfg.boundary == Boundary::norm_band) break;
        const auto shares = region_shares(*cd, cfg.d, boundary_seed);
        const std::size_t first = cfg.layout == ParentLayout::uniform ? 1 : 0;
        bool ok = true;
        for (std::size_t k = first; k < shares.size(); ++k) ok = ok && shares[k] >= kMinRegionMass;
        if (ok) break;
        if (attempt >= 1000) throw InvalidConfig("could not draw a non-degenerate boundary");
    }

    std::vector<Mechanism> mechs(cd->size());
    for (std::size_t k = 0; k < cd->size(); ++k) {
        const ParentSet a = cd->regions()[k].parents;
        if (cfg.layout == ParentLayout::uniform && k == 0) continue;  // never reached
        mechs[k] = make_mechanism(cfg.noise, a.size(), cfg.mechanism_hidden, mix64(cfg.seed ^ mix64(kMechanismStream + k)));
    }
    std::string name = std::string("synthetic/") + to_string(cfg.layout) + "/" + to_string(cfg.boundary) + "/" +
                       to_string(cfg.noise) + "/attempt" + std::to_string(attempt);
    return Scm(std::move(name), layout, ParentLaw::standard_normal, std::move(*cd), std::move(mechs), 1.0);
}

Example example_from_string(const std::string& s) {
    if (s == "example1") return Example::example1;
    if (s == "example2") return Example::example2;
    if (s == "canonical_example" || s == "canonical-example") return Example::canonical_example;
    if (s == "toy2d") return Example::toy2d;
    throw InvalidConfig("dataset.example: unknown value '" + s + "'");
}

const char* to_string(Example e) {
    switch (e) {
        case Example::example1: return "example1";
        case Example::example2: return "example2";
        case Example::canonical_example: return "canonical_example";
        case Example::toy2d: return "toy2d";
    }
    return "?";
}

double toy2d_epsilon() {
    static const double eps = std::sqrt(boost::math::quantile(boost::math::chi_squared(6.0), 0.5));
    return eps;
}

Scm make_example(Example which, double noise_std, std::uint64_t seed) {
    using S = std::span<const double>;
    switch (which) {
        case Example::example1: {
            auto in_e = [](S x) { return x[0] * x[1] < 0.5; };
            ContextualDecomposition cd(2, {Region{ContextSet::remainder(), ParentSet::full(2)},
                                           Region{ContextSet::predicate(in_e, "x1*x2 < 1/2"), ParentSet::of({0})},
                                           Region{ContextSet::predicate([in_e](S x) { return !in_e(x); }, "x1*x2 >= 1/2"),
                                                  ParentSet::of({1})}});
            std::vector<Mechanism> m{Mechanism{}, Mechanism::additive([](S x) { return x[0]; }),
                                     Mechanism::additive([](S x) { return x[0]; })};
            return Scm("example1", VariableLayout::scalars(2), ParentLaw::uniform_unit, std::move(cd), std::move(m), noise_std);
        }
        case Example::example2: {
            auto e1 = [](S x) { return x[0] < 0.5 && x[1] < 0.5; };
            auto e2 = [](S x) { return x[0] >= 0.5 && x[1] >= 0.5; };
            ContextualDecomposition cd(3, {Region{ContextSet::remainder(), ParentSet::full(3)},
                                           Region{ContextSet::predicate(e1, "x1, x2 < 1/2"), ParentSet::of({2})},
                                           Region{ContextSet::predicate(e2, "x1, x2 >= 1/2"), ParentSet::of({2})}});
            std::vector<Mechanism> m{Mechanism::additive([](S x) { return x[0] + x[1] + x[2]; }),
                                     Mechanism::additive([](S x) { return x[0]; }),
                                     Mechanism::additive([](S x) { return x[0]; }, 2.0)};
            return Scm("example2", VariableLayout::scalars(3), ParentLaw::uniform_unit, std::move(cd), std::move(m), noise_std);
        }
        case Example::canonical_example: {
            ContextualDecomposition cd(
                2, {Region{ContextSet::remainder(), ParentSet::full(2)},
                    Region{ContextSet::product_of_intervals({Interval{}, Interval{0.8, INFINITY}}), ParentSet::of({0})},
                    Region{ContextSet::product_of_intervals({Interval{-INFINITY, 0.5}, Interval{-INFINITY, 0.8}}), ParentSet::of({1})},
                    Region{ContextSet::product_of_intervals({Interval{0.5, INFINITY}, Interval{-INFINITY, 0.8}}), ParentSet::of({1})}});
            std::vector<Mechanism> m{Mechanism{}, Mechanism::additive([](S x) { return x[0]; }),
                                     Mechanism::additive([](S x) { return x[0]; }),
                                     Mechanism::additive([](S x) { return x[0]; }, 2.0)};
            return Scm("canonical_example", VariableLayout::scalars(2), ParentLaw::uniform_unit, std::move(cd), std::move(m),
                       noise_std);
        }
        case Example::toy2d: {
            const double eps = toy2d_epsilon();
            ContextualDecomposition cd(2, {Region{ContextSet::remainder(), ParentSet::full(2)},
                                           Region{ContextSet::norm_band(0.0, eps), ParentSet::of({0})},
                                           Region{ContextSet::norm_band(eps, INFINITY), ParentSet::of({1})}});
            const RandomFunction f1({3, 10, 1}, nn::Activation::tanh, mix64(seed ^ kMechanismStream));
            const RandomFunction f2({3, 10, 1}, nn::Activation::tanh, mix64(seed ^ (kMechanismStream + 1)));
            std::vector<Mechanism> m{Mechanism{}, Mechanism::additive([f1](S x) { return f1(x); }),
                                     Mechanism::additive([f2](S x) { return f2(x); })};
            return Scm("toy2d", VariableLayout{{3, 3}}, ParentLaw::standard_normal, std::move(cd), std::move(m), noise_std);
        }
    }
    throw InvalidConfig("unknown example");
}

Splits split(const LabeledDataset& ds, std::array<double, 3> ratios, std::uint64_t seed) {
    double total = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw InvalidConfig("split ratios must be non-negative");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidConfig("split ratios must sum to 1");
    const std::size_t n = ds.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(seed, kSplitStream);
    rng.shuffle(std::span<std::size_t>(order));

    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios[0]));
    const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios[1])));
    const std::array<std::size_t, 4> cut{0, n_train, n_train + n_val, n};
    const char* tags[3] = {"train", "val", "test"};

    Splits out;
    LabeledDataset* parts[3] = {&out.train, &out.val, &out.test};
    for (int s = 0; s < 3; ++s) {
        LabeledDataset& part = *parts[s];
        part.x_layout = ds.x_layout;
        part.target_widths = ds.target_widths;
        part.metadata = ds.metadata;
        part.metadata["split"] = tags[s];
        part.metadata["split_ratios"] = ratios;
        part.metadata["split_seed"] = seed;
        for (std::size_t i = cut[static_cast<std::size_t>(s)]; i < cut[static_cast<std::size_t>(s) + 1]; ++i)
            part.rows.push_back(ds.rows[order[i]]);
        if (part.rows.empty() && ratios[static_cast<std::size_t>(s)] > 0.0)
            throw EmptySplit(std::string("split '") + tags[s] + "' received no rows");
        part.metadata["source_n"] = n;
        part.metadata["n"] = part.rows.size();
    }
    return out;
}

LabeledDataset generate(const SynthConfig& cfg) {
    const Scm scm = build_config(cfg);
    LabeledDataset ds = sample(scm, cfg.n_samples, mix64(cfg.seed ^ kDataStream));
    ds.metadata["config"] = to_json(cfg);
    return ds;
}

}  // namespace cssi
