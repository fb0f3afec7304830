#include "cssi/campaigns.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <numeric>
#include <optional>
#include <thread>
#include <unordered_map>

#include "cssi/error.hpp"
#include "cssi/synthgen.hpp"

namespace cssi {

namespace {

enum class Verdict { ok, violation, skipped };

struct Outcome {
    Verdict verdict = Verdict::ok;
    std::string message;
};

Outcome violation(std::string msg) { return {Verdict::violation, std::move(msg)}; }
Outcome skipped(std::string msg) { return {Verdict::skipped, std::move(msg)}; }

struct FixtureResult {
    bool ok;
    std::string message;
};

struct Campaign {
    std::function<Outcome(CounterRng&)> instance;
    std::function<std::vector<FixtureResult>()> fixtures;
};

// Shape and index helpers that do not need a table.

std::vector<int> random_sizes(CounterRng& rng, int d, int lo, int hi) {
    std::vector<int> s(static_cast<std::size_t>(d));
    for (int& k : s) k = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
    return s;
}

std::size_t product(const std::vector<int>& sizes) {
    std::size_t n = 1;
    for (int k : sizes) n *= static_cast<std::size_t>(k);
    return n;
}

/// Index-only system (uniform tables) for decoding and projections.
FiniteScm shape_only(const std::vector<int>& sizes) {
    const std::size_t n = product(sizes);
    return FiniteScm(sizes, 1, std::vector<double>(n, 1.0 / static_cast<double>(n)), std::vector<double>(n, 1.0));
}

ParentSet random_subset(CounterRng& rng, int d) { return ParentSet(rng.below(std::uint64_t{1} << d)); }

ParentSet random_proper_subset(CounterRng& rng, int d) { return ParentSet(rng.below((std::uint64_t{1} << d) - 1)); }

std::vector<std::size_t> random_box(const FiniteScm& shape, CounterRng& rng) {
    std::vector<int> lo(static_cast<std::size_t>(shape.d())), hi(lo.size());
    for (int j = 0; j < shape.d(); ++j) {
        const auto k = static_cast<std::uint64_t>(shape.domain_sizes()[static_cast<std::size_t>(j)]);
        int a = static_cast<int>(rng.below(k));
        int b = static_cast<int>(rng.below(k));
        lo[static_cast<std::size_t>(j)] = std::min(a, b);
        hi[static_cast<std::size_t>(j)] = std::max(a, b);
    }
    return GridRegion::box(shape, lo, hi).cells();
}

std::vector<std::size_t> random_cells(std::size_t n, CounterRng& rng, double density) {
    std::vector<std::size_t> c;
    for (std::size_t i = 0; i < n; ++i)
        if (rng.bernoulli(density)) c.push_back(i);
    if (c.empty()) c.push_back(static_cast<std::size_t>(rng.below(n)));
    return c;
}

GridRegion random_subregion(const GridRegion& e, CounterRng& rng) {
    std::vector<std::size_t> c;
    for (std::size_t cell : e.cells())
        if (rng.bernoulli(0.5)) c.push_back(cell);
    if (c.empty()) c.push_back(e.cells()[static_cast<std::size_t>(rng.below(e.size()))]);
    return GridRegion(std::move(c));
}

// Campaigns.

Outcome entailment_instance(CounterRng& rng) {
    const int d = 2 + static_cast<int>(rng.below(2));
    const auto sizes = random_sizes(rng, d, 2, 4);
    const auto shape = shape_only(sizes);
    const auto cells = rng.bernoulli(0.5) ? random_box(shape, rng) : random_cells(shape.num_cells(), rng, 0.6);
    std::vector<ParentSet> sets{random_subset(rng, d)};
    if (rng.bernoulli(0.5)) sets.push_back(random_subset(rng, d));
    const auto m = plant_cssi(sizes, 3, {{cells, sets}}, rng);
    const GridRegion e(cells);

    for (ParentSet a : sets)
        if (!check_cssi(m, e, a)) return violation("planted set " + a.to_string() + " does not pass");
    for (ParentSet a : minimal_parent_sets(m, e)) {
        for (std::uint64_t b = 0; b < (std::uint64_t{1} << d); ++b)
            if (a.is_subset_of(ParentSet(b)) && !check_cssi(m, e, ParentSet(b)))
                return violation("superset " + ParentSet(b).to_string() + " of " + a.to_string() + " fails");
        for (int i = 0; i < 10; ++i)
            if (!check_cssi(m, random_subregion(e, rng), a))
                return violation(a.to_string() + " fails on a sub-region");
    }
    return {};
}

Outcome uniqueness_instance(CounterRng& rng) {
    const int d = 2 + static_cast<int>(rng.below(2));
    const auto sizes = random_sizes(rng, d, 2, 4);
    const auto cells = random_box(shape_only(sizes), rng);
    std::vector<ParentSet> sets{random_subset(rng, d)};
    if (rng.bernoulli(0.7)) sets.push_back(random_subset(rng, d));
    const auto m = plant_cssi(sizes, 3, {{cells, sets}}, rng);
    const auto mins = minimal_parent_sets(m, GridRegion(cells));
    if (mins.size() != 1) return violation("rectangle has " + std::to_string(mins.size()) + " minimal sets");
    for (ParentSet a : sets)
        if (!mins.front().is_subset_of(a)) return violation("minimal set is not inside planted " + a.to_string());
    return {};
}

Outcome intersection_instance(CounterRng& rng) {
    const int d = 2 + static_cast<int>(rng.below(2));
    const auto sizes = random_sizes(rng, d, 2, 4);
    const auto shape = shape_only(sizes);
    const bool rectangle = rng.bernoulli(0.5);
    const auto cells = rectangle ? random_box(shape, rng) : random_cells(shape.num_cells(), rng, 0.7);
    const ParentSet a = random_subset(rng, d), b = random_subset(rng, d);
    const auto m = plant_cssi(sizes, 3, {{cells, {a, b}}}, rng);
    const GridRegion e(cells);
    const bool connected = intersection_precondition(m, e, a, b);
    if (rectangle && !connected) return violation("rectangle reported not coordinate-wise connected");
    if (!connected) return skipped("not coordinate-wise connected");
    if (!check_intersection_property(m, e, a, b))
        return violation("intersection " + (a & b).to_string() + " of " + a.to_string() + " and " + b.to_string() + " fails");
    return {};
}

std::vector<FixtureResult> intersection_fixtures() {
    const auto f = fixtures::non_convex_union();
    const ParentSet a = ParentSet::of({1, 2}), b = ParentSet::of({0, 2});
    std::vector<FixtureResult> out;
    out.push_back({check_cssi(f.m, f.e1_or_e2, a) && check_cssi(f.m, f.e1_or_e2, b),
                   "non-convex union: both regular sets hold"});
    out.push_back({!check_intersection_property(f.m, f.e1_or_e2, a, b), "non-convex union: intersection fails"});
    out.push_back({!intersection_precondition(f.m, f.e1_or_e2, a, b), "non-convex union: not coordinate-wise connected"});
    return out;
}

ParentSet minimal_inside(const FiniteScm& m, const GridRegion& e, ParentSet planted) {
    for (ParentSet s : minimal_parent_sets(m, e))
        if (s.is_subset_of(planted)) return s;
    throw PreconditionFailed("planted set does not pass");
}

Outcome piv_instance(CounterRng& rng) {
    const int d = 2 + static_cast<int>(rng.below(2));
    const auto sizes = random_sizes(rng, d, 2, 4);
    const std::size_t n = product(sizes);
    const int regions = 1 + static_cast<int>(rng.below(4));
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(regions));
    for (std::size_t c = 0; c < n; ++c) members[rng.below(static_cast<std::uint64_t>(regions))].push_back(c);

    std::vector<Planting> plantings;
    std::vector<ParentSet> planted;
    for (int k = 1; k < regions; ++k) {
        if (members[static_cast<std::size_t>(k)].empty()) continue;
        planted.push_back(random_proper_subset(rng, d));
        plantings.push_back({members[static_cast<std::size_t>(k)], {planted.back()}});
    }
    const auto m = plant_cssi(sizes, 3, plantings, rng);

    GridDecomposition cd{{GridRegion(members[0]), ParentSet::full(d)}};
    for (std::size_t k = 0; k < plantings.size(); ++k) {
        GridRegion r(plantings[k].cells);
        const ParentSet a = minimal_inside(m, r, planted[k]);
        cd.push_back({std::move(r), a});
    }
    if (!verify_decomposition(m, cd)) return violation("planted decomposition does not verify");
    if (!piv_equivalence(m, cd)) return violation("verified decomposition fails the indicator check");
    for (const auto& entry : cd) {
        if (entry.region.empty()) continue;
        for (int i = 0; i < 3; ++i) {
            const ParentSet s = random_subset(rng, d);
            if (csi_given_region(m, entry.region, s) != check_cssi(m, entry.region, s))
                return violation("indicator route disagrees with direct check for " + s.to_string());
        }
    }
    for (std::size_t k = 1; k < cd.size(); ++k) {
        if (cd[k].parents.empty()) continue;
        auto corrupt = cd;
        const auto idx = cd[k].parents.indices();
        corrupt[k].parents = cd[k].parents.without(idx[rng.below(idx.size())]);
        if (piv_equivalence(m, corrupt)) return violation("corrupted region " + std::to_string(k) + " still passes");
    }
    return {};
}

std::vector<FixtureResult> piv_fixtures() {
    const auto m = fixtures::product_example();
    const auto scm = make_example(Example::example1);
    GridDecomposition cd;
    for (int k = 0; k < 3; ++k)
        cd.push_back({region_cells(m, scm, 10, k), scm.decomposition().regions()[static_cast<std::size_t>(k)].parents});
    auto corrupt = cd;
    corrupt[1].parents = ParentSet::of({1});
    return {{verify_decomposition(m, cd) && piv_equivalence(m, cd), "product example: indicator check holds"},
            {!piv_equivalence(m, corrupt), "product example: swapped parents fail"},
            {piv_equivalence(m, {{GridRegion::full(m), ParentSet::full(2)}}), "trivial decomposition holds"}};
}

Outcome subsumption_instance(CounterRng& rng) {
    const int d = 2 + static_cast<int>(rng.below(2));
    const auto sizes = random_sizes(rng, d, 2, 4);
    const auto shape = shape_only(sizes);
    const ParentSet a = random_proper_subset(rng, d);
    const ParentSet b = a.complement(d);
    std::vector<int> values(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
        values[static_cast<std::size_t>(j)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(sizes[static_cast<std::size_t>(j)])));
    const std::uint64_t key = shape.project(shape.encode(values), a);
    const GridRegion slice = GridRegion::where(shape, [&](std::span<const int> v) {
        return shape.project(shape.encode(v), a) == key;
    });

    // CSI: every cell of the slice shares one distribution.
    const auto m = plant_cssi(sizes, 3, {{slice.cells(), {ParentSet{}}}}, rng);
    const GridRegion e = embed_csi(m, b, a, values);
    if (!(e == slice)) return violation("embedded region is not the slice");
    if (!check_cssi(m, e, a)) return violation("embedded CSI region fails for " + a.to_string());

    // PCI: only a random sub-domain of X_B shares a distribution.
    const GridRegion dom = random_subregion(slice, rng);
    const auto mp = plant_cssi(sizes, 3, {{dom.cells(), {ParentSet{}}}}, rng);
    const GridRegion ep = embed_pci(mp, b, a, values, [&](std::span<const int> v) { return dom.contains(mp.encode(v)); });
    if (!(ep == dom) || !check_cssi(mp, ep, a)) return violation("embedded PCI region fails");

    // Without planting, the statement must be rejected.
    const auto mn = plant_cssi(sizes, 3, {}, rng);
    try {
        (void)embed_csi(mn, b, a, values);
        return violation("unplanted CSI was accepted");
    } catch (const CsiDoesNotHold&) {
    }
    return {};
}

std::vector<FixtureResult> subsumption_fixtures() {
    const auto m = fixtures::product_example();
    const ParentSet a = ParentSet::of({1}), b = ParentSet::of({0});
    const int c_bin = 7;
    const double c = bin_centre(c_bin, 10);
    const std::vector<int> values{0, c_bin};
    std::vector<FixtureResult> out;
    const GridRegion e = embed_pci(m, b, a, values, [&](std::span<const int> v) { return bin_centre(v[0], 10) >= 1.0 / (2.0 * c); });
    out.push_back({check_cssi(m, e, a) && e.size() == 3, "product example: partial independence embeds"});
    bool rejected = false;
    try {
        (void)embed_csi(m, b, a, values);
    } catch (const CsiDoesNotHold&) {
        rejected = true;
    }
    out.push_back({rejected, "product example: full-domain statement is rejected"});

    CounterRng rng(7);
    const std::vector<int> sizes{3, 3};
    const auto indep = plant_cssi(sizes, 3, {{GridRegion::full(shape_only(sizes)).cells(), {ParentSet{}}}}, rng);
    const std::vector<int> none{0, 0};
    out.push_back({embed_csi(indep, ParentSet::full(2), ParentSet{}, none) == GridRegion::full(indep),
                   "empty conditioning set embeds as the full grid"});
    return out;
}

Outcome connectedness_instance(CounterRng& rng) {
    const int d = 2 + static_cast<int>(rng.below(2));
    const auto sizes = random_sizes(rng, d, 3, 5);
    const auto shape = shape_only(sizes);

    // Rectangles are connected at every slice.
    const GridRegion box(random_box(shape, rng));
    const ParentSet fixed = random_subset(rng, d);
    ParentSet s, t;
    for (int j : fixed.complement(d).indices()) {
        const auto r = rng.below(3);
        if (r == 0) s = s.with(j);
        if (r == 1) t = t.with(j);
    }
    for (std::size_t cell : box.cells())
        if (!coordinatewise_connected(shape, box, fixed, shape.decode(cell), s, t))
            return violation("rectangle slice is not coordinate-wise connected");

    // Connected regions carry the intersection property.
    const auto cells = random_cells(shape.num_cells(), rng, 0.25 + 0.65 * rng.uniform());
    const ParentSet a = random_subset(rng, d), b = random_subset(rng, d);
    const auto m = plant_cssi(sizes, 3, {{cells, {a, b}}}, rng);
    const GridRegion e(cells);
    if (!intersection_precondition(m, e, a, b)) return skipped("not coordinate-wise connected");
    if (!check_cssi(m, e, a & b)) return violation("connected region lacks the intersection " + (a & b).to_string());
    return {};
}

std::vector<FixtureResult> connectedness_fixtures() {
    const std::vector<int> sizes{4, 4};
    const auto shape = shape_only(sizes);
    auto blocks = [&](std::vector<int> lo1, std::vector<int> hi1, std::vector<int> lo2, std::vector<int> hi2) {
        return GridRegion::box(shape, lo1, hi1) | GridRegion::box(shape, lo2, hi2);
    };
    const std::vector<int> origin{0, 0};
    const ParentSet s = ParentSet::of({0}), t = ParentSet::of({1});
    const auto shared = blocks({0, 0}, {1, 1}, {1, 3}, {2, 3});
    const auto apart = blocks({0, 0}, {1, 1}, {2, 2}, {3, 3});
    return {{coordinatewise_connected(shape, shared, ParentSet{}, origin, s, t), "blocks sharing an s-projection"},
            {!coordinatewise_connected(shape, apart, ParentSet{}, origin, s, t), "blocks with disjoint projections"}};
}

/// Segments of [0, k) with every length at least 2.
std::vector<std::pair<int, int>> random_segments(CounterRng& rng, int k) {
    std::vector<std::pair<int, int>> seg;
    int at = 0;
    while (at < k) {
        const int left = k - at;
        int len = left;
        if (left >= 4 && rng.bernoulli(0.6)) len = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(left - 3)));
        seg.emplace_back(at, at + len - 1);
        at += len;
    }
    return seg;
}

Outcome canonical_agreement_instance(CounterRng& rng) {
    const int d = 2 + static_cast<int>(rng.below(2));
    const auto sizes = d == 2 ? random_sizes(rng, d, 4, 7) : random_sizes(rng, d, 4, 5);
    const auto shape = shape_only(sizes);
    const ParentSet full = ParentSet::full(d);

    // Atoms: products of per-axis segments; each belongs to a family C.
    std::vector<std::vector<std::pair<int, int>>> segs;
    for (int k : sizes) segs.push_back(random_segments(rng, k));
    std::vector<GridRegion> atoms;
    std::vector<int> at(static_cast<std::size_t>(d), 0);
    for (;;) {
        std::vector<int> lo, hi;
        for (int j = 0; j < d; ++j) {
            lo.push_back(segs[static_cast<std::size_t>(j)][static_cast<std::size_t>(at[static_cast<std::size_t>(j)])].first);
            hi.push_back(segs[static_cast<std::size_t>(j)][static_cast<std::size_t>(at[static_cast<std::size_t>(j)])].second);
        }
        atoms.push_back(GridRegion::box(shape, lo, hi));
        int j = 0;
        while (j < d && ++at[static_cast<std::size_t>(j)] == static_cast<int>(segs[static_cast<std::size_t>(j)].size()))
            at[static_cast<std::size_t>(j++)] = 0;
        if (j == d) break;
    }
    std::vector<ParentSet> family(atoms.size());
    for (auto& f : family) f = random_subset(rng, d);

    // One table per family, indexed by the family's coordinates.
    std::vector<Planting> plantings;
    std::vector<ParentSet> kinds;
    for (std::size_t i = 0; i < atoms.size(); ++i)
        if (std::find(kinds.begin(), kinds.end(), family[i]) == kinds.end()) kinds.push_back(family[i]);
    for (ParentSet c : kinds) {
        if (c == full) continue;
        GridRegion u;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (family[i] == c) u = u | atoms[i];
        plantings.push_back({u.cells(), {c}});
    }
    const auto m = plant_cssi(sizes, 3, plantings, rng);

    auto parents_of = [&](const GridRegion& r) -> std::optional<ParentSet> {
        const auto mins = minimal_parent_sets(m, r);
        if (mins.size() != 1 || mins.front() == full) return std::nullopt;
        return mins.front();
    };

    GridDecomposition cd1{{GridRegion{}, full}}, cd2{{GridRegion{}, full}};
    for (std::size_t i = 0; i < atoms.size(); ++i)
        if (family[i] == full) {
            cd1[0].region = cd1[0].region | atoms[i];
            cd2[0].region = cd1[0].region;
        }
    std::vector<GridDecompositionEntry> regrouped;
    for (ParentSet c : kinds) {
        if (c == full) continue;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (family[i] == c) idx.push_back(i);
        GridRegion u;
        for (std::size_t i : idx) u = u | atoms[i];
        const auto pu = parents_of(u);
        if (!pu) return skipped("family " + c.to_string() + " has no unique proper parent set");
        cd1.push_back({u, *pu});

        rng.shuffle(std::span<std::size_t>(idx));
        const auto groups = 1 + rng.below(idx.size());
        std::vector<GridRegion> parts(groups);
        for (std::size_t g = 0; g < idx.size(); ++g) {
            auto& part = parts[g < groups ? g : rng.below(groups)];
            part = part | atoms[idx[g]];
        }
        for (auto& r : parts) {
            const auto pr = parents_of(r);
            if (!pr) return skipped("regrouped region has no unique proper parent set");
            regrouped.push_back({std::move(r), *pr});
        }
    }
    rng.shuffle(std::span<GridDecompositionEntry>(regrouped));
    for (auto& r : regrouped) cd2.push_back(std::move(r));

    try {
        if (!check_canonical_cd_agreement(m, cd1, cd2)) return violation("canonical decompositions disagree");
        if (!check_canonical_cd_agreement(m, cd2, cd2)) return violation("decomposition disagrees with itself");
    } catch (const PreconditionFailed& ex) {
        return skipped(ex.what());
    }
    return {};
}

std::vector<FixtureResult> canonical_agreement_fixtures() {
    const auto f = fixtures::two_canonical_cds();
    GridRegion x2_1, x2_2;
    for (const auto& e : f.cd1)
        if (e.parents == ParentSet::of({1})) x2_1 = x2_1 | e.region;
    for (const auto& e : f.cd2)
        if (e.parents == ParentSet::of({1})) x2_2 = x2_2 | e.region;
    return {{check_canonical_cd_agreement(f.m, f.cd1, f.cd2), "two canonical decompositions agree"},
            {x2_1 == x2_2 && !x2_1.empty(), "unions of the {X2} regions coincide"},
            {check_canonical_cd_agreement(f.m, f.cd1, f.cd1), "identical decompositions agree"}};
}

const std::vector<std::pair<std::string, Campaign>>& registry() {
    static const std::vector<std::pair<std::string, Campaign>> r{
        {"entailment", {entailment_instance, nullptr}},
        {"intersection", {intersection_instance, intersection_fixtures}},
        {"uniqueness", {uniqueness_instance, nullptr}},
        {"piv", {piv_instance, piv_fixtures}},
        {"canonical-agreement", {canonical_agreement_instance, canonical_agreement_fixtures}},
        {"subsumption", {subsumption_instance, subsumption_fixtures}},
        {"connectedness", {connectedness_instance, connectedness_fixtures}},
    };
    return r;
}

}  // namespace

nlohmann::json CampaignReport::to_json() const {
    return {{"campaign", name},     {"instances", instances},         {"violations", violations},
            {"skipped", skipped},   {"fixtures", fixtures},           {"fixture_failures", fixture_failures},
            {"messages", messages}, {"result", passed() ? "PASS" : "FAIL"}};
}

const std::vector<std::string>& campaign_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [name, c] : registry()) n.push_back(name);
        return n;
    }();
    return names;
}

CampaignReport run_campaign(const std::string& name, std::uint64_t seed, std::size_t n, unsigned threads) {
    const auto& reg = registry();
    const auto it = std::find_if(reg.begin(), reg.end(), [&](const auto& p) { return p.first == name; });
    if (it == reg.end()) throw UnknownCampaign("unknown campaign '" + name + "'");
    const Campaign& campaign = it->second;
    const CounterRng base(seed, 0xCA3B0000ULL + static_cast<std::uint64_t>(it - reg.begin()));

    std::vector<Outcome> outcomes(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            CounterRng rng = base.substream(i);
            try {
                outcomes[i] = campaign.instance(rng);
            } catch (const Error& ex) {
                outcomes[i] = violation(std::string("unexpected error: ") + ex.what());
            }
        }
    };
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    CampaignReport rep;
    rep.name = name;
    rep.instances = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (outcomes[i].verdict == Verdict::skipped) ++rep.skipped;
        if (outcomes[i].verdict != Verdict::violation) continue;
        ++rep.violations;
        if (rep.messages.size() < 10) rep.messages.push_back("instance " + std::to_string(i) + ": " + outcomes[i].message);
    }
    if (campaign.fixtures) {
        for (const auto& f : campaign.fixtures()) {
            ++rep.fixtures;
            if (!f.ok) {
                ++rep.fixture_failures;
                rep.messages.push_back("fixture failed: " + f.message);
            }
        }
    }
    return rep;
}

FiniteScm plant_cssi(const std::vector<int>& sizes, int y_size, const std::vector<Planting>& plantings, CounterRng& rng) {
    const auto shape = shape_only(sizes);
    const std::size_t n = shape.num_cells();
    const auto ny = static_cast<std::size_t>(y_size);

    // Union-find over cells; linked cells share a distribution.
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<char> used(n, 0);
    for (const auto& p : plantings) {
        for (std::size_t c : p.cells) {
            if (c >= n) throw ShapeMismatch("planting references a cell outside the grid");
            if (used[c]) throw InvalidConfig("plantings overlap");
            used[c] = 1;
        }
        for (ParentSet a : p.sets) {
            std::unordered_map<std::uint64_t, std::size_t> first;
            for (std::size_t c : p.cells) {
                const auto [it, fresh] = first.emplace(shape.project(c, a), c);
                if (!fresh) {
                    const std::size_t r1 = find(c), r2 = find(it->second);
                    if (r1 != r2) parent[std::max(r1, r2)] = std::min(r1, r2);
                }
            }
        }
    }
    std::vector<double> cond(n * ny);
    std::vector<std::vector<double>> by_root(n);
    for (std::size_t c = 0; c < n; ++c) {
        auto& dist = by_root[find(c)];
        if (dist.empty()) dist = random_distribution(y_size, rng);
        std::copy(dist.begin(), dist.end(), cond.begin() + static_cast<std::ptrdiff_t>(c * ny));
    }
    return FiniteScm(sizes, y_size, random_distribution(static_cast<int>(n), rng), std::move(cond));
}

namespace fixtures {

NonConvexUnion non_convex_union(int bins) {
    const auto scm = make_example(Example::example2);
    auto m = discretize(scm, bins, 50, -1.0, 4.0);
    auto e1 = region_cells(m, scm, bins, 1);
    auto e2 = region_cells(m, scm, bins, 2);
    auto u = e1 | e2;
    return {std::move(m), std::move(u), std::move(e1), std::move(e2)};
}

TwoCanonicalCds two_canonical_cds(int bins) {
    const auto scm = make_example(Example::canonical_example);
    auto m = discretize(scm, bins, 50, -1.0, 2.5);
    GridDecomposition cd1;
    for (int k = 0; k < 4; ++k)
        cd1.push_back({region_cells(m, scm, bins, k), scm.decomposition().regions()[static_cast<std::size_t>(k)].parents});
    auto centre = [bins](std::span<const int> v, int j) { return bin_centre(v[static_cast<std::size_t>(j)], bins); };
    const auto f2 = GridRegion::where(m, [&](std::span<const int> v) {
        const double x1 = centre(v, 0), x2 = centre(v, 1);
        return (x1 < 0.5 && x2 > 0.4 && x2 < 0.8) || (x1 > 0.5 && x2 < 0.4);
    });
    const auto f3 = GridRegion::where(m, [&](std::span<const int> v) {
        const double x1 = centre(v, 0), x2 = centre(v, 1);
        return (x1 < 0.5 && x2 < 0.4) || (x1 > 0.5 && x2 > 0.4 && x2 < 0.8);
    });
    const auto f1 = cd1[1].region;
    const auto f0 = GridRegion::full(m) - (f1 | f2 | f3);
    GridDecomposition cd2{{f0, ParentSet::full(2)}, {f1, ParentSet::of({0})}, {f2, ParentSet::of({1})}, {f3, ParentSet::of({1})}};
    return {std::move(m), std::move(cd1), std::move(cd2)};
}

FiniteScm product_example(int bins, int y_bins) { return discretize(make_example(Example::example1), bins, y_bins, -1.0, 2.0); }

}  // namespace fixtures

}  // namespace cssi
