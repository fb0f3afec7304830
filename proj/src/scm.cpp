#include "cssi/scm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cssi/error.hpp"

namespace cssi {

const char* to_string(ContextKind kind) {
    switch (kind) {
        case ContextKind::halfspace_argmax: return "halfspace-argmax";
        case ContextKind::norm_band: return "norm-band";
        case ContextKind::function_argmax: return "function-argmax";
        case ContextKind::product_of_intervals: return "product-of-intervals";
        case ContextKind::explicit_grid: return "explicit-grid";
        case ContextKind::region_index: return "indicator-of-region-index";
        case ContextKind::predicate: return "predicate";
        case ContextKind::remainder: return "remainder";
    }
    return "?";
}

const char* to_string(NoiseKind kind) {
    return kind == NoiseKind::additive ? "additive" : "non-additive";
}

const char* to_string(ParentLaw law) {
    return law == ParentLaw::uniform_unit ? "uniform[0,1]" : "normal(0,1)";
}

ContextSet::ContextSet(ContextKind kind, Predicate predicate, std::string description)
    : kind_(kind), predicate_(std::move(predicate)), description_(std::move(description)) {}

ContextSet ContextSet::remainder() {
    return ContextSet(ContextKind::remainder, nullptr, "complement of listed regions");
}

ContextSet ContextSet::predicate(Predicate predicate, std::string description) {
    return ContextSet(ContextKind::predicate, std::move(predicate), std::move(description));
}

ContextSet ContextSet::norm_band(double lo, double hi) {
    auto pred = [lo, hi](std::span<const double> x) {
        double sq = 0.0;
        for (double v : x) sq += v * v;
        const double n = std::sqrt(sq);
        return n >= lo && n < hi;
    };
    return ContextSet(ContextKind::norm_band, pred,
                      format_double(lo) + " <= ||x|| < " + format_double(hi));
}

ContextSet ContextSet::product_of_intervals(std::vector<Interval> box) {
    std::string desc = "box";
    for (const auto& iv : box) desc += " [" + format_double(iv.lo) + "," + format_double(iv.hi) + ")";
    auto pred = [box = std::move(box)](std::span<const double> x) {
        if (x.size() != box.size()) throw ShapeMismatch("product-of-intervals dimension mismatch");
        for (std::size_t i = 0; i < box.size(); ++i)
            if (!box[i].contains(x[i])) return false;
        return true;
    };
    return ContextSet(ContextKind::product_of_intervals, pred, desc);
}

ContextSet ContextSet::argmax(std::vector<Score> scores, int index, bool linear) {
    if (index < 0 || index >= static_cast<int>(scores.size())) throw InvalidConfig("argmax index out of range");
    auto pred = [scores = std::move(scores), index](std::span<const double> x) {
        const double mine = scores[static_cast<std::size_t>(index)](x);
        for (const auto& s : scores)
            if (s(x) > mine) return false;
        return true;
    };
    return ContextSet(linear ? ContextKind::halfspace_argmax : ContextKind::function_argmax, pred,
                      "argmax score " + std::to_string(index));
}

ContextSet ContextSet::explicit_grid(std::vector<std::vector<double>> members) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    const std::string desc = std::to_string(members.size()) + " explicit points";
    auto pred = [members = std::move(members)](std::span<const double> x) {
        const std::vector<double> key(x.begin(), x.end());
        return std::binary_search(members.begin(), members.end(), key);
    };
    return ContextSet(ContextKind::explicit_grid, pred, desc);
}

ContextSet ContextSet::region_index(std::function<int(std::span<const double>)> labeler, int index) {
    auto pred = [labeler = std::move(labeler), index](std::span<const double> x) { return labeler(x) == index; };
    return ContextSet(ContextKind::region_index, pred, "label == " + std::to_string(index));
}

bool ContextSet::contains(std::span<const double> x) const {
    if (kind_ == ContextKind::remainder) return false;
    return predicate_(x);
}

ContextualDecomposition::ContextualDecomposition(int num_parents, std::vector<Region> regions)
    : num_parents_(num_parents), regions_(std::move(regions)) {
    if (num_parents < 1 || num_parents > ParentSet::kMaxParents) throw InvalidConfig("parent count out of range");
    if (regions_.empty()) throw InvalidConfig("decomposition needs at least the region E_0");
    const ParentSet all = ParentSet::full(num_parents);
    if (regions_[0].parents != all) throw InvalidConfig("E_0 must carry the full parent set");
    for (std::size_t k = 1; k < regions_.size(); ++k) {
        if (!regions_[k].parents.is_proper_subset_of(all))
            throw InvalidConfig("region " + std::to_string(k) + " must have a proper subset of the parents");
        if (regions_[k].context.kind() == ContextKind::remainder)
            throw InvalidConfig("only E_0 may be the remainder region");
    }
}

ContextualDecomposition ContextualDecomposition::trivial(int num_parents) {
    return ContextualDecomposition(num_parents, {Region{ContextSet::remainder(), ParentSet::full(num_parents)}});
}

int ContextualDecomposition::region_of(std::span<const double> x) const {
    const bool zero_is_remainder = regions_[0].context.kind() == ContextKind::remainder;
    if (!zero_is_remainder && regions_[0].context.contains(x)) return 0;
    for (std::size_t k = 1; k < regions_.size(); ++k)
        if (regions_[k].context.contains(x)) return static_cast<int>(k);
    if (zero_is_remainder) return 0;
    throw NoRegion("no region of the decomposition contains the point");
}

ParentSet ContextualDecomposition::ground_truth_parents(std::span<const double> x) const {
    return regions_[static_cast<std::size_t>(region_of(x))].parents;
}

int region_of(const ContextualDecomposition& cd, std::span<const double> x) { return cd.region_of(x); }

ParentSet ground_truth_parents(const ContextualDecomposition& cd, std::span<const double> x) {
    return cd.ground_truth_parents(x);
}

Mechanism Mechanism::additive(std::function<double(std::span<const double>)> location, double noise_scale) {
    Mechanism m;
    m.noise = NoiseKind::additive;
    m.location = std::move(location);
    m.noise_scale = noise_scale;
    return m;
}

Mechanism Mechanism::non_additive(std::function<double(std::span<const double>, double)> f) {
    Mechanism m;
    m.noise = NoiseKind::non_additive;
    m.joint = std::move(f);
    return m;
}

double Mechanism::operator()(std::span<const double> x_local, double u) const {
    if (noise == NoiseKind::additive) return location(x_local) + noise_scale * u;
    return joint(x_local, u);
}

Scm::Scm(std::string name, VariableLayout layout, ParentLaw parent_law, ContextualDecomposition decomposition,
         std::vector<Mechanism> mechanisms, double noise_std)
    : name_(std::move(name)),
      layout_(std::move(layout)),
      parent_law_(parent_law),
      decomposition_(std::move(decomposition)),
      mechanisms_(std::move(mechanisms)),
      noise_std_(noise_std) {
    if (layout_.count() != decomposition_.num_parents())
        throw InvalidConfig("layout and decomposition disagree on the parent count");
    if (mechanisms_.size() != decomposition_.size())
        throw InvalidConfig("one mechanism per region is required");
    for (std::size_t k = 1; k < mechanisms_.size(); ++k)
        if (!mechanisms_[k]) throw InvalidConfig("region " + std::to_string(k) + " has no mechanism");
}

void Scm::sample_parents(CounterRng& rng, std::span<double> out) const {
    for (double& v : out) v = parent_law_ == ParentLaw::uniform_unit ? rng.uniform() : rng.normal();
}

Scm::Outcome Scm::evaluate(std::span<const double> x, double u) const {
    const int k = decomposition_.region_of(x);
    const auto& mech = mechanisms_[static_cast<std::size_t>(k)];
    if (!mech) throw NoRegion("point fell in remainder region without a mechanism");
    const ParentSet parents = decomposition_.regions()[static_cast<std::size_t>(k)].parents;
    const std::vector<double> local = layout_.gather(x, parents);
    return Outcome{mech(local, u), k, parents};
}

LabeledDataset sample(const Scm& scm, std::size_t n, std::uint64_t seed) {
    LabeledDataset ds;
    ds.x_layout = scm.layout();
    ds.target_widths = {1};
    ds.rows.resize(n);
    const CounterRng root(seed);
    const auto dim = static_cast<std::size_t>(scm.layout().total_dim());
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng = root.substream(i);
        DatasetRow& row = ds.rows[i];
        row.x.resize(dim);
        scm.sample_parents(rng, row.x);
        const double u = scm.sample_noise(rng);
        const auto out = scm.evaluate(row.x, u);
        row.y = {out.y};
        row.region = out.region;
        row.masks = {out.parents};
    }
    std::map<int, std::size_t> occupancy;
    for (const auto& r : ds.rows) ++occupancy[r.region];
    nlohmann::json occ = nlohmann::json::object();
    for (auto [k, c] : occupancy) occ[std::to_string(k)] = c;
    ds.metadata = {{"generator", scm.name()},
                   {"seed", seed},
                   {"d", scm.layout().count()},
                   {"n", n},
                   {"parent_law", to_string(scm.parent_law())},
                   {"region_counts", occ}};
    return ds;
}

}  // namespace cssi
