#include "cssi/finite_scm.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "cssi/error.hpp"

namespace cssi {

FiniteScm::FiniteScm(std::vector<int> domain_sizes, int y_size, std::vector<double> px, std::vector<double> conditional)
    : sizes_(std::move(domain_sizes)), ny_(y_size), px_(std::move(px)), cond_(std::move(conditional)) {
    if (sizes_.empty() || sizes_.size() > static_cast<std::size_t>(ParentSet::kMaxParents))
        throw InvalidConfig("finite system needs 1..64 parents");
    std::size_t cells = 1;
    for (int k : sizes_) {
        if (k < 1) throw InvalidConfig("domain sizes must be positive");
        stride_.push_back(cells);
        cells *= static_cast<std::size_t>(k);
    }
    if (ny_ < 1) throw InvalidConfig("y domain must be non-empty");
    if (px_.size() != cells) throw ShapeMismatch("p(x) table has the wrong size");
    if (cond_.size() != cells * static_cast<std::size_t>(ny_)) throw ShapeMismatch("p(y|x) table has the wrong size");
    double total = 0.0;
    for (double p : px_) {
        if (!(p > 0.0)) throw InvalidConfig("p(x) must be strictly positive on every cell");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidConfig("p(x) must sum to 1");
    for (std::size_t c = 0; c < cells; ++c) {
        double s = 0.0;
        for (double v : this->conditional(c)) {
            if (v < 0.0) throw InvalidConfig("negative conditional probability");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-12) throw InvalidConfig("p(y|x) row " + std::to_string(c) + " does not sum to 1");
    }
}

std::vector<int> FiniteScm::decode(std::size_t cell) const {
    std::vector<int> v(sizes_.size());
    for (std::size_t j = 0; j < sizes_.size(); ++j) {
        v[j] = static_cast<int>(cell % static_cast<std::size_t>(sizes_[j]));
        cell /= static_cast<std::size_t>(sizes_[j]);
    }
    return v;
}

std::size_t FiniteScm::encode(std::span<const int> values) const {
    if (values.size() != sizes_.size()) throw ShapeMismatch("cell value vector has the wrong length");
    std::size_t c = 0;
    for (std::size_t j = 0; j < sizes_.size(); ++j) {
        if (values[j] < 0 || values[j] >= sizes_[j]) throw ShapeMismatch("cell value out of range");
        c += static_cast<std::size_t>(values[j]) * stride_[j];
    }
    return c;
}

int FiniteScm::value(std::size_t cell, int j) const {
    return static_cast<int>((cell / stride_[static_cast<std::size_t>(j)]) % static_cast<std::size_t>(sizes_[static_cast<std::size_t>(j)]));
}

std::uint64_t FiniteScm::project(std::size_t cell, ParentSet vars) const {
    std::uint64_t key = 0;
    std::uint64_t mult = 1;
    for (int j : vars.indices()) {
        key += mult * static_cast<std::uint64_t>(value(cell, j));
        mult *= static_cast<std::uint64_t>(sizes_[static_cast<std::size_t>(j)]);
    }
    return key;
}

nlohmann::json FiniteScm::to_json() const {
    return {{"domain_sizes", sizes_}, {"y_size", ny_}, {"px", px_}, {"conditional", cond_}};
}

FiniteScm FiniteScm::from_json(const nlohmann::json& j) {
    try {
        return FiniteScm(j.at("domain_sizes").get<std::vector<int>>(), j.at("y_size").get<int>(),
                         j.at("px").get<std::vector<double>>(), j.at("conditional").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig(std::string("finite system fixture: ") + e.what());
    }
}

GridRegion::GridRegion(std::vector<std::size_t> cells) : cells_(std::move(cells)) {
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
}

GridRegion GridRegion::full(const FiniteScm& m) {
    std::vector<std::size_t> c(m.num_cells());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = i;
    return GridRegion(std::move(c));
}

GridRegion GridRegion::where(const FiniteScm& m, const std::function<bool(std::span<const int>)>& pred) {
    std::vector<std::size_t> c;
    for (std::size_t i = 0; i < m.num_cells(); ++i)
        if (pred(m.decode(i))) c.push_back(i);
    return GridRegion(std::move(c));
}

GridRegion GridRegion::box(const FiniteScm& m, std::span<const int> lo, std::span<const int> hi) {
    if (static_cast<int>(lo.size()) != m.d() || static_cast<int>(hi.size()) != m.d()) throw ShapeMismatch("box bounds");
    return where(m, [&](std::span<const int> v) {
        for (std::size_t j = 0; j < v.size(); ++j)
            if (v[j] < lo[j] || v[j] > hi[j]) return false;
        return true;
    });
}

bool GridRegion::contains(std::size_t cell) const { return std::binary_search(cells_.begin(), cells_.end(), cell); }

GridRegion GridRegion::operator|(const GridRegion& o) const {
    std::vector<std::size_t> out;
    std::set_union(cells_.begin(), cells_.end(), o.cells_.begin(), o.cells_.end(), std::back_inserter(out));
    return GridRegion(std::move(out));
}

GridRegion GridRegion::operator&(const GridRegion& o) const {
    std::vector<std::size_t> out;
    std::set_intersection(cells_.begin(), cells_.end(), o.cells_.begin(), o.cells_.end(), std::back_inserter(out));
    return GridRegion(std::move(out));
}

GridRegion GridRegion::operator-(const GridRegion& o) const {
    std::vector<std::size_t> out;
    std::set_difference(cells_.begin(), cells_.end(), o.cells_.begin(), o.cells_.end(), std::back_inserter(out));
    return GridRegion(std::move(out));
}

double GridRegion::mass(const FiniteScm& m) const {
    double s = 0.0;
    for (std::size_t c : cells_) s += m.px(c);
    return s;
}

FiniteScm discretize(const Scm& scm, int bins, int y_bins, double y_lo, double y_hi) {
    if (scm.parent_law() != ParentLaw::uniform_unit) throw InvalidConfig("discretize needs uniform [0,1] parents");
    if (bins < 1 || y_bins < 2 || !(y_hi > y_lo)) throw InvalidConfig("bad discretization grid");
    const int d = scm.layout().count();
    if (scm.layout().total_dim() != d) throw InvalidConfig("discretize needs scalar parents");
    std::size_t cells = 1;
    for (int j = 0; j < d; ++j) cells *= static_cast<std::size_t>(bins);

    std::vector<double> edges(static_cast<std::size_t>(y_bins) + 1);
    for (int i = 0; i <= y_bins; ++i) edges[static_cast<std::size_t>(i)] = y_lo + (y_hi - y_lo) * i / y_bins;
    edges.front() = -INFINITY;
    edges.back() = INFINITY;

    std::vector<double> px(cells, 1.0 / static_cast<double>(cells));
    std::vector<double> cond(cells * static_cast<std::size_t>(y_bins));
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t c = 0; c < cells; ++c) {
        std::size_t rest = c;
        for (int j = 0; j < d; ++j) {
            x[static_cast<std::size_t>(j)] = bin_centre(static_cast<int>(rest % static_cast<std::size_t>(bins)), bins);
            rest /= static_cast<std::size_t>(bins);
        }
        const int k = scm.decomposition().region_of(x);
        const Mechanism& mech = scm.mechanisms()[static_cast<std::size_t>(k)];
        if (!mech || mech.noise != NoiseKind::additive) throw InvalidConfig("discretize needs additive mechanisms");
        const auto local = scm.layout().gather(x, scm.decomposition().regions()[static_cast<std::size_t>(k)].parents);
        const double mu = mech.location(local);
        const double sigma = mech.noise_scale * scm.noise_std();
        const boost::math::normal_distribution<double> law(mu, sigma);
        double* row = cond.data() + c * static_cast<std::size_t>(y_bins);
        double total = 0.0;
        for (int i = 0; i < y_bins; ++i) {
            const double lo = edges[static_cast<std::size_t>(i)];
            const double hi = edges[static_cast<std::size_t>(i) + 1];
            // Upper tail via the complement keeps precision for bins right of the mean.
            double p;
            if (std::isinf(lo)) p = boost::math::cdf(law, hi);
            else if (std::isinf(hi)) p = boost::math::cdf(boost::math::complement(law, lo));
            else if (lo >= mu) p = boost::math::cdf(boost::math::complement(law, lo)) - boost::math::cdf(boost::math::complement(law, hi));
            else p = boost::math::cdf(law, hi) - boost::math::cdf(law, lo);
            row[i] = std::max(p, 0.0);
            total += row[i];
        }
        for (int i = 0; i < y_bins; ++i) row[i] /= total;
    }
    return FiniteScm(std::vector<int>(static_cast<std::size_t>(d), bins), y_bins, std::move(px), std::move(cond));
}

GridRegion region_cells(const FiniteScm& m, const Scm& scm, int bins, int k) {
    return GridRegion::where(m, [&](std::span<const int> v) {
        std::vector<double> x(v.size());
        for (std::size_t j = 0; j < v.size(); ++j) x[j] = bin_centre(v[j], bins);
        return scm.decomposition().region_of(x) == k;
    });
}

std::vector<double> random_distribution(int n, CounterRng& rng) {
    std::vector<double> p(static_cast<std::size_t>(n));
    double s = 0.0;
    for (double& v : p) {
        v = rng.uniform(0.1, 1.0);
        s += v;
    }
    for (double& v : p) v /= s;
    return p;
}

}  // namespace cssi
