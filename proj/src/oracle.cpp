#include "cssi/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "cssi/error.hpp"

namespace cssi {

namespace {

std::unordered_map<std::uint64_t, std::vector<std::size_t>> group_by(const FiniteScm& m, const GridRegion& e, ParentSet a) {
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> groups;
    for (std::size_t c : e.cells()) groups[m.project(c, a)].push_back(c);
    return groups;
}

bool group_is_constant(const FiniteScm& m, const std::vector<std::size_t>& cells, double tol) {
    const auto first = m.conditional(cells.front());
    bool close_to_first = true;
    for (std::size_t i = 1; i < cells.size() && close_to_first; ++i)
        close_to_first = total_variation(first, m.conditional(cells[i])) <= 0.5 * tol;
    if (close_to_first) return true;
    for (std::size_t i = 0; i < cells.size(); ++i)
        for (std::size_t j = i + 1; j < cells.size(); ++j)
            if (total_variation(m.conditional(cells[i]), m.conditional(cells[j])) > tol) return false;
    return true;
}

std::uint64_t key_of_values(const FiniteScm& m, ParentSet vars, std::span<const int> values) {
    if (static_cast<int>(values.size()) != m.d()) throw ShapeMismatch("value vector must have one entry per parent");
    std::uint64_t key = 0;
    std::uint64_t mult = 1;
    for (int j : vars.indices()) {
        const int v = values[static_cast<std::size_t>(j)];
        if (v < 0 || v >= m.domain_sizes()[static_cast<std::size_t>(j)]) throw ShapeMismatch("value out of range");
        key += mult * static_cast<std::uint64_t>(v);
        mult *= static_cast<std::uint64_t>(m.domain_sizes()[static_cast<std::size_t>(j)]);
    }
    return key;
}

/// Every cell of `region` within tol of the p(x)-weighted mixture of its
/// group (cells sharing the values of a).
bool matches_group_mixture(const FiniteScm& m, const GridRegion& region, ParentSet a, double tol) {
    const auto ny = static_cast<std::size_t>(m.y_size());
    for (const auto& [key, cells] : group_by(m, region, a)) {
        std::vector<double> mix(ny, 0.0);
        double w = 0.0;
        for (std::size_t c : cells) {
            const auto p = m.conditional(c);
            for (std::size_t y = 0; y < ny; ++y) mix[y] += m.px(c) * p[y];
            w += m.px(c);
        }
        for (double& v : mix) v /= w;
        for (std::size_t c : cells)
            if (total_variation(m.conditional(c), mix) > tol) return false;
    }
    return true;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw ShapeMismatch("distributions have different supports");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

bool check_cssi(const FiniteScm& m, const GridRegion& e, ParentSet a, double tol) {
    if (e.empty()) throw EmptyRegion("check_cssi needs a non-empty region");
    for (const auto& [key, cells] : group_by(m, e, a))
        if (!group_is_constant(m, cells, tol)) return false;
    return true;
}

std::vector<ParentSet> minimal_parent_sets(const FiniteScm& m, const GridRegion& e, double tol) {
    const int d = m.d();
    if (d > 12) throw TooManyParents("minimal_parent_sets enumerates 2^d subsets; d = " + std::to_string(d) + " > 12");
    if (e.empty()) throw EmptyRegion("minimal_parent_sets needs a non-empty region");
    const std::uint64_t n = std::uint64_t{1} << d;
    std::vector<char> pass(n);
    for (std::uint64_t s = 0; s < n; ++s) pass[s] = check_cssi(m, e, ParentSet(s), tol) ? 1 : 0;
    std::vector<ParentSet> out;
    for (std::uint64_t s = 0; s < n; ++s) {
        if (!pass[s]) continue;
        bool minimal = true;
        for (int j : ParentSet(s).indices()) minimal = minimal && !pass[ParentSet(s).without(j).bits()];
        if (minimal) out.emplace_back(s);
    }
    return out;
}

bool is_canonical(const FiniteScm& m, const GridRegion& e, ParentSet a, CanonicalSearch mode, double tol) {
    if (e.empty()) throw EmptyRegion("is_canonical needs a non-empty region");
    if (mode == CanonicalSearch::exhaustive && e.size() > kExhaustiveCanonicalCells)
        throw RegionTooLarge("exhaustive canonicality search is limited to " + std::to_string(kExhaustiveCanonicalCells) +
                             " cells; region has " + std::to_string(e.size()));
    if (!check_cssi(m, e, a, tol)) return false;
    for (int j : a.indices())
        if (check_cssi(m, e, a.without(j), tol)) return false;
    if (a.empty()) return true;

    // Candidate value pairs per coordinate, restricted to values present in e.
    const int d = m.d();
    std::vector<std::vector<std::array<int, 2>>> options(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        const int k = m.domain_sizes()[static_cast<std::size_t>(j)];
        auto& opt = options[static_cast<std::size_t>(j)];
        if (k == 1) {
            opt.push_back({0, 0});
            continue;
        }
        std::vector<char> present(static_cast<std::size_t>(k), 0);
        for (std::size_t c : e.cells()) present[static_cast<std::size_t>(m.value(c, j))] = 1;
        for (int v = 0; v < k; ++v)
            for (int w = v + 1; w < k; ++w) {
                if (mode == CanonicalSearch::rectangles && w != v + 1) break;
                if (present[static_cast<std::size_t>(v)] && present[static_cast<std::size_t>(w)]) opt.push_back({v, w});
            }
        if (opt.empty()) return true;  // e has no full-dimensional part
    }
    double candidates = 1.0;
    for (const auto& o : options) candidates *= static_cast<double>(o.size());
    if (candidates > 5e6) throw RegionTooLarge("canonicality search would visit " + std::to_string(candidates) + " boxes");

    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    std::vector<int> values(static_cast<std::size_t>(d));
    std::vector<std::size_t> cells;
    for (;;) {
        cells.clear();
        bool inside = true;
        for (unsigned corner = 0; inside && corner < (1U << d); ++corner) {
            for (int j = 0; j < d; ++j)
                values[static_cast<std::size_t>(j)] = options[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]][(corner >> j) & 1U];
            const std::size_t c = m.encode(values);
            inside = e.contains(c);
            cells.push_back(c);
        }
        if (inside) {
            const GridRegion f(cells);
            for (int j : a.indices())
                if (check_cssi(m, f, a.without(j), tol)) return false;
        }
        int j = 0;
        while (j < d && ++idx[static_cast<std::size_t>(j)] == options[static_cast<std::size_t>(j)].size()) idx[static_cast<std::size_t>(j++)] = 0;
        if (j == d) break;
    }
    return true;
}

bool is_canonical_auto(const FiniteScm& m, const GridRegion& e, ParentSet a, double tol) {
    return is_canonical(m, e, a, e.size() <= kExhaustiveCanonicalCells ? CanonicalSearch::exhaustive : CanonicalSearch::rectangles,
                        tol);
}

void require_partition(const FiniteScm& m, const GridDecomposition& cd) {
    std::vector<int> hits(m.num_cells(), 0);
    for (const auto& entry : cd)
        for (std::size_t c : entry.region.cells()) {
            if (c >= m.num_cells()) throw NotAPartition("region references a cell outside the grid");
            ++hits[c];
        }
    for (std::size_t c = 0; c < hits.size(); ++c) {
        if (hits[c] == 0) throw NotAPartition("cell " + std::to_string(c) + " is not covered");
        if (hits[c] > 1) throw NotAPartition("cell " + std::to_string(c) + " lies in several regions");
    }
}

bool verify_decomposition(const FiniteScm& m, const GridDecomposition& cd, double tol) {
    if (cd.empty()) throw NotAPartition("decomposition has no regions");
    require_partition(m, cd);
    const ParentSet full = ParentSet::full(m.d());
    if (cd[0].parents != full) return false;
    for (std::size_t k = 1; k < cd.size(); ++k) {
        const auto& [region, a] = cd[k];
        if (region.empty() || !a.is_proper_subset_of(full)) return false;
        if (!check_cssi(m, region, a, tol)) return false;
        for (int j : a.indices())
            if (check_cssi(m, region, a.without(j), tol)) return false;
    }
    return true;
}

bool coordinatewise_connected(const FiniteScm& m, const GridRegion& e, ParentSet a, std::span<const int> a_values,
                              ParentSet s, ParentSet t) {
    if (!(s & t).empty() || !(s & a).empty() || !(t & a).empty())
        throw PreconditionFailed("s and t must be disjoint subsets of the complement of a");
    const std::uint64_t key = key_of_values(m, a, a_values);
    std::vector<std::size_t> slice;
    for (std::size_t c : e.cells())
        if (m.project(c, a) == key) slice.push_back(c);
    if (slice.empty()) throw EmptySlice("slice of the region at the given values is empty");

    const int d = m.d();
    std::vector<std::size_t> stride(static_cast<std::size_t>(d));
    std::size_t acc = 1;
    for (int j = 0; j < d; ++j) {
        stride[static_cast<std::size_t>(j)] = acc;
        acc *= static_cast<std::size_t>(m.domain_sizes()[static_cast<std::size_t>(j)]);
    }
    auto index_of = [&](std::size_t c) -> std::ptrdiff_t {
        const auto it = std::lower_bound(slice.begin(), slice.end(), c);
        return it != slice.end() && *it == c ? it - slice.begin() : -1;
    };

    UnionFind comps(slice.size());
    for (std::size_t i = 0; i < slice.size(); ++i)
        for (int j = 0; j < d; ++j) {
            if (a.contains(j)) continue;
            const int v = m.value(slice[i], j);
            if (v + 1 < m.domain_sizes()[static_cast<std::size_t>(j)]) {
                const auto n = index_of(slice[i] + stride[static_cast<std::size_t>(j)]);
                if (n >= 0) comps.unite(i, static_cast<std::size_t>(n));
            }
        }

    // Meta-graph over components: linked when their s- or t-projections meet.
    UnionFind meta(slice.size());
    std::unordered_map<std::uint64_t, std::size_t> by_s, by_t;
    for (std::size_t i = 0; i < slice.size(); ++i) {
        const std::size_t root = comps.find(i);
        meta.unite(i, root);
        const auto [is, s_new] = by_s.emplace(m.project(slice[i], s), root);
        if (!s_new) meta.unite(root, is->second);
        const auto [it, t_new] = by_t.emplace(m.project(slice[i], t), root);
        if (!t_new) meta.unite(root, it->second);
    }
    const std::size_t r0 = meta.find(0);
    for (std::size_t i = 1; i < slice.size(); ++i)
        if (meta.find(i) != r0) return false;
    return true;
}

bool intersection_precondition(const FiniteScm& m, const GridRegion& e, ParentSet a, ParentSet b) {
    if (e.empty()) throw EmptyRegion("intersection_precondition needs a non-empty region");
    const ParentSet ab = a & b;
    std::map<std::uint64_t, std::size_t> reps;
    for (std::size_t c : e.cells()) reps.emplace(m.project(c, ab), c);
    for (const auto& [key, cell] : reps) {
        const auto values = m.decode(cell);
        if (!coordinatewise_connected(m, e, ab, values, a - b, b - a)) return false;
    }
    return true;
}

bool check_intersection_property(const FiniteScm& m, const GridRegion& e, ParentSet a, ParentSet b, double tol) {
    if (!check_cssi(m, e, a, tol) || !check_cssi(m, e, b, tol))
        throw PreconditionFailed("both CSSI statements must hold before intersecting them");
    return check_cssi(m, e, a & b, tol);
}

bool csi_given_region(const FiniteScm& m, const GridRegion& region, ParentSet a, double tol) {
    if (region.empty()) return true;
    return matches_group_mixture(m, region, a, tol);
}

bool piv_equivalence(const FiniteScm& m, const GridDecomposition& cd, double tol) {
    for (const auto& entry : cd)
        if (!csi_given_region(m, entry.region, entry.parents, tol)) return false;
    return true;
}

GridRegion embed_pci(const FiniteScm& m, ParentSet b, ParentSet a, std::span<const int> a_values,
                     const std::function<bool(std::span<const int>)>& domain, double tol) {
    if (!(a & b).empty() || (a | b) != ParentSet::full(m.d()))
        throw PreconditionFailed("A and B must split the parent set");
    const std::uint64_t key = key_of_values(m, a, a_values);
    std::vector<std::size_t> cells;
    for (std::size_t c = 0; c < m.num_cells(); ++c)
        if (m.project(c, a) == key && (!domain || domain(m.decode(c)))) cells.push_back(c);
    GridRegion e(std::move(cells));
    if (e.empty()) throw PreconditionFailed("the context selects no cell");
    if (!matches_group_mixture(m, e, a, tol)) throw CsiDoesNotHold("Y depends on X_B in the given context");
    return e;
}

GridRegion embed_csi(const FiniteScm& m, ParentSet b, ParentSet a, std::span<const int> a_values, double tol) {
    return embed_pci(m, b, a, a_values, nullptr, tol);
}

bool is_distinctive(const GridDecomposition& cd) {
    for (std::size_t i = 0; i < cd.size(); ++i)
        for (std::size_t j = i + 1; j < cd.size(); ++j)
            if (cd[i].parents == cd[j].parents) return false;
    return true;
}

bool check_canonical_cd_agreement(const FiniteScm& m, const GridDecomposition& cd1, const GridDecomposition& cd2,
                                  double tol) {
    for (const GridDecomposition* cd : {&cd1, &cd2}) {
        if (!verify_decomposition(m, *cd, tol)) throw PreconditionFailed("input is not a valid decomposition");
        for (std::size_t k = 1; k < cd->size(); ++k)
            if (!is_canonical_auto(m, (*cd)[k].region, (*cd)[k].parents, tol))
                throw PreconditionFailed("region " + std::to_string(k) + " is not canonical");
    }
    for (const auto& e : cd1)
        for (const auto& f : cd2)
            if (!(e.region & f.region).empty() && e.parents != f.parents) return false;

    std::map<std::uint64_t, std::pair<GridRegion, GridRegion>> unions;
    for (const auto& e : cd1) unions[e.parents.bits()].first = unions[e.parents.bits()].first | e.region;
    for (const auto& f : cd2) unions[f.parents.bits()].second = unions[f.parents.bits()].second | f.region;
    for (const auto& [bits, pair] : unions)
        if (!(pair.first == pair.second)) return false;

    if (is_distinctive(cd1) && is_distinctive(cd2)) {
        if (cd1.size() != cd2.size()) return false;
        for (const auto& e : cd1) {
            const auto it = std::find_if(cd2.begin(), cd2.end(), [&](const auto& f) { return f.parents == e.parents; });
            if (it == cd2.end() || !(it->region == e.region)) return false;
        }
    }
    return true;
}

}  // namespace cssi
