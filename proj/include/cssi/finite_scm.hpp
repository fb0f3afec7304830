#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "cssi/parent_set.hpp"
#include "cssi/rng.hpp"
#include "cssi/scm.hpp"

namespace cssi {

/// Finite-domain system: parents X_1..X_d with domains {0..k_j-1}, a joint
/// parent table p(x) and a conditional table p(y | x) over {0..ny-1}.
///
/// Cells are numbered in mixed radix with X_1 varying fastest.
class FiniteScm {
public:
    FiniteScm(std::vector<int> domain_sizes, int y_size, std::vector<double> px, std::vector<double> conditional);

    int d() const { return static_cast<int>(sizes_.size()); }
    const std::vector<int>& domain_sizes() const { return sizes_; }
    int y_size() const { return ny_; }
    std::size_t num_cells() const { return px_.size(); }

    double px(std::size_t cell) const { return px_[cell]; }
    std::span<const double> conditional(std::size_t cell) const {
        return {cond_.data() + cell * static_cast<std::size_t>(ny_), static_cast<std::size_t>(ny_)};
    }

    std::vector<int> decode(std::size_t cell) const;
    std::size_t encode(std::span<const int> values) const;
    int value(std::size_t cell, int j) const;
    /// Mixed-radix key of the coordinates in `vars` (other coordinates ignored).
    std::uint64_t project(std::size_t cell, ParentSet vars) const;

    nlohmann::json to_json() const;
    static FiniteScm from_json(const nlohmann::json& j);

private:
    std::vector<int> sizes_;
    std::vector<std::size_t> stride_;
    int ny_;
    std::vector<double> px_;
    std::vector<double> cond_;
};

/// Set of cells of a FiniteScm, kept sorted and unique.
class GridRegion {
public:
    GridRegion() = default;
    explicit GridRegion(std::vector<std::size_t> cells);

    static GridRegion full(const FiniteScm& m);
    static GridRegion where(const FiniteScm& m, const std::function<bool(std::span<const int>)>& pred);
    /// Cells with lo[j] <= x_j <= hi[j] for every j.
    static GridRegion box(const FiniteScm& m, std::span<const int> lo, std::span<const int> hi);

    const std::vector<std::size_t>& cells() const { return cells_; }
    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }
    bool contains(std::size_t cell) const;

    GridRegion operator|(const GridRegion& o) const;
    GridRegion operator&(const GridRegion& o) const;
    GridRegion operator-(const GridRegion& o) const;
    bool operator==(const GridRegion&) const = default;

    double mass(const FiniteScm& m) const;

private:
    std::vector<std::size_t> cells_;
};

/// Discretizes a continuous system with uniform [0,1] parents and additive
/// mechanisms: `bins` equal bins per parent, represented by their centres,
/// and `y_bins` bins on [y_lo, y_hi] whose outer bins extend to infinity.
/// Conditionals are Gaussian CDF differences, so they are exact.
FiniteScm discretize(const Scm& scm, int bins, int y_bins, double y_lo, double y_hi);

/// Bin centre of value v on a `bins`-bin grid over [0, 1].
inline double bin_centre(int v, int bins) { return (v + 0.5) / bins; }

/// Region of cells whose centres fall in region k of the system's decomposition.
GridRegion region_cells(const FiniteScm& m, const Scm& scm, int bins, int k);

/// Random positive distribution of length n (normalized uniform(0.1, 1) weights).
std::vector<double> random_distribution(int n, CounterRng& rng);

}  // namespace cssi
