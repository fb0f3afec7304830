#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cssi/dataset.hpp"
#include "cssi/layout.hpp"
#include "cssi/parent_set.hpp"
#include "cssi/rng.hpp"

namespace cssi {

enum class ContextKind {
    halfspace_argmax,
    norm_band,
    function_argmax,
    product_of_intervals,
    explicit_grid,
    region_index,
    predicate,
    remainder,  // complement of every other region of a decomposition
};

const char* to_string(ContextKind kind);

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool contains(double v) const { return v >= lo && v < hi; }
};

/// A context set: a pure, deterministic membership test over parent outcomes.
class ContextSet {
public:
    using Predicate = std::function<bool(std::span<const double>)>;
    using Score = std::function<double(std::span<const double>)>;

    ContextSet(ContextKind kind, Predicate predicate, std::string description);

    static ContextSet remainder();
    static ContextSet predicate(Predicate predicate, std::string description);
    /// lo <= ||x||_2 < hi.
    static ContextSet norm_band(double lo, double hi);
    /// Per-coordinate half-open intervals; convex by construction.
    static ContextSet product_of_intervals(std::vector<Interval> box);
    /// x belongs iff scores[index](x) is maximal (ties resolved by the
    /// decomposition's first-match order). `linear` selects the
    /// halfspace_argmax kind, which is the same test for linear scores.
    static ContextSet argmax(std::vector<Score> scores, int index, bool linear);
    /// Finite list of member points, matched exactly.
    static ContextSet explicit_grid(std::vector<std::vector<double>> members);
    /// x belongs iff labeler(x) == index.
    static ContextSet region_index(std::function<int(std::span<const double>)> labeler, int index);

    /// Remainder sets have no standalone predicate and always answer false here;
    /// ContextualDecomposition resolves them.
    bool contains(std::span<const double> x) const;
    ContextKind kind() const { return kind_; }
    const std::string& description() const { return description_; }

private:
    ContextKind kind_;
    Predicate predicate_;
    std::string description_;
};

struct Region {
    ContextSet context;
    ParentSet parents;
};

/// Ordered regions E_0..E_N with their local parent sets. E_0 carries the
/// full parent set; every other region a proper subset.
class ContextualDecomposition {
public:
    ContextualDecomposition(int num_parents, std::vector<Region> regions);

    /// {(X, Pa(Y))}.
    static ContextualDecomposition trivial(int num_parents);

    /// Smallest k whose set contains x; a remainder E_0 is consulted after
    /// every listed region. Throws NoRegion when nothing claims x.
    int region_of(std::span<const double> x) const;
    ParentSet ground_truth_parents(std::span<const double> x) const;

    int num_parents() const { return num_parents_; }
    const std::vector<Region>& regions() const { return regions_; }
    std::size_t size() const { return regions_.size(); }

private:
    int num_parents_;
    std::vector<Region> regions_;
};

int region_of(const ContextualDecomposition& cd, std::span<const double> x);
ParentSet ground_truth_parents(const ContextualDecomposition& cd, std::span<const double> x);

enum class NoiseKind { additive, non_additive };
enum class ParentLaw { uniform_unit, standard_normal };

const char* to_string(NoiseKind kind);
const char* to_string(ParentLaw law);

/// Region mechanism f_k. It only ever sees the coordinates of its local
/// parents, so it cannot read anything else.
struct Mechanism {
    NoiseKind noise = NoiseKind::additive;
    std::function<double(std::span<const double>)> location;           // additive
    double noise_scale = 1.0;                                            // additive
    std::function<double(std::span<const double>, double)> joint;       // non-additive

    static Mechanism additive(std::function<double(std::span<const double>)> location, double noise_scale = 1.0);
    static Mechanism non_additive(std::function<double(std::span<const double>, double)> f);

    explicit operator bool() const { return noise == NoiseKind::additive ? bool(location) : bool(joint); }
    double operator()(std::span<const double> x_local, double u) const;
};

class Scm {
public:
    struct Outcome {
        double y;
        int region;
        ParentSet parents;
    };

    /// `mechanisms[k]` drives region k; a mechanism may be empty only for a
    /// remainder region that the parent law never reaches.
    Scm(std::string name, VariableLayout layout, ParentLaw parent_law, ContextualDecomposition decomposition,
        std::vector<Mechanism> mechanisms, double noise_std = 1.0);

    const std::string& name() const { return name_; }
    const VariableLayout& layout() const { return layout_; }
    ParentLaw parent_law() const { return parent_law_; }
    double noise_std() const { return noise_std_; }
    const ContextualDecomposition& decomposition() const { return decomposition_; }
    const std::vector<Mechanism>& mechanisms() const { return mechanisms_; }

    void sample_parents(CounterRng& rng, std::span<double> out) const;
    double sample_noise(CounterRng& rng) const { return noise_std_ * rng.normal(); }

    /// Y for a given parent outcome and noise value u.
    Outcome evaluate(std::span<const double> x, double u) const;

private:
    std::string name_;
    VariableLayout layout_;
    ParentLaw parent_law_;
    ContextualDecomposition decomposition_;
    std::vector<Mechanism> mechanisms_;
    double noise_std_;
};

/// n i.i.d. labelled rows. Row i draws from substream i of (seed), so the
/// dataset is a pure function of (scm, n, seed) and rows can be produced in
/// any order.
LabeledDataset sample(const Scm& scm, std::size_t n, std::uint64_t seed);

}  // namespace cssi
