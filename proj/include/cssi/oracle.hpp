#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cssi/finite_scm.hpp"

namespace cssi {

/// Distributions closer than this in total variation count as equal.
inline constexpr double kDefaultTvTolerance = 1e-9;

double total_variation(std::span<const double> p, std::span<const double> q);

/// Y independent of X_{A^c} given X_A on e: every two cells of e that agree
/// on A have the same conditional. Throws EmptyRegion.
bool check_cssi(const FiniteScm& m, const GridRegion& e, ParentSet a, double tol = kDefaultTvTolerance);

/// Inclusion-minimal sets passing check_cssi, in increasing bitmask order.
/// Throws TooManyParents for d > 12.
std::vector<ParentSet> minimal_parent_sets(const FiniteScm& m, const GridRegion& e, double tol = kDefaultTvTolerance);

enum class CanonicalSearch {
    exhaustive,  // every full-dimensional 2-value product inside e; e limited to 20 cells
    rectangles,  // adjacent-value products only: sound for "not canonical", incomplete otherwise
};

/// Largest region accepted by the exhaustive search.
inline constexpr std::size_t kExhaustiveCanonicalCells = 20;

/// Grid reading of canonicality: (e, a) is a regular CSSI and no
/// full-dimensional product F inside e (two values on every coordinate whose
/// domain has at least two) admits a CSSI with a strictly smaller set.
/// Single cells are excluded as witnesses: on a grid any single cell would
/// admit the empty set and make every non-empty a non-canonical.
bool is_canonical(const FiniteScm& m, const GridRegion& e, ParentSet a,
                  CanonicalSearch mode = CanonicalSearch::exhaustive, double tol = kDefaultTvTolerance);

/// Exhaustive when e is small enough, rectangles otherwise.
bool is_canonical_auto(const FiniteScm& m, const GridRegion& e, ParentSet a, double tol = kDefaultTvTolerance);

struct GridDecompositionEntry {
    GridRegion region;
    ParentSet parents;
};
using GridDecomposition = std::vector<GridDecompositionEntry>;

/// Throws NotAPartition unless the regions are disjoint and cover the grid.
void require_partition(const FiniteScm& m, const GridDecomposition& cd);

/// Entry 0 must carry the full parent set (and may be empty). Every other
/// entry must be non-empty with a proper subset that passes check_cssi and is
/// minimal.
bool verify_decomposition(const FiniteScm& m, const GridDecomposition& cd, double tol = kDefaultTvTolerance);

/// Coordinate-wise connectedness of the slice of e at the
/// values of `a` taken from `a_values` (a full-length value vector), with
/// respect to s and t. Components use 4-adjacency on the grid.
/// Throws EmptySlice, PreconditionFailed if s, t overlap or meet a.
bool coordinatewise_connected(const FiniteScm& m, const GridRegion& e, ParentSet a, std::span<const int> a_values,
                              ParentSet s, ParentSet t);

/// Every slice of e at a value of a & b is coordinate-wise connected with
/// respect to a - b and b - a.
bool intersection_precondition(const FiniteScm& m, const GridRegion& e, ParentSet a, ParentSet b);

/// check_cssi(m, e, a & b), given that a and b both pass (PreconditionFailed otherwise).
bool check_intersection_property(const FiniteScm& m, const GridRegion& e, ParentSet a, ParentSet b,
                                 double tol = kDefaultTvTolerance);

/// CSI Y indep X_{A^c} | X_A, Z = k in the joint of (X, Z, Y) where Z marks
/// the region: p(y | x, z) is compared with p(y | x_A, z) obtained by
/// marginalizing p(x) over the region.
bool csi_given_region(const FiniteScm& m, const GridRegion& region, ParentSet a, double tol = kDefaultTvTolerance);

/// csi_given_region for every entry.
bool piv_equivalence(const FiniteScm& m, const GridDecomposition& cd, double tol = kDefaultTvTolerance);

/// Region {x : x_A = a_values restricted to A} for a CSI Y indep X_B | X_A = x_A
/// with B the complement of A. Throws CsiDoesNotHold or PreconditionFailed.
GridRegion embed_csi(const FiniteScm& m, ParentSet b, ParentSet a, std::span<const int> a_values,
                     double tol = kDefaultTvTolerance);

/// As embed_csi with X_B further restricted to the cells accepted by `domain`.
GridRegion embed_pci(const FiniteScm& m, ParentSet b, ParentSet a, std::span<const int> a_values,
                     const std::function<bool(std::span<const int>)>& domain, double tol = kDefaultTvTolerance);

/// For verified canonical decompositions: regions with a common cell share
/// the parent set, and for every parent set C the unions of C-regions agree.
/// Distinctive pairs must also have the same number of regions and match
/// region by region. Throws PreconditionFailed if either input is not a
/// verified canonical decomposition.
bool check_canonical_cd_agreement(const FiniteScm& m, const GridDecomposition& cd1, const GridDecomposition& cd2,
                                  double tol = kDefaultTvTolerance);

bool is_distinctive(const GridDecomposition& cd);

}  // namespace cssi
