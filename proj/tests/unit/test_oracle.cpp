#include <doctest.h>

#include "cssi/campaigns.hpp"
#include "cssi/error.hpp"
#include "cssi/finite_scm.hpp"
#include "cssi/oracle.hpp"
#include "cssi/synthgen.hpp"

using namespace cssi;

namespace {

// 2 x 2 grid, binary Y. Cell index x1 + 2 x2. rows[c] = p(Y = 1 | cell c).
FiniteScm two_by_two(std::array<double, 4> rows) {
    std::vector<double> cond;
    for (double p : rows) cond.insert(cond.end(), {1.0 - p, p});
    return FiniteScm({2, 2}, 2, {0.1, 0.2, 0.3, 0.4}, cond);
}

GridRegion cells(std::vector<std::size_t> c) { return GridRegion(std::move(c)); }

const ParentSet X1 = ParentSet::of({0});
const ParentSet X2 = ParentSet::of({1});
const ParentSet X3 = ParentSet::of({2});

}  // namespace

TEST_SUITE("cssi_oracle") {

TEST_CASE("check_cssi on a hand-made table") {
    // Depends on x1 only.
    const auto m = two_by_two({0.2, 0.7, 0.2, 0.7});
    const auto all = GridRegion::full(m);
    CHECK(check_cssi(m, all, X1));
    CHECK_FALSE(check_cssi(m, all, X2));
    CHECK_FALSE(check_cssi(m, all, ParentSet{}));
    CHECK(check_cssi(m, cells({0, 2}), ParentSet{}));
    CHECK(minimal_parent_sets(m, all) == std::vector<ParentSet>{X1});
    CHECK(minimal_parent_sets(m, cells({1, 3})) == std::vector<ParentSet>{ParentSet{}});
    CHECK(total_variation(std::vector<double>{0.2, 0.8}, std::vector<double>{0.5, 0.5}) == doctest::Approx(0.3));
}

TEST_CASE("product example: each region has its own single parent") {
    const Scm scm = make_example(Example::example1);
    const FiniteScm m = fixtures::product_example(10);
    const GridRegion e1 = region_cells(m, scm, 10, 1), e2 = region_cells(m, scm, 10, 2);
    CHECK(e1.size() + e2.size() == 100);
    CHECK(check_cssi(m, e1, X1));
    CHECK_FALSE(check_cssi(m, e1, X2));
    CHECK(check_cssi(m, e2, X2));
    CHECK_FALSE(check_cssi(m, e2, X1));
    CHECK(minimal_parent_sets(m, e1) == std::vector<ParentSet>{X1});
    CHECK(minimal_parent_sets(m, GridRegion::full(m)) == std::vector<ParentSet>{ParentSet::full(2)});
}

TEST_CASE("the union of the diagonal quadrants has two minimal parent sets") {
    const auto f = fixtures::non_convex_union(10);
    const auto mins = minimal_parent_sets(f.m, f.e1_or_e2);
    CHECK(mins == std::vector<ParentSet>{ParentSet::of({0, 2}), ParentSet::of({1, 2})});
    CHECK(minimal_parent_sets(f.m, f.e1) == std::vector<ParentSet>{X3});
    CHECK_FALSE(check_cssi(f.m, f.e1_or_e2, X3));
    // A rectangle inside the lower quadrant admits {X3}, so the union is not canonical.
    CHECK_FALSE(is_canonical(f.m, f.e1_or_e2, ParentSet::of({0, 2}), CanonicalSearch::rectangles));
    CHECK_FALSE(is_canonical_auto(f.m, f.e1_or_e2, ParentSet::of({1, 2})));
}

TEST_CASE("canonicality on small regions") {
    const auto m = two_by_two({0.2, 0.7, 0.2, 0.7});
    const auto all = GridRegion::full(m);
    CHECK(is_canonical(m, all, X1));
    CHECK_FALSE(is_canonical(m, all, ParentSet::full(2)));  // not minimal
    CHECK(is_canonical(m, cells({3}), ParentSet{}));
    // A set that passes on a region but is larger than needed on a product inside it.
    const auto flat = two_by_two({0.3, 0.3, 0.3, 0.6});
    CHECK(check_cssi(flat, cells({0, 1}), ParentSet{}));
    CHECK(is_canonical(flat, cells({0, 1}), ParentSet{}));
    CHECK_THROWS_AS(is_canonical(m, GridRegion{}, X1), EmptyRegion);
    const auto big = fixtures::product_example(10);
    CHECK_THROWS_AS(is_canonical(big, GridRegion::full(big), ParentSet::full(2)), RegionTooLarge);
}

TEST_CASE("decompositions of the diagonal-quadrant system") {
    const auto f = fixtures::non_convex_union(10);
    const GridRegion rest = GridRegion::full(f.m) - f.e1_or_e2;
    const GridDecomposition good{{rest, ParentSet::full(3)}, {f.e1, X3}, {f.e2, X3}};
    CHECK(verify_decomposition(f.m, good));
    CHECK(piv_equivalence(f.m, good));
    const GridDecomposition swapped{{rest, ParentSet::full(3)}, {f.e1, X1}, {f.e2, X3}};
    CHECK_FALSE(verify_decomposition(f.m, swapped));
    CHECK_FALSE(piv_equivalence(f.m, swapped));
    const GridDecomposition not_minimal{{rest, ParentSet::full(3)}, {f.e1, ParentSet::of({0, 2})}, {f.e2, X3}};
    CHECK_FALSE(verify_decomposition(f.m, not_minimal));
    const GridDecomposition overlap{{GridRegion::full(f.m), ParentSet::full(3)}, {f.e1, X3}};
    CHECK_THROWS_AS(require_partition(f.m, overlap), NotAPartition);
    const GridDecomposition gap{{rest, ParentSet::full(3)}, {f.e1, X3}};
    CHECK_THROWS_AS(verify_decomposition(f.m, gap), NotAPartition);
}

TEST_CASE("region-indexed CSI matches the group mixture") {
    const auto m = two_by_two({0.2, 0.7, 0.2, 0.9});
    CHECK(csi_given_region(m, cells({0, 2}), ParentSet{}));
    CHECK_FALSE(csi_given_region(m, cells({1, 3}), ParentSet{}));
    CHECK(csi_given_region(m, cells({1, 3}), X2));
    CHECK(csi_given_region(m, GridRegion{}, ParentSet{}));
}

TEST_CASE("coordinate-wise connectedness") {
    FiniteScm m({3, 3}, 1, std::vector<double>(9, 1.0 / 9.0), std::vector<double>(9, 1.0));
    const std::vector<int> none{0, 0};
    CHECK(coordinatewise_connected(m, GridRegion::full(m), ParentSet{}, none, X1, X2));
    CHECK_FALSE(coordinatewise_connected(m, cells({0, 8}), ParentSet{}, none, X1, X2));
    // Same x1 value links the two pieces.
    CHECK(coordinatewise_connected(m, cells({0, 6}), ParentSet{}, none, X1, X2));
    // L shape is one 4-connected component.
    CHECK(coordinatewise_connected(m, cells({0, 1, 2, 5}), ParentSet{}, none, X1, X2));
    // Slicing at x2 = 1 leaves cells 3 and 5; their projections on an empty t coincide.
    const std::vector<int> at1{0, 1};
    CHECK(coordinatewise_connected(m, cells({3, 5}), X2, at1, X1, ParentSet{}));
    CHECK_THROWS_AS(coordinatewise_connected(m, cells({0}), X2, at1, X1, ParentSet{}), EmptySlice);
    CHECK_THROWS_AS(coordinatewise_connected(m, cells({0}), ParentSet{}, none, X1, X1), PreconditionFailed);
}

TEST_CASE("intersection of parent sets") {
    // On the diagonal each of X1, X2 identifies the cell.
    const auto m = two_by_two({0.2, 0.5, 0.5, 0.9});
    const auto diag = cells({0, 3});
    CHECK(check_cssi(m, diag, X1));
    CHECK(check_cssi(m, diag, X2));
    CHECK_FALSE(intersection_precondition(m, diag, X1, X2));
    CHECK_FALSE(check_intersection_property(m, diag, X1, X2));
    // Same table on a connected region where both sets pass.
    const auto flat = two_by_two({0.4, 0.4, 0.4, 0.1});
    const auto l = cells({0, 1, 2});
    CHECK(intersection_precondition(flat, l, X1, X2));
    CHECK(check_intersection_property(flat, l, X1, X2));
    CHECK_THROWS_AS(check_intersection_property(m, GridRegion::full(m), ParentSet{}, X2), PreconditionFailed);
}

TEST_CASE("embedding context-specific and partial independences") {
    // At x2 = 0, Y ignores x1.
    const auto m = two_by_two({0.3, 0.3, 0.1, 0.8});
    const std::vector<int> x2_0{0, 0}, x2_1{0, 1};
    CHECK(embed_csi(m, X1, X2, x2_0) == cells({0, 1}));
    CHECK_THROWS_AS(embed_csi(m, X1, X2, x2_1), CsiDoesNotHold);
    const auto only_first = [](std::span<const int> v) { return v[0] == 0; };
    CHECK(embed_pci(m, X1, X2, x2_1, only_first) == cells({2}));
    const auto nothing = [](std::span<const int>) { return false; };
    CHECK_THROWS_AS(embed_pci(m, X1, X2, x2_0, nothing), PreconditionFailed);
    CHECK_THROWS_AS(embed_csi(m, X1, X1, x2_0), PreconditionFailed);
}

TEST_CASE("canonical decompositions agree") {
    const auto f = fixtures::two_canonical_cds(10);
    CHECK(verify_decomposition(f.m, f.cd1));
    CHECK(verify_decomposition(f.m, f.cd2));
    CHECK(check_canonical_cd_agreement(f.m, f.cd1, f.cd2));
    CHECK(check_canonical_cd_agreement(f.m, f.cd1, f.cd1));
    CHECK_FALSE(is_distinctive(f.cd1));
    const GridDecomposition merged{f.cd1[0], f.cd1[1], {f.cd1[2].region | f.cd1[3].region, f.cd1[2].parents}};
    CHECK(is_distinctive(merged));
}

TEST_CASE("errors for bad inputs") {
    FiniteScm wide(std::vector<int>(13, 1), 1, {1.0}, {1.0});
    CHECK_THROWS_AS(minimal_parent_sets(wide, GridRegion::full(wide)), TooManyParents);
    const auto m = two_by_two({0.2, 0.7, 0.2, 0.7});
    CHECK_THROWS_AS(check_cssi(m, GridRegion{}, X1), EmptyRegion);
}

TEST_CASE("planted systems honour their plantings") {
    CounterRng rng(12);
    const std::vector<int> sizes{3, 4, 2};
    FiniteScm probe(sizes, 2, std::vector<double>(24, 1.0 / 24), std::vector<double>(48, 0.5));
    const auto box = GridRegion::box(probe, std::vector<int>{0, 1, 0}, std::vector<int>{1, 3, 1});
    const auto m = plant_cssi(sizes, 3, {Planting{box.cells(), {ParentSet::of({1})}}}, rng);
    CHECK(check_cssi(m, box, ParentSet::of({1})));
    CHECK_FALSE(check_cssi(m, GridRegion::full(m), ParentSet::of({1})));
    double total = 0.0;
    for (std::size_t c = 0; c < m.num_cells(); ++c) total += m.px(c);
    CHECK(total == doctest::Approx(1.0));
}

}
