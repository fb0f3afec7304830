#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cssi/finite_scm.hpp"
#include "cssi/oracle.hpp"

namespace cssi {

/// Outcome of one randomized property campaign.
struct CampaignReport {
    std::string name;
    std::size_t instances = 0;
    std::size_t violations = 0;
    /// Instances where the property's precondition did not hold.
    std::size_t skipped = 0;
    std::size_t fixtures = 0;
    std::size_t fixture_failures = 0;
    /// First few violation descriptions.
    std::vector<std::string> messages;

    bool passed() const { return violations == 0 && fixture_failures == 0; }
    nlohmann::json to_json() const;
};

const std::vector<std::string>& campaign_names();

/// Runs `n` planted instances of the named campaign plus its fixed fixtures.
/// Instance i draws from CounterRng(seed, campaign tag).substream(i), so the
/// report does not depend on `threads`. Throws UnknownCampaign.
CampaignReport run_campaign(const std::string& name, std::uint64_t seed, std::size_t n, unsigned threads = 1);

/// Fixed systems used by the campaigns and the tests.
namespace fixtures {

/// Discretized non-uniqueness example (three parents, union of the two
/// diagonal quadrants), with that union.
struct NonConvexUnion {
    FiniteScm m;
    GridRegion e1_or_e2;
    GridRegion e1, e2;
};
NonConvexUnion non_convex_union(int bins = 10);

/// Discretized canonical-decomposition example with its two canonical CDs
/// (regions split at x2 = 0.4 for the second one).
struct TwoCanonicalCds {
    FiniteScm m;
    GridDecomposition cd1, cd2;
};
TwoCanonicalCds two_canonical_cds(int bins = 10);

/// Discretized product example, y_bins on [-1, 2].
FiniteScm product_example(int bins = 10, int y_bins = 50);

}  // namespace fixtures

/// Cells of a region together with the sets whose CSSI is planted on it.
struct Planting {
    std::vector<std::size_t> cells;
    std::vector<ParentSet> sets;
};

/// Random positive system satisfying every planting: cells of one planting
/// that agree on any of its sets share a distribution (transitive closure);
/// every other cell draws its own. Plantings must not overlap. The parent
/// table is random as well.
FiniteScm plant_cssi(const std::vector<int>& sizes, int y_size, const std::vector<Planting>& plantings, CounterRng& rng);

}  // namespace cssi
