#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cssi/ncd.hpp"
#include "cssi/parent_set.hpp"
#include "cssi/scm.hpp"

namespace cssi {

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::size_t total() const { return tp + fp + fn + tn; }
};

/// Predicted set {j : scores[j] >= tau} against `truth`, per coordinate.
Confusion confusion(std::span<const double> scores, ParentSet truth, double tau);

struct ScoredPrediction {
    std::vector<double> scores;
    ParentSet truth;
};

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

/// Points by descending threshold, from (0, 0) to (1, 1).
struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Confusion counts pooled over every (row, coordinate) at threshold tau.
Confusion pooled_confusion(const std::vector<ScoredPrediction>& preds, double tau);

/// Exact pooled ROC: thresholds are every distinct score plus 0 and a value
/// above both 1 and the largest score. AUC by the trapezoid rule. A rate with
/// an empty denominator is reported as 0. Throws EmptyInput, ShapeMismatch.
RocCurve roc(const std::vector<ScoredPrediction>& preds);

/// Scores paired with the ground-truth masks of `ds` for target `target`.
std::vector<ScoredPrediction> score_dataset(const NcdModel& model, const LabeledDataset& ds, int target);

/// Truth masks as 0/1 scores (the best possible predictor).
std::vector<ScoredPrediction> oracle_scores(const LabeledDataset& ds, int target);

/// Scores reassigned to rows by a seeded permutation: a null with the
/// model's score distribution but no relation to the rows.
std::vector<ScoredPrediction> shuffled_scores(std::vector<ScoredPrediction> preds, std::uint64_t seed);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::size_t n = 0;
};
Summary summarize(std::span<const double> values);

/// A plane through parent space: coordinates dim_x and dim_y vary over
/// [lo, hi], the others stay at `base`.
struct Plane {
    int dim_x = 0;
    int dim_y = 1;
    double x_lo = -1.0, x_hi = 1.0;
    double y_lo = -1.0, y_hi = 1.0;
    std::vector<double> base;
};

/// Labels at the centres of a resolution x resolution lattice, row-major
/// with x varying fastest.
struct BoundaryGrid {
    Plane plane;
    int resolution = 0;
    int num_vars = 0;
    std::vector<int> labels;

    std::vector<double> point(int ix, int iy) const;
};

/// Parent-space point at lattice cell (ix, iy).
std::vector<double> plane_point(const Plane& plane, int resolution, int ix, int iy);

/// Hard gates 1{pi >= 0.5} encoded with pattern_label.
BoundaryGrid boundary_grid(const NcdModel& model, const Plane& plane, int resolution);

/// Ground-truth parents of the decomposition encoded the same way.
BoundaryGrid truth_grid(const ContextualDecomposition& cd, int num_vars, const Plane& plane, int resolution);

/// Share of cells where both grids agree, over cells with mask true (all
/// cells if the mask is empty). Throws ShapeMismatch, EmptyInput.
double grid_agreement(const BoundaryGrid& a, const BoundaryGrid& b, const std::vector<char>& mask = {});

}  // namespace cssi
