#include "cssi/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cssi/error.hpp"

namespace cssi {

Confusion confusion(std::span<const double> scores, ParentSet truth, double tau) {
    Confusion c;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        const bool predicted = scores[j] >= tau;
        const bool actual = truth.contains(static_cast<int>(j));
        if (predicted && actual) ++c.tp;
        else if (predicted) ++c.fp;
        else if (actual) ++c.fn;
        else ++c.tn;
    }
    return c;
}

Confusion pooled_confusion(const std::vector<ScoredPrediction>& preds, double tau) {
    Confusion total;
    for (const auto& p : preds) {
        const Confusion c = confusion(p.scores, p.truth, tau);
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
        total.tn += c.tn;
    }
    return total;
}

RocCurve roc(const std::vector<ScoredPrediction>& preds) {
    if (preds.empty()) throw EmptyInput("roc needs at least one prediction");
    const std::size_t d = preds.front().scores.size();
    std::vector<std::pair<double, bool>> pairs;
    pairs.reserve(preds.size() * d);
    for (const auto& p : preds) {
        if (p.scores.size() != d) throw ShapeMismatch("predictions have different widths");
        for (std::size_t j = 0; j < d; ++j) pairs.emplace_back(p.scores[j], p.truth.contains(static_cast<int>(j)));
    }
    if (pairs.empty()) throw EmptyInput("roc needs at least one score");
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    double positives = 0.0;
    for (const auto& [s, t] : pairs) positives += t ? 1.0 : 0.0;
    const double negatives = static_cast<double>(pairs.size()) - positives;
    auto rate = [](double k, double n) { return n > 0.0 ? k / n : 0.0; };

    RocCurve curve;
    curve.points.push_back({std::max(1.0, pairs.front().first) + 1e-9, 0.0, 0.0});
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < pairs.size();) {
        const double s = pairs[i].first;
        for (; i < pairs.size() && pairs[i].first == s; ++i) (pairs[i].second ? tp : fp) += 1.0;
        curve.points.push_back({s, rate(fp, negatives), rate(tp, positives)});
    }
    if (curve.points.back().threshold > 0.0) {
        // Scores below zero never occur for gate outputs; count them anyway.
        double tp0 = 0.0, fp0 = 0.0;
        for (const auto& [s, t] : pairs)
            if (s >= 0.0) (t ? tp0 : fp0) += 1.0;
        curve.points.push_back({0.0, rate(fp0, negatives), rate(tp0, positives)});
    }
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        curve.auc += 0.5 * (b.fpr - a.fpr) * (a.tpr + b.tpr);
    }
    return curve;
}

std::vector<ScoredPrediction> score_dataset(const NcdModel& model, const LabeledDataset& ds, int target) {
    if (ds.empty()) throw EmptyInput("no rows to score");
    const Batch b = make_batch(ds, target);
    const nn::Matrix pi = model.parent_scores(b.x);
    std::vector<ScoredPrediction> out(ds.size());
    for (std::size_t r = 0; r < ds.size(); ++r) {
        out[r].scores.resize(static_cast<std::size_t>(pi.cols()));
        for (Eigen::Index j = 0; j < pi.cols(); ++j)
            out[r].scores[static_cast<std::size_t>(j)] = pi(static_cast<Eigen::Index>(r), j);
        out[r].truth = ds.rows[r].masks.at(static_cast<std::size_t>(target));
    }
    return out;
}

std::vector<ScoredPrediction> oracle_scores(const LabeledDataset& ds, int target) {
    const int d = ds.x_layout.count();
    std::vector<ScoredPrediction> out(ds.size());
    for (std::size_t r = 0; r < ds.size(); ++r) {
        out[r].truth = ds.rows[r].masks.at(static_cast<std::size_t>(target));
        out[r].scores.resize(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) out[r].scores[static_cast<std::size_t>(j)] = out[r].truth.contains(j) ? 1.0 : 0.0;
    }
    return out;
}

std::vector<ScoredPrediction> shuffled_scores(std::vector<ScoredPrediction> preds, std::uint64_t seed) {
    std::vector<std::vector<double>> scores;
    scores.reserve(preds.size());
    for (auto& p : preds) scores.push_back(std::move(p.scores));
    CounterRng rng(seed, 0x5C0E);
    rng.shuffle(std::span<std::vector<double>>(scores));
    for (std::size_t r = 0; r < preds.size(); ++r) preds[r].scores = std::move(scores[r]);
    return preds;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.n = values.size();
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n));
    return s;
}

std::vector<double> plane_point(const Plane& plane, int resolution, int ix, int iy) {
    std::vector<double> x = plane.base;
    const auto need = static_cast<std::size_t>(std::max(plane.dim_x, plane.dim_y) + 1);
    if (x.size() < need) x.resize(need, 0.0);
    const double fx = (ix + 0.5) / resolution, fy = (iy + 0.5) / resolution;
    x[static_cast<std::size_t>(plane.dim_x)] = plane.x_lo + (plane.x_hi - plane.x_lo) * fx;
    x[static_cast<std::size_t>(plane.dim_y)] = plane.y_lo + (plane.y_hi - plane.y_lo) * fy;
    return x;
}

std::vector<double> BoundaryGrid::point(int ix, int iy) const { return plane_point(plane, resolution, ix, iy); }

namespace {

void check_plane(const Plane& plane, int x_dim, int resolution) {
    if (resolution < 1) throw InvalidConfig("grid resolution must be at least 1");
    if (plane.dim_x < 0 || plane.dim_y < 0 || plane.dim_x >= x_dim || plane.dim_y >= x_dim || plane.dim_x == plane.dim_y)
        throw InvalidConfig("plane dimensions must be two distinct input coordinates");
    if (!plane.base.empty() && static_cast<int>(plane.base.size()) != x_dim)
        throw ShapeMismatch("plane base point has the wrong dimension");
}

}  // namespace

BoundaryGrid boundary_grid(const NcdModel& model, const Plane& plane, int resolution) {
    check_plane(plane, model.x_dim(), resolution);
    BoundaryGrid g{plane, resolution, model.num_vars(), {}};
    g.plane.base.resize(static_cast<std::size_t>(model.x_dim()), 0.0);
    const auto n = static_cast<Eigen::Index>(resolution) * resolution;
    nn::Matrix x(n, model.x_dim());
    for (int iy = 0; iy < resolution; ++iy)
        for (int ix = 0; ix < resolution; ++ix) {
            const auto p = g.point(ix, iy);
            for (int c = 0; c < model.x_dim(); ++c) x(static_cast<Eigen::Index>(iy) * resolution + ix, c) = p[static_cast<std::size_t>(c)];
        }
    const nn::Matrix pi = model.parent_scores(x);
    g.labels.resize(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        ParentSet z;
        for (int j = 0; j < model.num_vars(); ++j)
            if (pi(r, j) >= 0.5) z = z.with(j);
        g.labels[static_cast<std::size_t>(r)] = pattern_label(z, model.num_vars());
    }
    return g;
}

BoundaryGrid truth_grid(const ContextualDecomposition& cd, int num_vars, const Plane& plane, int resolution) {
    const int x_dim = plane.base.empty() ? std::max(plane.dim_x, plane.dim_y) + 1 : static_cast<int>(plane.base.size());
    check_plane(plane, x_dim, resolution);
    BoundaryGrid g{plane, resolution, num_vars, {}};
    g.plane.base.resize(static_cast<std::size_t>(x_dim), 0.0);
    for (int iy = 0; iy < resolution; ++iy)
        for (int ix = 0; ix < resolution; ++ix)
            g.labels.push_back(pattern_label(cd.ground_truth_parents(g.point(ix, iy)), num_vars));
    return g;
}

double grid_agreement(const BoundaryGrid& a, const BoundaryGrid& b, const std::vector<char>& mask) {
    if (a.labels.size() != b.labels.size()) throw ShapeMismatch("grids have different sizes");
    if (!mask.empty() && mask.size() != a.labels.size()) throw ShapeMismatch("mask does not match the grid");
    std::size_t agree = 0, counted = 0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        ++counted;
        agree += a.labels[i] == b.labels[i] ? 1 : 0;
    }
    if (counted == 0) throw EmptyInput("no grid cells selected");
    return static_cast<double>(agree) / static_cast<double>(counted);
}

}  // namespace cssi
