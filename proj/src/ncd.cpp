#include "cssi/ncd.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cssi/error.hpp"
#include "cssi/nn/adam.hpp"
#include "cssi/nn/checkpoint.hpp"
#include "cssi/nn/ops.hpp"

namespace cssi {

using nn::Matrix;
using nn::Var;

namespace {

constexpr std::uint64_t kInitStream = 0x1A1;
constexpr std::uint64_t kShuffleStream = 0x5F1;
constexpr std::uint64_t kNoiseStream = 0xA015E;
constexpr std::uint64_t kValNoiseSeed = 0x7A1;

Matrix repeat_rows(const Matrix& m, int times) {
    Matrix out(m.rows() * times, m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (int i = 0; i < times; ++i) out.row(r * times + i) = m.row(r);
    return out;
}

Matrix expand_mask(const Matrix& z, const VariableLayout& layout) {
    const auto owners = layout.owners();
    Matrix out(z.rows(), static_cast<Eigen::Index>(owners.size()));
    for (std::size_t c = 0; c < owners.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = z.col(owners[c]);
    return out;
}

void require_finite(double v, const std::string& where) {
    if (!std::isfinite(v)) throw NonFinite("objective became non-finite at " + where);
}

}  // namespace

double NcdHyper::temperature(int epoch) const {
    if (epochs <= 1) return tau_start;
    const double frac = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
    return std::max(tau_end, tau_start * std::pow(tau_end / tau_start, frac));
}

nlohmann::json NcdHyper::to_json() const {
    return {{"n_mc", n_mc},
            {"tau_start", tau_start},
            {"tau_end", tau_end},
            {"lr", lr},
            {"weight_decay", weight_decay},
            {"batch_size", batch_size},
            {"epochs", epochs},
            {"l1_lambda", l1_lambda},
            {"hidden", hidden},
            {"activation", nn::to_string(activation)},
            {"seed", seed}};
}

NcdHyper NcdHyper::from_json(const nlohmann::json& j) { return from_json(j, NcdHyper{}); }

NcdHyper NcdHyper::from_json(const nlohmann::json& j, NcdHyper h) {
    static const char* known[] = {"n_mc", "tau_start", "tau_end", "lr", "weight_decay", "batch_size",
                                  "epochs", "l1_lambda", "hidden", "activation", "seed", "checkpoint_every"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) == std::end(known))
            throw InvalidConfig("model." + it.key() + ": unknown key");
    try {
        if (j.contains("n_mc")) h.n_mc = j.at("n_mc").get<int>();
        if (j.contains("tau_start")) h.tau_start = j.at("tau_start").get<double>();
        if (j.contains("tau_end")) h.tau_end = j.at("tau_end").get<double>();
        if (j.contains("lr")) h.lr = j.at("lr").get<double>();
        if (j.contains("weight_decay")) h.weight_decay = j.at("weight_decay").get<double>();
        if (j.contains("batch_size")) h.batch_size = j.at("batch_size").get<int>();
        if (j.contains("epochs")) h.epochs = j.at("epochs").get<int>();
        if (j.contains("l1_lambda")) h.l1_lambda = j.at("l1_lambda").get<double>();
        if (j.contains("hidden")) h.hidden = j.at("hidden").get<std::vector<int>>();
        if (j.contains("activation")) h.activation = nn::activation_from_string(j.at("activation").get<std::string>());
        if (j.contains("seed")) h.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig(std::string("model: ") + e.what());
    }
    if (h.n_mc < 1) throw InvalidConfig("model.n_mc: must be at least 1");
    if (!(h.tau_start > 0.0) || !(h.tau_end > 0.0)) throw InvalidConfig("model.tau_start/tau_end: must be positive");
    if (h.batch_size < 1) throw InvalidConfig("model.batch_size: must be positive");
    if (h.epochs < 0) throw InvalidConfig("model.epochs: must be non-negative");
    if (h.l1_lambda < 0.0) throw InvalidConfig("model.l1_lambda: must be non-negative");
    if (!(h.lr > 0.0)) throw InvalidConfig("model.lr: must be positive");
    for (int w : h.hidden)
        if (w < 1) throw InvalidConfig("model.hidden: widths must be positive");
    return h;
}

NcdModel::NcdModel(VariableLayout layout, int y_dim, NcdHyper hyper)
    : layout_(std::move(layout)), y_dim_(y_dim), hyper_(std::move(hyper)) {
    if (layout_.count() < 1) throw ShapeMismatch("model needs at least one parent variable");
    if (y_dim_ < 1) throw ShapeMismatch("model needs a target");
    std::vector<int> fw{x_dim() + num_vars()};
    fw.insert(fw.end(), hyper_.hidden.begin(), hyper_.hidden.end());
    fw.push_back(2 * y_dim_);
    std::vector<int> gw{x_dim()};
    gw.insert(gw.end(), hyper_.hidden.begin(), hyper_.hidden.end());
    gw.push_back(num_vars());
    f_ = nn::Mlp("f_theta", fw, hyper_.activation);
    g_ = nn::Mlp("g_phi", gw, hyper_.activation);

    CounterRng rng(hyper_.seed, kInitStream);
    CounterRng rf = rng.substream(1);
    CounterRng rg = rng.substream(2);
    f_.init(rf);
    g_.init(rg);
    g_.zero_output_layer();

    x_mean_.assign(static_cast<std::size_t>(x_dim()), 0.0);
    x_std_.assign(static_cast<std::size_t>(x_dim()), 1.0);
    y_mean_.assign(static_cast<std::size_t>(y_dim_), 0.0);
    y_std_.assign(static_cast<std::size_t>(y_dim_), 1.0);
}

std::vector<nn::Parameter*> NcdModel::parameters() {
    auto p = f_.parameters();
    const auto q = g_.parameters();
    p.insert(p.end(), q.begin(), q.end());
    return p;
}

std::vector<const nn::Parameter*> NcdModel::parameters() const {
    auto p = f_.parameters();
    const auto q = g_.parameters();
    p.insert(p.end(), q.begin(), q.end());
    return p;
}

void NcdModel::set_standardization(std::vector<double> x_mean, std::vector<double> x_std, std::vector<double> y_mean,
                                   std::vector<double> y_std) {
    if (x_mean.size() != static_cast<std::size_t>(x_dim()) || x_std.size() != x_mean.size() ||
        y_mean.size() != static_cast<std::size_t>(y_dim_) || y_std.size() != y_mean.size())
        throw ShapeMismatch("standardization statistics have the wrong length");
    x_mean_ = std::move(x_mean);
    x_std_ = std::move(x_std);
    y_mean_ = std::move(y_mean);
    y_std_ = std::move(y_std);
}

void NcdModel::fit_standardization(const LabeledDataset& ds, int target) {
    if (ds.empty()) throw EmptyInput("cannot fit standardization on an empty dataset");
    const Batch b = make_batch(ds, target);
    auto stats = [](const Matrix& m, std::vector<double>& mean, std::vector<double>& sd) {
        mean.assign(static_cast<std::size_t>(m.cols()), 0.0);
        sd.assign(static_cast<std::size_t>(m.cols()), 1.0);
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double mu = m.col(c).mean();
            const double var = (m.col(c).array() - mu).square().mean();
            mean[static_cast<std::size_t>(c)] = mu;
            sd[static_cast<std::size_t>(c)] = var > 1e-24 ? std::sqrt(var) : 1.0;
        }
    };
    stats(b.x, x_mean_, x_std_);
    stats(b.y, y_mean_, y_std_);
}

Matrix NcdModel::standardize_x(const Matrix& x) const {
    if (x.cols() != x_dim()) throw ShapeMismatch("input width does not match the model");
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        out.col(c) = (x.col(c).array() - x_mean_[static_cast<std::size_t>(c)]) / x_std_[static_cast<std::size_t>(c)];
    return out;
}

Matrix NcdModel::standardize_y(const Matrix& y) const {
    if (y.cols() != y_dim_) throw ShapeMismatch("target width does not match the model");
    Matrix out(y.rows(), y.cols());
    for (Eigen::Index c = 0; c < y.cols(); ++c)
        out.col(c) = (y.col(c).array() - y_mean_[static_cast<std::size_t>(c)]) / y_std_[static_cast<std::size_t>(c)];
    return out;
}

double NcdModel::log_y_scale() const {
    double s = 0.0;
    for (double v : y_std_) s += std::log(v);
    return s;
}

Matrix NcdModel::parent_scores(const Matrix& x_raw) const {
    const Matrix logits = g_.forward(standardize_x(x_raw));
    return logits.unaryExpr([](double v) { return nn::sigmoid(v); });
}

Matrix NcdModel::density_head(const Matrix& x_raw, const Matrix& z) const {
    if (z.rows() != x_raw.rows() || z.cols() != num_vars()) throw ShapeMismatch("gate matrix shape");
    const Matrix xs = standardize_x(x_raw);
    Matrix in(xs.rows(), x_dim() + num_vars());
    in << xs.cwiseProduct(expand_mask(z, layout_)), z;
    Matrix out = f_.forward(in);
    out.rightCols(y_dim_) = out.rightCols(y_dim_).cwiseMax(nn::kLogVarMin).cwiseMin(nn::kLogVarMax);
    return out;
}

nlohmann::json NcdModel::manifest() const {
    return {{"kind", "ncd"},      {"x_widths", layout_.widths}, {"y_dim", y_dim_}, {"hyper", hyper_.to_json()},
            {"x_mean", x_mean_}, {"x_std", x_std_},            {"y_mean", y_mean_}, {"y_std", y_std_}};
}

void NcdModel::save(const std::filesystem::path& bin_path, const std::filesystem::path& manifest_path) const {
    nn::save_parameters(parameters(), bin_path, manifest_path, manifest());
}

NcdModel NcdModel::load(const std::filesystem::path& bin_path, const std::filesystem::path& manifest_path) {
    const auto m = nn::read_manifest(manifest_path);
    try {
        NcdModel model(VariableLayout{m.at("x_widths").get<std::vector<int>>()}, m.at("y_dim").get<int>(),
                       NcdHyper::from_json(m.at("hyper")));
        model.set_standardization(m.at("x_mean").get<std::vector<double>>(), m.at("x_std").get<std::vector<double>>(),
                                  m.at("y_mean").get<std::vector<double>>(), m.at("y_std").get<std::vector<double>>());
        nn::load_parameters(model.parameters(), bin_path, manifest_path);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed model manifest " + manifest_path.string() + ": " + e.what());
    }
}

std::vector<double> build_masked_input(std::span<const double> x, std::span<const double> z, const VariableLayout& layout) {
    if (static_cast<int>(x.size()) != layout.total_dim() || static_cast<int>(z.size()) != layout.count())
        throw ShapeMismatch("build_masked_input: x or z has the wrong length");
    std::vector<double> out(x.size() + z.size());
    const auto owners = layout.owners();
    for (std::size_t c = 0; c < x.size(); ++c) out[c] = x[c] * z[static_cast<std::size_t>(owners[c])];
    std::copy(z.begin(), z.end(), out.begin() + static_cast<std::ptrdiff_t>(x.size()));
    return out;
}

Batch make_batch(const LabeledDataset& ds, int target, std::span<const std::size_t> rows) {
    if (target < 0 || target >= ds.num_targets()) throw ShapeMismatch("target index out of range");
    const int D = ds.x_layout.total_dim();
    const int d = ds.x_layout.count();
    const int off = ds.target_offset(target);
    const int m = ds.target_widths[static_cast<std::size_t>(target)];
    Batch b;
    b.x.resize(static_cast<Eigen::Index>(rows.size()), D);
    b.y.resize(static_cast<Eigen::Index>(rows.size()), m);
    b.masks.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const DatasetRow& r = ds.rows[rows[i]];
        const auto ei = static_cast<Eigen::Index>(i);
        for (int c = 0; c < D; ++c) b.x(ei, c) = r.x[static_cast<std::size_t>(c)];
        for (int c = 0; c < m; ++c) b.y(ei, c) = r.y[static_cast<std::size_t>(off + c)];
        const ParentSet mask = r.masks[static_cast<std::size_t>(target)];
        for (int j = 0; j < d; ++j) b.masks(ei, j) = mask.contains(j) ? 1.0 : 0.0;
    }
    return b;
}

Batch make_batch(const LabeledDataset& ds, int target) {
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return make_batch(ds, target, rows);
}

Matrix draw_logistic_noise(std::size_t rows, int n_mc, int d, CounterRng& rng) {
    Matrix noise(static_cast<Eigen::Index>(rows) * n_mc, d);
    for (Eigen::Index r = 0; r < noise.rows(); ++r)
        for (Eigen::Index c = 0; c < d; ++c) noise(r, c) = rng.logistic();
    return noise;
}

LossTerms ncd_loss(nn::Tape& t, NcdModel& model, const Batch& batch, const Matrix& noise, double tau, GateSource gates) {
    const auto n = batch.x.rows();
    if (n == 0) throw EmptyInput("ncd_loss on an empty batch");
    if (!(tau > 0.0)) throw InvalidConfig("temperature must be positive");
    const int d = model.num_vars();
    const int draws = gates == GateSource::learned ? model.hyper().n_mc : 1;

    const Matrix xs = model.standardize_x(batch.x);
    const Matrix ys = model.standardize_y(batch.y);

    Var pi;
    Var z;
    if (gates == GateSource::learned) {
        if (noise.rows() != n * draws || noise.cols() != d) throw ShapeMismatch("relaxation noise has the wrong shape");
        const Var logits = model.g_phi().forward(t, t.constant(xs));
        pi = nn::sigmoid(t, logits);
        z = nn::binary_concrete(t, nn::repeat_rows(t, logits, draws), noise, tau);
    } else {
        const Matrix hard = gates == GateSource::oracle ? batch.masks : Matrix::Ones(n, d);
        if (hard.rows() != n || hard.cols() != d) throw ShapeMismatch("oracle masks have the wrong shape");
        pi = t.constant(hard);
        z = t.constant(hard);
    }

    const Var xr = t.constant(repeat_rows(xs, draws));
    const Var zx = nn::expand_cols(t, z, model.layout().widths);
    const Var input = nn::concat_cols(t, nn::mul(t, xr, zx), z);
    const Var out = model.f_theta().forward(t, input);
    const int m = model.y_dim();
    const Var mean = nn::slice_cols(t, out, 0, m);
    const Var log_var = nn::clamp(t, nn::slice_cols(t, out, m, m), nn::kLogVarMin, nn::kLogVarMax);
    const Var ll = nn::row_sum(t, nn::gaussian_loglik(t, t.constant(repeat_rows(ys, draws)), mean, log_var));
    const Var per_row = nn::group_log_mean_exp(t, ll, draws);
    const Var nll_sum = nn::scale(t, nn::sum(t, per_row), -1.0);

    Var loss = nll_sum;
    if (gates == GateSource::learned && model.hyper().l1_lambda > 0.0)
        loss = nn::add(t, nll_sum, nn::scale(t, nn::sum(t, pi), model.hyper().l1_lambda));
    return LossTerms{loss, nll_sum, pi};
}

double ncd_loss_value(NcdModel& model, const Batch& batch, const Matrix& noise, double tau, GateSource gates) {
    nn::Tape t;
    return t.scalar(ncd_loss(t, model, batch, noise, tau, gates).loss);
}

std::vector<double> exact_nll(const NcdModel& model, const Batch& batch) {
    const int d = model.num_vars();
    if (d > 12) throw TooManyParents("exact enumeration supports at most 12 variables");
    const auto n = batch.x.rows();
    const Matrix pi = model.parent_scores(batch.x);
    const Matrix ys = model.standardize_y(batch.y);
    const int m = model.y_dim();
    const int patterns = 1 << d;
    Matrix terms(n, patterns);
    for (int p = 0; p < patterns; ++p) {
        Matrix z(n, d);
        for (int j = 0; j < d; ++j) z.col(j).setConstant(((p >> j) & 1) ? 1.0 : 0.0);
        const Matrix out = model.density_head(batch.x, z);
        for (Eigen::Index r = 0; r < n; ++r) {
            double lp = 0.0;
            for (int j = 0; j < d; ++j) lp += ((p >> j) & 1) ? std::log(pi(r, j)) : std::log1p(-pi(r, j));
            for (int c = 0; c < m; ++c) lp += nn::gaussian_loglik(ys(r, c), out(r, c), out(r, m + c));
            terms(r, p) = lp;
        }
    }
    std::vector<double> nll(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        const double mx = terms.row(r).maxCoeff();
        const double lse = mx + std::log((terms.row(r).array() - mx).exp().sum());
        nll[static_cast<std::size_t>(r)] = -lse + model.log_y_scale();
    }
    return nll;
}

NcdModel make_model(const LabeledDataset& ds, int target, const NcdHyper& hyper) {
    if (target < 0 || target >= ds.num_targets()) throw ShapeMismatch("target index out of range");
    NcdModel model(ds.x_layout, ds.target_widths[static_cast<std::size_t>(target)], hyper);
    model.fit_standardization(ds, target);
    return model;
}

double evaluate_nll(NcdModel& model, const LabeledDataset& ds, const TrainOptions& options, double tau,
                    std::uint64_t noise_seed) {
    if (ds.empty()) throw EmptyInput("evaluate_nll on an empty dataset");
    const std::size_t bs = static_cast<std::size_t>(model.hyper().batch_size);
    const CounterRng root(noise_seed, kNoiseStream);
    double total = 0.0;
    std::vector<std::size_t> rows;
    for (std::size_t start = 0, b = 0; start < ds.size(); start += bs, ++b) {
        rows.resize(std::min(bs, ds.size() - start));
        std::iota(rows.begin(), rows.end(), start);
        const Batch batch = make_batch(ds, options.target, rows);
        CounterRng rng = root.substream(b);
        const Matrix noise = draw_logistic_noise(rows.size(), model.hyper().n_mc, model.num_vars(), rng);
        nn::Tape t;
        total += t.scalar(ncd_loss(t, model, batch, noise, tau, options.gates).nll_sum);
    }
    return total / static_cast<double>(ds.size()) + model.log_y_scale();
}

TrainingHistory train(NcdModel& model, const LabeledDataset& train_ds, const LabeledDataset& val_ds,
                      const TrainOptions& options) {
    if (train_ds.empty()) throw EmptyInput("training set is empty");
    if (val_ds.empty()) throw EmptyInput("validation set is empty");
    const NcdHyper& h = model.hyper();
    nn::Adam adam(model.parameters(), nn::AdamConfig{h.lr, 0.9, 0.999, 1e-8, h.weight_decay});
    TrainingHistory history;
    const std::size_t n = train_ds.size();
    const std::size_t bs = static_cast<std::size_t>(h.batch_size);
    const int d = model.num_vars();
    const CounterRng shuffle_root(h.seed, kShuffleStream);
    const CounterRng noise_root(h.seed, kNoiseStream);

    std::vector<std::size_t> order(n);
    for (int epoch = 0; epoch < h.epochs; ++epoch) {
        const double tau = h.temperature(epoch);
        std::iota(order.begin(), order.end(), std::size_t{0});
        CounterRng shuffle_rng = shuffle_root.substream(static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        const CounterRng epoch_noise = noise_root.substream(static_cast<std::uint64_t>(epoch));

        double nll_total = 0.0;
        for (std::size_t start = 0, b = 0; start < n; start += bs, ++b) {
            const std::span<const std::size_t> rows(order.data() + start, std::min(bs, n - start));
            const Batch batch = make_batch(train_ds, options.target, rows);
            CounterRng rng = epoch_noise.substream(b);
            const Matrix noise = options.gates == GateSource::learned ? draw_logistic_noise(rows.size(), h.n_mc, d, rng) : Matrix();
            nn::Tape t;
            const LossTerms terms = ncd_loss(t, model, batch, noise, tau, options.gates);
            const double value = t.scalar(terms.loss);
            require_finite(value, "epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(b + 1));
            nll_total += t.scalar(terms.nll_sum);
            adam.zero_grad();
            t.backward(terms.loss);
            adam.step();
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.temperature = tau;
        rec.train_nll = nll_total / static_cast<double>(n) + model.log_y_scale();
        rec.val_nll = evaluate_nll(model, val_ds, options, tau, h.seed ^ kValNoiseSeed);
        require_finite(rec.val_nll, "epoch " + std::to_string(epoch + 1) + " validation");
        const Matrix pi = model.parent_scores(make_batch(val_ds, options.target).x);
        rec.mean_pi.resize(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) rec.mean_pi[static_cast<std::size_t>(j)] = pi.col(j).mean();
        history.epochs.push_back(std::move(rec));
        if (options.on_epoch) options.on_epoch(epoch + 1, model);
    }
    return history;
}

std::vector<double> infer_parent_scores(const NcdModel& model, std::span<const double> x) {
    Matrix in(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) in(0, static_cast<Eigen::Index>(i)) = x[i];
    const Matrix pi = model.parent_scores(in);
    return std::vector<double>(pi.data(), pi.data() + pi.size());
}

int pattern_label(ParentSet pattern, int d) {
    int label = 0;
    for (int j = 0; j < d; ++j)
        if (pattern.contains(j)) label |= 1 << (d - 1 - j);
    return label;
}

ContextualDecomposition extract_decomposition(const NcdModel& model, const std::vector<std::vector<double>>& samples,
                                              double threshold) {
    const int d = model.num_vars();
    std::map<std::uint64_t, std::vector<std::vector<double>>> groups;
    if (!samples.empty()) {
        Matrix x(static_cast<Eigen::Index>(samples.size()), model.x_dim());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (static_cast<int>(samples[i].size()) != model.x_dim()) throw ShapeMismatch("sample width");
            for (int c = 0; c < model.x_dim(); ++c) x(static_cast<Eigen::Index>(i), c) = samples[i][static_cast<std::size_t>(c)];
        }
        const Matrix pi = model.parent_scores(x);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            ParentSet p;
            for (int j = 0; j < d; ++j)
                if (pi(static_cast<Eigen::Index>(i), j) >= threshold) p = p.with(j);
            groups[p.bits()].push_back(samples[i]);
        }
    }
    const ParentSet full = ParentSet::full(d);
    std::vector<Region> regions;
    auto it_full = groups.find(full.bits());
    if (it_full != groups.end()) {
        regions.push_back(Region{ContextSet::explicit_grid(it_full->second), full});
        groups.erase(it_full);
    } else {
        regions.push_back(Region{ContextSet::remainder(), full});
    }
    std::vector<std::pair<std::uint64_t, std::vector<std::vector<double>>*>> rest;
    for (auto& [bits, members] : groups) rest.emplace_back(bits, &members);
    std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.second->size() > b.second->size(); });
    for (auto& [bits, members] : rest) regions.push_back(Region{ContextSet::explicit_grid(*members), ParentSet(bits)});
    return ContextualDecomposition(d, std::move(regions));
}

}  // namespace cssi
