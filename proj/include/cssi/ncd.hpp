#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "cssi/dataset.hpp"
#include "cssi/layout.hpp"
#include "cssi/nn/mlp.hpp"
#include "cssi/scm.hpp"

namespace cssi {

struct NcdHyper {
    int n_mc = 5;
    double tau_start = 1.0;
    double tau_end = 0.3;
    double lr = 1e-2;
    double weight_decay = 1e-5;
    int batch_size = 1000;
    int epochs = 100;
    double l1_lambda = 0.0;
    std::vector<int> hidden{128, 128, 128};
    nn::Activation activation = nn::Activation::relu;
    std::uint64_t seed = 0;

    /// Exponential anneal from tau_start to tau_end over the epochs, floored at tau_end.
    double temperature(int epoch) const;

    nlohmann::json to_json() const;
    /// Keys missing from `j` keep their defaults; unknown keys are rejected.
    static NcdHyper from_json(const nlohmann::json& j);
    static NcdHyper from_json(const nlohmann::json& j, NcdHyper defaults);
};

/// Where the gate values come from during training.
enum class GateSource {
    learned,   // z ~ binary concrete(g_phi(x))
    oracle,    // z = ground-truth mask of the row, hard
    all_ones,  // z = 1, plain conditional density model
};

/// Gate network g_phi over the parent variables and masked density head
/// f_theta(x * z, z) -> (mean, log_var) per target coordinate.
///
/// Gates act on variables; a variable of width w masks w coordinates. Inputs
/// and targets are standardized with statistics fixed at fit time.
class NcdModel {
public:
    NcdModel(VariableLayout layout, int y_dim, NcdHyper hyper);

    const VariableLayout& layout() const { return layout_; }
    int num_vars() const { return layout_.count(); }
    int x_dim() const { return layout_.total_dim(); }
    int y_dim() const { return y_dim_; }
    const NcdHyper& hyper() const { return hyper_; }
    NcdHyper& hyper() { return hyper_; }

    nn::Mlp& f_theta() { return f_; }
    const nn::Mlp& f_theta() const { return f_; }
    nn::Mlp& g_phi() { return g_; }
    const nn::Mlp& g_phi() const { return g_; }

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;

    void set_standardization(std::vector<double> x_mean, std::vector<double> x_std, std::vector<double> y_mean,
                             std::vector<double> y_std);
    /// Fits the statistics on the rows of `ds` for target `target`.
    void fit_standardization(const LabeledDataset& ds, int target);
    nn::Matrix standardize_x(const nn::Matrix& x) const;
    nn::Matrix standardize_y(const nn::Matrix& y) const;
    /// Sum of log(y_std): converts standardized log-likelihoods to data units.
    double log_y_scale() const;

    /// sigma(g_phi(x)) for each row of raw x (n x D) -> n x d.
    nn::Matrix parent_scores(const nn::Matrix& x_raw) const;
    /// f_theta(build_masked_input(x, z)) on raw x rows -> n x 2m (means, then log variances).
    nn::Matrix density_head(const nn::Matrix& x_raw, const nn::Matrix& z) const;

    nlohmann::json manifest() const;
    void save(const std::filesystem::path& bin_path, const std::filesystem::path& manifest_path) const;
    static NcdModel load(const std::filesystem::path& bin_path, const std::filesystem::path& manifest_path);

    const std::vector<double>& x_mean() const { return x_mean_; }
    const std::vector<double>& x_std() const { return x_std_; }
    const std::vector<double>& y_mean() const { return y_mean_; }
    const std::vector<double>& y_std() const { return y_std_; }

private:
    VariableLayout layout_;
    int y_dim_;
    NcdHyper hyper_;
    nn::Mlp f_;
    nn::Mlp g_;
    std::vector<double> x_mean_, x_std_, y_mean_, y_std_;
};

/// (x1 z1, ..., xD zD, z_1..z_d) with z expanded over each variable's width.
std::vector<double> build_masked_input(std::span<const double> x, std::span<const double> z, const VariableLayout& layout);

/// Minibatch in matrix form; y already sliced to one target.
struct Batch {
    nn::Matrix x;      // n x D, raw units
    nn::Matrix y;      // n x m, raw units
    nn::Matrix masks;  // n x d, ground-truth 0/1 (for oracle gates and evaluation)
};

Batch make_batch(const LabeledDataset& ds, int target, std::span<const std::size_t> rows);
Batch make_batch(const LabeledDataset& ds, int target);

/// Logistic draws for the relaxation, one per (row, draw, variable), row-major
/// with the draws of a row adjacent.
nn::Matrix draw_logistic_noise(std::size_t rows, int n_mc, int d, CounterRng& rng);

struct LossTerms {
    nn::Var loss;       // -sum log mean_z p(y | x, z) + lambda * sum |pi|
    nn::Var nll_sum;    // first term, standardized units
    nn::Var pi;         // n x d gate probabilities
};

/// Records the objective for a batch on `tape`. `noise` comes from
/// draw_logistic_noise (ignored unless gates are learned).
LossTerms ncd_loss(nn::Tape& tape, NcdModel& model, const Batch& batch, const nn::Matrix& noise, double tau,
                   GateSource gates = GateSource::learned);

/// Scalar value of the objective for a batch (convenience wrapper).
double ncd_loss_value(NcdModel& model, const Batch& batch, const nn::Matrix& noise, double tau,
                      GateSource gates = GateSource::learned);

/// -log sum_z p(y|x,z) p(z|x) over all 2^d hard patterns, per row, data units.
std::vector<double> exact_nll(const NcdModel& model, const Batch& batch);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_nll = 0.0;
    double val_nll = 0.0;
    double temperature = 0.0;
    std::vector<double> mean_pi;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
};

struct TrainOptions {
    int target = 0;
    GateSource gates = GateSource::learned;
    /// Called after every completed epoch (1-based).
    std::function<void(int epoch, const NcdModel&)> on_epoch;
};

/// Fresh model for `ds`: initialised from hyper.seed, standardization fitted on `ds`.
NcdModel make_model(const LabeledDataset& ds, int target, const NcdHyper& hyper);

/// Minibatch Adam on the objective. Deterministic given hyper.seed.
/// Throws NonFinite with epoch/batch context on divergence.
TrainingHistory train(NcdModel& model, const LabeledDataset& train_ds, const LabeledDataset& val_ds,
                      const TrainOptions& options = TrainOptions{});

/// Mean per-row NLL (data units) of the MC objective under a fixed noise stream.
double evaluate_nll(NcdModel& model, const LabeledDataset& ds, const TrainOptions& options, double tau,
                    std::uint64_t noise_seed);

std::vector<double> infer_parent_scores(const NcdModel& model, std::span<const double> x);

/// Pattern integer with z_1 as the most significant bit.
int pattern_label(ParentSet pattern, int d);

/// Binarizes pi at `threshold` per sample and groups samples by pattern.
/// The full pattern (if present) becomes E_0; the other patterns follow in
/// order of decreasing frequency. Each region is an explicit point set.
ContextualDecomposition extract_decomposition(const NcdModel& model, const std::vector<std::vector<double>>& samples,
                                              double threshold);

}  // namespace cssi
