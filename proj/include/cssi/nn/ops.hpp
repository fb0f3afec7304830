#pragma once

#include <span>
#include <vector>

#include "cssi/nn/tape.hpp"
#include "cssi/rng.hpp"

namespace cssi::nn {

// Differentiable ops. Shapes are (rows = batch, cols = features) unless noted.

Var matmul(Tape& t, Var a, Var b);
/// a (n x m) + row (1 x m), broadcast over rows.
Var add_row(Tape& t, Var a, Var row);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
/// Element-wise product.
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var add_scalar(Tape& t, Var a, double c);
Var tanh(Tape& t, Var a);
Var relu(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var exp(Tape& t, Var a);
Var log(Tape& t, Var a);
Var square(Tape& t, Var a);
/// Sum of all entries (1 x 1).
Var sum(Tape& t, Var a);
/// Per-row sum (n x 1).
Var row_sum(Tape& t, Var a);
Var concat_cols(Tape& t, Var a, Var b);
Var slice_cols(Tape& t, Var a, int start, int count);
/// Each row repeated `times` times consecutively: row r -> rows r*times .. r*times+times-1.
Var repeat_rows(Tape& t, Var a, int times);
/// Column j of `a` copied widths[j] times, in order.
Var expand_cols(Tape& t, Var a, std::span<const int> widths);
/// Element-wise clamp; the gradient is zero where the clamp is active.
Var clamp(Tape& t, Var a, double lo, double hi);
/// a is (n*group x 1); returns (n x 1) with log(mean(exp(.))) of each consecutive group.
Var group_log_mean_exp(Tape& t, Var a, int group);
/// Binary concrete relaxation: sigmoid((logits + noise) / tau), noise a fixed
/// matrix of standard logistic draws.
Var binary_concrete(Tape& t, Var logits, const Matrix& noise, double tau);
/// log(p) - log(1 - p).
Var logit(Tape& t, Var p);
/// Element-wise Gaussian log-density -1/2 (log 2pi + log_var + (y - mean)^2 exp(-log_var)).
Var gaussian_loglik(Tape& t, Var y, Var mean, Var log_var);

// Plain scalar versions.

double sigmoid(double x);
/// log_var is clamped to [-10, 10].
double gaussian_loglik(double y, double mean, double log_var);
/// log(1/N sum exp(v_i)) with max-shift. Throws EmptyList for no values.
double log_mean_exp(std::span<const double> values);

/// Binary concrete sample per coordinate: sigmoid((log pi - log(1 - pi) + L) / tau),
/// L standard logistic from `rng`.
std::vector<double> gumbel_softmax_binary(std::span<const double> pi, double tau, CounterRng& rng);
/// Same with explicit logistic draws.
std::vector<double> gumbel_softmax_binary(std::span<const double> pi, double tau, std::span<const double> logistic);

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

}  // namespace cssi::nn
