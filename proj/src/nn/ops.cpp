#include "cssi/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cssi/error.hpp"

namespace cssi::nn {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeMismatch(std::string(op) + ": operand shapes differ");
}

Matrix sigmoid_of(const Matrix& x) {
    return x.unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
    const Matrix& A = t.value(a);
    const Matrix& B = t.value(b);
    if (A.cols() != B.rows()) throw ShapeMismatch("matmul: inner dimensions differ");
    Matrix out = A * B;
    return t.record(OpKind::matmul, std::move(out), {a.id, b.id, -1}, [a, b](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g * tp.value(b).transpose());
        tp.accumulate(b, tp.value(a).transpose() * g);
    });
}

Var add_row(Tape& t, Var a, Var row) {
    const Matrix& A = t.value(a);
    const Matrix& R = t.value(row);
    if (R.rows() != 1 || R.cols() != A.cols()) throw ShapeMismatch("add_row: row vector shape");
    Matrix out = A.rowwise() + R.row(0);
    return t.record(OpKind::add_row, std::move(out), {a.id, row.id, -1}, [a, row](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g);
        tp.accumulate(row, g.colwise().sum());
    });
}

Var add(Tape& t, Var a, Var b) {
    require_same_shape(t.value(a), t.value(b), "add");
    Matrix out = t.value(a) + t.value(b);
    return t.record(OpKind::add, std::move(out), {a.id, b.id, -1}, [a, b](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g);
        tp.accumulate(b, g);
    });
}

Var sub(Tape& t, Var a, Var b) {
    require_same_shape(t.value(a), t.value(b), "sub");
    Matrix out = t.value(a) - t.value(b);
    return t.record(OpKind::sub, std::move(out), {a.id, b.id, -1}, [a, b](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g);
        tp.accumulate(b, -g);
    });
}

Var mul(Tape& t, Var a, Var b) {
    require_same_shape(t.value(a), t.value(b), "mul");
    Matrix out = t.value(a).cwiseProduct(t.value(b));
    return t.record(OpKind::mul, std::move(out), {a.id, b.id, -1}, [a, b](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g.cwiseProduct(tp.value(b)));
        tp.accumulate(b, g.cwiseProduct(tp.value(a)));
    });
}

Var scale(Tape& t, Var a, double c) {
    Matrix out = t.value(a) * c;
    return t.record(OpKind::scale, std::move(out), {a.id, -1, -1},
                    [a, c](Tape& tp, const Matrix& g) { tp.accumulate(a, g * c); });
}

Var add_scalar(Tape& t, Var a, double c) {
    Matrix out = t.value(a).array() + c;
    return t.record(OpKind::add_scalar, std::move(out), {a.id, -1, -1},
                    [a](Tape& tp, const Matrix& g) { tp.accumulate(a, g); });
}

Var tanh(Tape& t, Var a) {
    Matrix out = t.value(a).array().tanh();
    const int self = static_cast<int>(t.size());
    return t.record(OpKind::tanh, std::move(out), {a.id, -1, -1}, [a, self](Tape& tp, const Matrix& g) {
        const Matrix& y = tp.value(Var{self});
        tp.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
    });
}

Var relu(Tape& t, Var a) {
    Matrix out = t.value(a).cwiseMax(0.0);
    return t.record(OpKind::relu, std::move(out), {a.id, -1, -1}, [a](Tape& tp, const Matrix& g) {
        const Matrix& x = tp.value(a);
        tp.accumulate(a, (x.array() > 0.0).select(g, 0.0).matrix());
    });
}

Var sigmoid(Tape& t, Var a) {
    Matrix out = sigmoid_of(t.value(a));
    const int self = static_cast<int>(t.size());
    return t.record(OpKind::sigmoid, std::move(out), {a.id, -1, -1}, [a, self](Tape& tp, const Matrix& g) {
        const Matrix& y = tp.value(Var{self});
        tp.accumulate(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
    });
}

Var exp(Tape& t, Var a) {
    Matrix out = t.value(a).array().exp();
    const int self = static_cast<int>(t.size());
    return t.record(OpKind::exp, std::move(out), {a.id, -1, -1}, [a, self](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g.cwiseProduct(tp.value(Var{self})));
    });
}

Var log(Tape& t, Var a) {
    Matrix out = t.value(a).array().log();
    return t.record(OpKind::log, std::move(out), {a.id, -1, -1}, [a](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g.cwiseQuotient(tp.value(a)));
    });
}

Var square(Tape& t, Var a) {
    Matrix out = t.value(a).array().square();
    return t.record(OpKind::square, std::move(out), {a.id, -1, -1}, [a](Tape& tp, const Matrix& g) {
        tp.accumulate(a, 2.0 * g.cwiseProduct(tp.value(a)));
    });
}

Var sum(Tape& t, Var a) {
    Matrix out(1, 1);
    out(0, 0) = t.value(a).sum();
    return t.record(OpKind::sum, std::move(out), {a.id, -1, -1}, [a](Tape& tp, const Matrix& g) {
        const Matrix& x = tp.value(a);
        tp.accumulate(a, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
    });
}

Var row_sum(Tape& t, Var a) {
    Matrix out = t.value(a).rowwise().sum();
    return t.record(OpKind::row_sum, std::move(out), {a.id, -1, -1}, [a](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g.replicate(1, tp.value(a).cols()));
    });
}

Var concat_cols(Tape& t, Var a, Var b) {
    const Matrix& A = t.value(a);
    const Matrix& B = t.value(b);
    if (A.rows() != B.rows()) throw ShapeMismatch("concat_cols: row counts differ");
    Matrix out(A.rows(), A.cols() + B.cols());
    out << A, B;
    const auto ca = A.cols();
    const auto cb = B.cols();
    return t.record(OpKind::concat_cols, std::move(out), {a.id, b.id, -1}, [a, b, ca, cb](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g.leftCols(ca));
        tp.accumulate(b, g.rightCols(cb));
    });
}

Var slice_cols(Tape& t, Var a, int start, int count) {
    const Matrix& A = t.value(a);
    if (start < 0 || count < 0 || start + count > A.cols()) throw ShapeMismatch("slice_cols: out of range");
    Matrix out = A.middleCols(start, count);
    return t.record(OpKind::slice_cols, std::move(out), {a.id, -1, -1}, [a, start, count](Tape& tp, const Matrix& g) {
        const Matrix& x = tp.value(a);
        Matrix full = Matrix::Zero(x.rows(), x.cols());
        full.middleCols(start, count) = g;
        tp.accumulate(a, full);
    });
}

Var repeat_rows(Tape& t, Var a, int times) {
    const Matrix& A = t.value(a);
    if (times < 1) throw ShapeMismatch("repeat_rows: times must be positive");
    Matrix out(A.rows() * times, A.cols());
    for (Eigen::Index r = 0; r < A.rows(); ++r)
        for (int i = 0; i < times; ++i) out.row(r * times + i) = A.row(r);
    return t.record(OpKind::repeat_rows, std::move(out), {a.id, -1, -1}, [a, times](Tape& tp, const Matrix& g) {
        const Matrix& x = tp.value(a);
        Matrix ga = Matrix::Zero(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            for (int i = 0; i < times; ++i) ga.row(r) += g.row(r * times + i);
        tp.accumulate(a, ga);
    });
}

Var expand_cols(Tape& t, Var a, std::span<const int> widths) {
    const Matrix& A = t.value(a);
    if (static_cast<Eigen::Index>(widths.size()) != A.cols()) throw ShapeMismatch("expand_cols: width count");
    std::vector<int> owner;
    for (std::size_t j = 0; j < widths.size(); ++j) owner.insert(owner.end(), static_cast<std::size_t>(widths[j]), static_cast<int>(j));
    Matrix out(A.rows(), static_cast<Eigen::Index>(owner.size()));
    for (std::size_t c = 0; c < owner.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = A.col(owner[c]);
    return t.record(OpKind::expand_cols, std::move(out), {a.id, -1, -1}, [a, owner](Tape& tp, const Matrix& g) {
        const Matrix& x = tp.value(a);
        Matrix ga = Matrix::Zero(x.rows(), x.cols());
        for (std::size_t c = 0; c < owner.size(); ++c) ga.col(owner[c]) += g.col(static_cast<Eigen::Index>(c));
        tp.accumulate(a, ga);
    });
}

Var clamp(Tape& t, Var a, double lo, double hi) {
    Matrix out = t.value(a).cwiseMax(lo).cwiseMin(hi);
    return t.record(OpKind::clamp, std::move(out), {a.id, -1, -1}, [a, lo, hi](Tape& tp, const Matrix& g) {
        const auto x = tp.value(a).array();
        tp.accumulate(a, ((x > lo) && (x < hi)).select(g, 0.0).matrix());
    });
}

Var group_log_mean_exp(Tape& t, Var a, int group) {
    const Matrix& A = t.value(a);
    if (A.cols() != 1 || group < 1 || A.rows() % group != 0) throw ShapeMismatch("group_log_mean_exp: shape");
    const Eigen::Index n = A.rows() / group;
    Matrix out(n, 1);
    Matrix weights(A.rows(), 1);
    const double log_group = std::log(static_cast<double>(group));
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto seg = A.block(r * group, 0, group, 1);
        const double m = seg.maxCoeff();
        const Eigen::ArrayXd e = (seg.array() - m).exp();
        const double s = e.sum();
        out(r, 0) = m + std::log(s) - log_group;
        weights.block(r * group, 0, group, 1) = e / s;
    }
    return t.record(OpKind::group_log_mean_exp, std::move(out), {a.id, -1, -1},
                    [a, group, weights = std::move(weights)](Tape& tp, const Matrix& g) {
                        Matrix ga(weights.rows(), 1);
                        for (Eigen::Index i = 0; i < weights.rows(); ++i) ga(i, 0) = weights(i, 0) * g(i / group, 0);
                        tp.accumulate(a, ga);
                    });
}

Var binary_concrete(Tape& t, Var logits, const Matrix& noise, double tau) {
    const Matrix& L = t.value(logits);
    require_same_shape(L, noise, "binary_concrete");
    if (!(tau > 0.0)) throw ShapeMismatch("binary_concrete: temperature must be positive");
    Matrix out = sigmoid_of((L + noise) / tau);
    const int self = static_cast<int>(t.size());
    return t.record(OpKind::binary_concrete, std::move(out), {logits.id, -1, -1},
                    [logits, self, tau](Tape& tp, const Matrix& g) {
                        const Matrix& z = tp.value(Var{self});
                        tp.accumulate(logits, (g.array() * z.array() * (1.0 - z.array()) / tau).matrix());
                    });
}

Var logit(Tape& t, Var p) {
    const Matrix& P = t.value(p);
    Matrix out = P.array().log() - (1.0 - P.array()).log();
    return t.record(OpKind::logit, std::move(out), {p.id, -1, -1}, [p](Tape& tp, const Matrix& g) {
        const auto x = tp.value(p).array();
        tp.accumulate(p, (g.array() / (x * (1.0 - x))).matrix());
    });
}

Var gaussian_loglik(Tape& t, Var y, Var mean, Var log_var) {
    const Matrix& Y = t.value(y);
    const Matrix& M = t.value(mean);
    const Matrix& LV = t.value(log_var);
    require_same_shape(Y, M, "gaussian_loglik");
    require_same_shape(Y, LV, "gaussian_loglik");
    const Eigen::ArrayXXd diff = Y.array() - M.array();
    const Eigen::ArrayXXd prec = (-LV.array()).exp();
    Matrix out = (-0.5 * (kLog2Pi + LV.array() + diff.square() * prec)).matrix();
    return t.record(OpKind::gaussian_loglik, std::move(out), {y.id, mean.id, log_var.id},
                    [y, mean, log_var, diff, prec](Tape& tp, const Matrix& g) {
                        const Eigen::ArrayXXd ga = g.array();
                        tp.accumulate(mean, (ga * diff * prec).matrix());
                        tp.accumulate(y, (-ga * diff * prec).matrix());
                        tp.accumulate(log_var, (ga * (-0.5 + 0.5 * diff.square() * prec)).matrix());
                    });
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double gaussian_loglik(double y, double mean, double log_var) {
    const double lv = std::clamp(log_var, kLogVarMin, kLogVarMax);
    const double diff = y - mean;
    return -0.5 * (kLog2Pi + lv + diff * diff * std::exp(-lv));
}

double log_mean_exp(std::span<const double> values) {
    if (values.empty()) throw EmptyList("log_mean_exp of an empty list");
    if (values.size() == 1) return values[0];
    const double m = *std::max_element(values.begin(), values.end());
    if (std::isinf(m)) return m;
    double s = 0.0;
    for (double v : values) s += std::exp(v - m);
    return m + std::log(s / static_cast<double>(values.size()));
}

std::vector<double> gumbel_softmax_binary(std::span<const double> pi, double tau, std::span<const double> logistic) {
    if (pi.size() != logistic.size()) throw ShapeMismatch("gumbel_softmax_binary: noise length");
    std::vector<double> out(pi.size());
    for (std::size_t j = 0; j < pi.size(); ++j) {
        const double l = std::log(pi[j]) - std::log1p(-pi[j]);
        out[j] = sigmoid((l + logistic[j]) / tau);
    }
    return out;
}

std::vector<double> gumbel_softmax_binary(std::span<const double> pi, double tau, CounterRng& rng) {
    std::vector<double> noise(pi.size());
    for (double& v : noise) v = rng.logistic();
    return gumbel_softmax_binary(pi, tau, noise);
}

}  // namespace cssi::nn
