#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cssi::nn {

using Matrix = Eigen::MatrixXd;

/// Trainable tensor with its accumulated gradient.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Handle to a tape node.
struct Var {
    int id = -1;
};

enum class OpKind {
    constant,
    parameter,
    matmul,
    add_row,
    add,
    sub,
    mul,
    scale,
    add_scalar,
    tanh,
    relu,
    sigmoid,
    exp,
    log,
    square,
    sum,
    row_sum,
    concat_cols,
    slice_cols,
    repeat_rows,
    expand_cols,
    clamp,
    group_log_mean_exp,
    binary_concrete,
    logit,
    gaussian_loglik,
};

/// Reverse-mode tape over matrix-valued nodes.
///
/// Nodes are appended in evaluation order, which is a topological order of
/// the computation, so backward() walks the node list once in reverse.
/// Parameter leaves add their gradient into Parameter::grad at the end of
/// backward().
class Tape {
public:
    using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

    Var constant(Matrix value);
    Var parameter(Parameter& p);
    Var record(OpKind kind, Matrix value, std::array<int, 3> inputs, Backward backward);

    const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
    double scalar(Var v) const { return value(v)(0, 0); }
    /// Gradient from the last backward(); zeros if v did not reach the loss.
    Matrix grad(Var v) const;
    OpKind kind(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].kind; }
    std::array<int, 3> inputs(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].inputs; }

    /// Adds g into the gradient of v (used by backward closures).
    void accumulate(Var v, const Matrix& g);

    /// Seeds d loss / d loss = 1 and propagates. `loss` must be 1x1.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }
    /// Number of nodes whose backward closure ran in the last backward().
    std::size_t visited() const { return visited_; }

private:
    struct Node {
        OpKind kind;
        Matrix value;
        Matrix grad;
        std::array<int, 3> inputs{-1, -1, -1};
        Backward backward;
        Parameter* sink = nullptr;
    };
    std::vector<Node> nodes_;
    std::size_t visited_ = 0;
};

}  // namespace cssi::nn
