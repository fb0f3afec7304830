#include "cssi/nn/tape.hpp"

#include "cssi/error.hpp"

namespace cssi::nn {

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{OpKind::constant, std::move(value), {}, {-1, -1, -1}, nullptr, nullptr});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(Parameter& p) {
    nodes_.push_back(Node{OpKind::parameter, p.value, {}, {-1, -1, -1}, nullptr, &p});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(OpKind kind, Matrix value, std::array<int, 3> inputs, Backward backward) {
    nodes_.push_back(Node{kind, std::move(value), {}, inputs, std::move(backward), nullptr});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix Tape::grad(Var v) const {
    const Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (g.rows() != n.value.rows() || g.cols() != n.value.cols())
        throw ShapeMismatch("gradient shape does not match node value");
    if (n.grad.size() == 0) n.grad = g;
    else n.grad += g;
}

void Tape::backward(Var loss) {
    const Node& root = nodes_[static_cast<std::size_t>(loss.id)];
    if (root.value.rows() != 1 || root.value.cols() != 1) throw ShapeMismatch("backward() needs a scalar loss");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[static_cast<std::size_t>(loss.id)].grad = Matrix::Ones(1, 1);
    visited_ = 0;
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.grad.size() == 0) continue;
        if (n.backward) {
            n.backward(*this, n.grad);
            ++visited_;
        }
        if (n.sink != nullptr) {
            if (n.sink->grad.rows() != n.value.rows() || n.sink->grad.cols() != n.value.cols()) n.sink->zero_grad();
            n.sink->grad += n.grad;
        }
    }
}

}  // namespace cssi::nn
