#include "cssi/nn/mlp.hpp"

#include <cmath>

#include "cssi/error.hpp"
#include "cssi/nn/ops.hpp"

namespace cssi::nn {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "?";
}

Activation activation_from_string(const std::string& name) {
    if (name == "identity" || name == "linear") return Activation::identity;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw InvalidConfig("unknown activation '" + name + "'");
}

Mlp::Mlp(std::string name, std::vector<int> widths, Activation hidden)
    : name_(std::move(name)), widths_(std::move(widths)), hidden_(hidden) {
    if (widths_.size() < 2) throw ShapeMismatch("an MLP needs at least input and output widths");
    for (int w : widths_)
        if (w < 1) throw ShapeMismatch("MLP widths must be positive");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        const std::string prefix = name_ + ".layer" + std::to_string(l);
        Dense d;
        d.weight.name = prefix + ".weight";
        d.weight.value = Matrix::Zero(widths_[l], widths_[l + 1]);
        d.weight.zero_grad();
        d.bias.name = prefix + ".bias";
        d.bias.value = Matrix::Zero(1, widths_[l + 1]);
        d.bias.zero_grad();
        layers_.push_back(std::move(d));
    }
}

void Mlp::init(CounterRng& rng, Init scheme) {
    for (auto& layer : layers_) {
        const double fan_in = static_cast<double>(layer.weight.value.rows());
        if (scheme == Init::uniform_fan_in) {
            const double bound = 1.0 / std::sqrt(fan_in);
            for (Eigen::Index i = 0; i < layer.weight.value.size(); ++i)
                layer.weight.value.data()[i] = rng.uniform(-bound, bound);
            for (Eigen::Index i = 0; i < layer.bias.value.size(); ++i)
                layer.bias.value.data()[i] = rng.uniform(-bound, bound);
        } else {
            const double sd = 1.0 / std::sqrt(fan_in);
            for (Eigen::Index i = 0; i < layer.weight.value.size(); ++i)
                layer.weight.value.data()[i] = sd * rng.normal();
            layer.bias.value.setZero();
        }
    }
}

void Mlp::zero_output_layer() {
    layers_.back().weight.value.setZero();
    layers_.back().bias.value.setZero();
}

namespace {

Var activate(Tape& t, Var v, Activation a) {
    switch (a) {
        case Activation::identity: return v;
        case Activation::tanh: return tanh(t, v);
        case Activation::relu: return relu(t, v);
    }
    return v;
}

void activate_in_place(Matrix& m, Activation a) {
    switch (a) {
        case Activation::identity: break;
        case Activation::tanh: m = m.array().tanh(); break;
        case Activation::relu: m = m.cwiseMax(0.0); break;
    }
}

}  // namespace

Var Mlp::forward(Tape& t, Var input) {
    if (t.value(input).cols() != input_dim()) throw ShapeMismatch("MLP input width " + std::to_string(t.value(input).cols()) + " != " + std::to_string(input_dim()));
    Var h = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        h = add_row(t, matmul(t, h, t.parameter(layers_[l].weight)), t.parameter(layers_[l].bias));
        if (l + 1 < layers_.size()) h = activate(t, h, hidden_);
    }
    return h;
}

Matrix Mlp::forward(const Matrix& input) const {
    if (input.cols() != input_dim()) throw ShapeMismatch("MLP input width " + std::to_string(input.cols()) + " != " + std::to_string(input_dim()));
    Matrix h = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Matrix next = h * layers_[l].weight.value;
        next.rowwise() += layers_[l].bias.value.row(0);
        if (l + 1 < layers_.size()) activate_in_place(next, hidden_);
        h = std::move(next);
    }
    return h;
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
    Matrix in(1, static_cast<Eigen::Index>(input.size()));
    for (std::size_t i = 0; i < input.size(); ++i) in(0, static_cast<Eigen::Index>(i)) = input[i];
    const Matrix out = forward(in);
    return std::vector<double>(out.data(), out.data() + out.size());
}

std::vector<Parameter*> Mlp::parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
    std::vector<const Parameter*> out;
    for (const auto& l : layers_) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.value.size() + l.bias.value.size());
    return n;
}

}  // namespace cssi::nn
