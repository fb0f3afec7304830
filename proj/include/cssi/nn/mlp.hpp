#pragma once

#include <span>
#include <string>
#include <vector>

#include "cssi/nn/tape.hpp"
#include "cssi/rng.hpp"

namespace cssi::nn {

enum class Activation { identity, tanh, relu };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

enum class Init {
    uniform_fan_in,   // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases
    gaussian_fan_in,  // N(0, 1/fan_in) weights, zero biases
};

struct Dense {
    Parameter weight;  // in x out
    Parameter bias;    // 1 x out
};

/// Dense network: affine layers with `hidden` activation between them and
/// an identity output layer.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::string name, std::vector<int> widths, Activation hidden);

    void init(CounterRng& rng, Init scheme = Init::uniform_fan_in);
    /// Zeros the last layer's weights and biases.
    void zero_output_layer();

    Var forward(Tape& t, Var input);
    Matrix forward(const Matrix& input) const;
    std::vector<double> forward(std::span<const double> input) const;

    const std::vector<int>& widths() const { return widths_; }
    Activation hidden_activation() const { return hidden_; }
    int input_dim() const { return widths_.front(); }
    int output_dim() const { return widths_.back(); }
    std::vector<Dense>& layers() { return layers_; }
    const std::vector<Dense>& layers() const { return layers_; }

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    std::size_t parameter_count() const;

private:
    std::string name_;
    std::vector<int> widths_;
    Activation hidden_ = Activation::relu;
    std::vector<Dense> layers_;
};

}  // namespace cssi::nn
