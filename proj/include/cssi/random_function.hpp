#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cssi/nn/mlp.hpp"

namespace cssi {

/// Frozen randomly initialised network used for mechanisms and boundaries.
/// Weights are N(0, 1/fan_in), biases zero. Copies share the weights.
class RandomFunction {
public:
    RandomFunction(std::vector<int> widths, nn::Activation activation, std::uint64_t seed);

    double operator()(std::span<const double> x) const;
    std::vector<double> evaluate(std::span<const double> x) const;

    int input_dim() const { return net_->input_dim(); }
    const nn::Mlp& network() const { return *net_; }

private:
    std::shared_ptr<const nn::Mlp> net_;
};

RandomFunction make_random_function(std::vector<int> widths, nn::Activation activation, std::uint64_t seed);

}  // namespace cssi
