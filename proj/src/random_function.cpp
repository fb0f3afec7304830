#include "cssi/random_function.hpp"

#include <cmath>

#include "cssi/error.hpp"

namespace cssi {

RandomFunction::RandomFunction(std::vector<int> widths, nn::Activation activation, std::uint64_t seed) {
    if (widths.size() < 2) throw InvalidConfig("random function needs input and output widths");
    auto net = std::make_shared<nn::Mlp>("g", std::move(widths), activation);
    CounterRng rng(seed, 0x5eed);
    net->init(rng, nn::Init::gaussian_fan_in);
    net_ = std::move(net);
}

double RandomFunction::operator()(std::span<const double> x) const {
    // Hand-rolled single-row pass; the Matrix path allocates per call.
    thread_local std::vector<double> a, b;
    a.assign(x.begin(), x.end());
    const auto& layers = net_->layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& W = layers[l].weight.value;
        const auto& bias = layers[l].bias.value;
        if (static_cast<Eigen::Index>(a.size()) != W.rows()) throw ShapeMismatch("random function input width");
        b.assign(static_cast<std::size_t>(W.cols()), 0.0);
        for (Eigen::Index o = 0; o < W.cols(); ++o) {
            double s = bias(0, o);
            for (Eigen::Index i = 0; i < W.rows(); ++i) s += a[static_cast<std::size_t>(i)] * W(i, o);
            if (l + 1 < layers.size()) {
                if (net_->hidden_activation() == nn::Activation::tanh) s = std::tanh(s);
                else if (net_->hidden_activation() == nn::Activation::relu) s = s > 0.0 ? s : 0.0;
            }
            b[static_cast<std::size_t>(o)] = s;
        }
        std::swap(a, b);
    }
    return a.front();
}

std::vector<double> RandomFunction::evaluate(std::span<const double> x) const { return net_->forward(x); }

RandomFunction make_random_function(std::vector<int> widths, nn::Activation activation, std::uint64_t seed) {
    return RandomFunction(std::move(widths), activation, seed);
}

}  // namespace cssi
