#pragma once

#include <cstdint>
#include <vector>

#include "cssi/nn/tape.hpp"

namespace cssi::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Decoupled: p -= lr * weight_decay * p before the moment step.
    double weight_decay = 1e-5;
};

class Adam {
public:
    Adam(std::vector<Parameter*> params, AdamConfig cfg);

    /// One update from the gradients currently stored in the parameters.
    void step();
    void zero_grad();

    void set_lr(double lr) { cfg_.lr = lr; }
    const AdamConfig& config() const { return cfg_; }
    std::int64_t steps() const { return t_; }

private:
    std::vector<Parameter*> params_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    AdamConfig cfg_;
    std::int64_t t_ = 0;
};

}  // namespace cssi::nn
