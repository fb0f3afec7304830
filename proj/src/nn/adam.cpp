#include "cssi/nn/adam.hpp"

#include <cmath>

#include "cssi/error.hpp"

namespace cssi::nn {

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (const Parameter* p : params_) {
        m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
            throw ShapeMismatch("gradient of '" + p.name + "' does not match its parameter");
        if (cfg_.weight_decay != 0.0) p.value *= 1.0 - cfg_.lr * cfg_.weight_decay;
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p.grad;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p.grad.cwiseAbs2();
        const auto denom = (v_[i].array() / bc2).sqrt() + cfg_.eps;
        p.value.array() -= cfg_.lr * (m_[i].array() / bc1) / denom;
    }
}

void Adam::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

}  // namespace cssi::nn
