#include "lmd/numerics/adam.hpp"

#include <cmath>

namespace lmd::numerics {

Adam::Adam(const ParameterSet& params, AdamConfig config) : config_(config) {
    if (!(config.learning_rate > 0.0f) || config.beta1 < 0.0f || config.beta1 >= 1.0f ||
        config.beta2 < 0.0f || config.beta2 >= 1.0f || !(config.epsilon > 0.0f)) {
        throw std::invalid_argument("adam: invalid hyperparameters");
    }
    for (const auto& p : params) {
        m_.emplace_back(p.value.shape());
        v_.emplace_back(p.value.shape());
    }
}

void Adam::step(ParameterSet& params) {
    if (params.size() != m_.size()) {
        throw std::invalid_argument("adam: parameter set changed since construction");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        if (p.grad.shape() != p.value.shape() || m_[i].shape() != p.value.shape()) {
            throw std::invalid_argument("adam: shape mismatch for parameter '" + p.name + "'");
        }
        if (!all_finite(p.grad)) {
            throw NonFiniteGradient("adam: non-finite gradient in parameter '" + p.name + "'");
        }
    }

    ++steps_;
    const auto t = static_cast<double>(steps_);
    const float correction1 = static_cast<float>(1.0 - std::pow(static_cast<double>(config_.beta1), t));
    const float correction2 = static_cast<float>(1.0 - std::pow(static_cast<double>(config_.beta2), t));
    const float b1 = config_.beta1, b2 = config_.beta2;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const float g = p.grad[k];
            m[k] = b1 * m[k] + (1.0f - b1) * g;
            v[k] = b2 * v[k] + (1.0f - b2) * g * g;
            const float m_hat = m[k] / correction1;
            const float v_hat = v[k] / correction2;
            p.value[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

float clip_grad_norm(ParameterSet& params, float max_norm) {
    double sq = 0.0;
    for (const auto& p : params) {
        for (float g : p.grad.data()) sq += static_cast<double>(g) * g;
    }
    const auto norm = static_cast<float>(std::sqrt(sq));
    if (norm > max_norm && norm > 0.0f) {
        const float factor = max_norm / norm;
        for (auto& p : params) {
            for (float& g : p.grad.data()) g *= factor;
        }
    }
    return norm;
}

}  // namespace lmd::numerics
