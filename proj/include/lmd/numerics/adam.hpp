#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lmd/numerics/graph.hpp"

namespace lmd::numerics {

struct AdamConfig {
    float learning_rate = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
};

// Raised when a gradient holds NaN/Inf; no parameter has been modified.
class NonFiniteGradient : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Adam with bias correction. Moments are laid out in ParameterSet order.
class Adam {
   public:
    Adam(const ParameterSet& params, AdamConfig config);

    // Applies one update from each parameter's `grad`.
    void step(ParameterSet& params);

    std::int64_t steps() const { return steps_; }
    const AdamConfig& config() const { return config_; }
    const std::vector<Tensor>& first_moments() const { return m_; }
    const std::vector<Tensor>& second_moments() const { return v_; }

   private:
    AdamConfig config_;
    std::int64_t steps_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

// Rescales all gradients so their joint L2 norm is at most `max_norm`.
// Returns the norm before clipping.
float clip_grad_norm(ParameterSet& params, float max_norm);

}  // namespace lmd::numerics
