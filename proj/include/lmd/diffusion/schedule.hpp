#pragma once

#include <cstddef>
#include <vector>

#include "lmd/numerics/tensor.hpp"

namespace lmd::diffusion {

using numerics::Tensor;

// Fixed variance schedule, indexed by step t in [1, T]. alpha_bar(0) is 1.
class NoiseSchedule {
   public:
    static NoiseSchedule linear(std::size_t steps, double beta_start, double beta_end);

    std::size_t steps() const { return beta_.size(); }
    double beta_start() const { return beta_.front(); }
    double beta_end() const { return beta_.back(); }

    double beta(std::size_t t) const { return beta_.at(index(t)); }
    double alpha(std::size_t t) const { return alpha_.at(index(t)); }
    double alpha_bar(std::size_t t) const { return t == 0 ? 1.0 : alpha_bar_.at(index(t)); }
    // Sampling noise scale; zero at t = 1.
    double sigma(std::size_t t) const { return t == 1 ? 0.0 : sigma_.at(index(t)); }
    // sqrt(beta_t) without the final-step override.
    double raw_sigma(std::size_t t) const { return sigma_.at(index(t)); }

   private:
    std::size_t index(std::size_t t) const;

    std::vector<double> beta_, alpha_, alpha_bar_, sigma_;
};

// Linear beta range that keeps a T-step chain as noisy as the classic
// 1000-step (1e-4, 0.02) chain.
struct BetaRange {
    double start;
    double end;
};
BetaRange default_beta_range(std::size_t steps);

// Sinusoidal embedding: (sin(t w_i), cos(t w_i)) pairs with w_i = 10000^(-2i/dim).
std::vector<float> time_embedding(std::size_t t, std::size_t dim);

// Closed-form marginal sqrt(abar_t) x0 + sqrt(1 - abar_t) noise. t = 0 returns x0.
Tensor diffuse_to(const Tensor& x0, std::size_t t, const Tensor& noise, const NoiseSchedule& schedule);

}  // namespace lmd::diffusion
