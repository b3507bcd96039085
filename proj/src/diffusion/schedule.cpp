#include "lmd/diffusion/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lmd::diffusion {

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double beta_start, double beta_end) {
    if (steps < 2) throw std::invalid_argument("schedule: need at least 2 steps");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw std::invalid_argument("schedule: betas must satisfy 0 < start <= end < 1, got (" +
                                    std::to_string(beta_start) + ", " + std::to_string(beta_end) + ")");
    }
    NoiseSchedule s;
    s.beta_.resize(steps);
    s.alpha_.resize(steps);
    s.alpha_bar_.resize(steps);
    s.sigma_.resize(steps);
    double running = 1.0;
    for (std::size_t i = 0; i < steps; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(steps - 1);
        const double beta = i + 1 == steps ? beta_end : beta_start + (beta_end - beta_start) * frac;
        s.beta_[i] = beta;
        s.alpha_[i] = 1.0 - beta;
        running *= s.alpha_[i];
        s.alpha_bar_[i] = running;
        s.sigma_[i] = std::sqrt(beta);
    }
    return s;
}

std::size_t NoiseSchedule::index(std::size_t t) const {
    if (t < 1 || t > beta_.size()) {
        throw std::out_of_range("schedule: step " + std::to_string(t) + " outside [1, " +
                                std::to_string(beta_.size()) + "]");
    }
    return t - 1;
}

BetaRange default_beta_range(std::size_t steps) {
    const double scale = 1000.0 / static_cast<double>(steps);
    return {1e-4 * scale, std::min(0.02 * scale, 0.999)};
}

std::vector<float> time_embedding(std::size_t t, std::size_t dim) {
    if (t < 1) throw std::invalid_argument("time_embedding: step must be >= 1");
    if (dim == 0 || dim % 2 != 0) {
        throw std::invalid_argument("time_embedding: dimension must be even and positive, got " +
                                    std::to_string(dim));
    }
    std::vector<float> out(dim);
    const std::size_t half = dim / 2;
    for (std::size_t i = 0; i < half; ++i) {
        const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
        const double arg = static_cast<double>(t) * freq;
        out[2 * i] = static_cast<float>(std::sin(arg));
        out[2 * i + 1] = static_cast<float>(std::cos(arg));
    }
    return out;
}

Tensor diffuse_to(const Tensor& x0, std::size_t t, const Tensor& noise, const NoiseSchedule& schedule) {
    numerics::require_same_shape("diffuse_to", x0, noise);
    if (t == 0) return x0;
    const double abar = schedule.alpha_bar(t);
    const auto signal = static_cast<float>(std::sqrt(abar));
    const auto spread = static_cast<float>(std::sqrt(1.0 - abar));
    Tensor out(x0.shape());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = signal * x0[i] + spread * noise[i];
    return out;
}

}  // namespace lmd::diffusion
