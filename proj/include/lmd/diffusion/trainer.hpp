#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "lmd/diffusion/model.hpp"
#include "lmd/diffusion/schedule.hpp"

namespace lmd::diffusion {

struct TrainConfig {
    std::size_t epochs = 400;
    std::size_t batch_size = 16;
    float learning_rate = 2e-3f;
    std::size_t steps = 200;
    double beta_start = 5e-4;
    double beta_end = 0.1;
    std::uint64_t seed = 0;
    float clip_norm = 1.0f;

    NoiseSchedule schedule() const { return NoiseSchedule::linear(steps, beta_start, beta_end); }
    void validate() const;
};

struct TrainResult {
    std::vector<double> epoch_loss;  // mean batch loss per epoch
};

class TrainingDiverged : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Fits eps(diffuse_to(x0, t, noise), t) to noise by mean squared error,
// t uniform in [1, T]. Single-threaded and deterministic given config.seed.
TrainResult train(EpsilonModel& model, const std::vector<Tensor>& images, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace lmd::diffusion
