#include "lmd/diffusion/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "lmd/numerics/adam.hpp"
#include "lmd/numerics/rng.hpp"

namespace lmd::diffusion {

void TrainConfig::validate() const {
    if (batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
    if (!(learning_rate > 0.0f)) throw std::invalid_argument("train: learning rate must be positive");
    if (steps < 2) throw std::invalid_argument("train: need T >= 2");
    if (!(clip_norm > 0.0f)) throw std::invalid_argument("train: clip norm must be positive");
    (void)schedule();
}

TrainResult train(EpsilonModel& model, const std::vector<Tensor>& images, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    if (images.empty()) throw std::invalid_argument("train: empty dataset");
    const auto image_shape = model.architecture().image_shape();
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].shape() != image_shape) {
            throw std::invalid_argument("train: image " + std::to_string(i) + " has shape " +
                                        numerics::to_string(images[i].shape()) + ", model expects " +
                                        numerics::to_string(image_shape));
        }
    }

    const NoiseSchedule schedule = config.schedule();
    numerics::Adam adam(model.parameters(), {config.learning_rate, 0.9f, 0.999f, 1e-8f});
    numerics::Rng rng = numerics::Rng::derive(config.seed, {0x7a1});
    const std::size_t pixels = numerics::element_count(image_shape);

    std::vector<std::size_t> order(images.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, order.size() - start);
            numerics::Shape batch_shape{count, image_shape[0], image_shape[1], image_shape[2]};
            Tensor noisy(batch_shape);
            Tensor noise = rng.normal_tensor(batch_shape);
            std::vector<std::size_t> steps(count);
            for (std::size_t n = 0; n < count; ++n) {
                steps[n] = 1 + static_cast<std::size_t>(rng.below(config.steps));
                const double abar = schedule.alpha_bar(steps[n]);
                const auto signal = static_cast<float>(std::sqrt(abar));
                const auto spread = static_cast<float>(std::sqrt(1.0 - abar));
                const Tensor& x0 = images[order[start + n]];
                for (std::size_t p = 0; p < pixels; ++p) {
                    noisy[n * pixels + p] = signal * x0[p] + spread * noise[n * pixels + p];
                }
            }

            Graph graph;
            const Var input = graph.constant(std::move(noisy));
            const Var target = graph.constant(std::move(noise));
            const Var pred = model.forward(graph, input, steps);
            const Var loss = graph.scale(graph.sum_of_squares(graph.sub(pred, target)),
                                         1.0f / static_cast<float>(count * pixels));
            const float loss_value = graph.value(loss).item();
            if (!std::isfinite(loss_value)) {
                throw TrainingDiverged("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                       ", batch " + std::to_string(batches + 1));
            }
            graph.backward(loss);
            numerics::clip_grad_norm(model.parameters(), config.clip_norm);
            adam.step(model.parameters());

            loss_sum += loss_value;
            ++batches;
        }
        const double epoch_loss = loss_sum / static_cast<double>(batches);
        result.epoch_loss.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch + 1, epoch_loss);
    }
    return result;
}

}  // namespace lmd::diffusion
