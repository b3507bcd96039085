#include "lmd/diffusion/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lmd::diffusion {

namespace {

numerics::Shape batch_shape(std::size_t count, const numerics::Shape& image) {
    return {count, image[0], image[1], image[2]};
}

void check_image(const char* op, const Tensor& image, const EpsilonModel& model) {
    if (image.shape() != model.architecture().image_shape()) {
        throw std::invalid_argument(std::string(op) + ": image shape " + numerics::to_string(image.shape()) +
                                    " does not match model " +
                                    numerics::to_string(model.architecture().image_shape()));
    }
}

std::vector<Tensor> unstack(const Tensor& batch, const numerics::Shape& image) {
    const std::size_t pixels = numerics::element_count(image);
    std::vector<Tensor> out;
    for (std::size_t n = 0; n < batch.dim(0); ++n) {
        std::vector<float> values(batch.raw() + n * pixels, batch.raw() + (n + 1) * pixels);
        out.emplace_back(image, std::move(values));
    }
    return out;
}

void fill_normal(Tensor& batch, std::span<Rng> rngs) {
    const std::size_t pixels = batch.size() / batch.dim(0);
    for (std::size_t n = 0; n < batch.dim(0); ++n) {
        for (std::size_t p = 0; p < pixels; ++p) batch[n * pixels + p] = rngs[n].normal();
    }
}

// In-place ancestral step on a [N, C, H, W] batch.
void denoise_batch(Tensor& batch, std::size_t t, const EpsilonModel& model, const NoiseSchedule& schedule,
                   std::span<Rng> rngs) {
    const std::vector<std::size_t> steps(batch.dim(0), t);
    const Tensor eps = model.predict(batch, steps);
    const auto coef = static_cast<float>(schedule.beta(t) / std::sqrt(1.0 - schedule.alpha_bar(t)));
    const auto root_alpha = static_cast<float>(std::sqrt(schedule.alpha(t)));
    const auto sigma = static_cast<float>(schedule.sigma(t));
    const std::size_t pixels = batch.size() / batch.dim(0);
    for (std::size_t n = 0; n < batch.dim(0); ++n) {
        float* x = batch.raw() + n * pixels;
        const float* e = eps.raw() + n * pixels;
        for (std::size_t p = 0; p < pixels; ++p) {
            x[p] = (x[p] - coef * e[p]) / root_alpha;
            if (sigma > 0.0f) x[p] += sigma * rngs[n].normal();
        }
    }
}

void clamp_unit(Tensor& t) {
    for (float& v : t.data()) v = std::clamp(v, -1.0f, 1.0f);
}

}  // namespace

Tensor denoise_step(const Tensor& x_t, std::size_t t, const EpsilonModel& model, const NoiseSchedule& schedule,
                    Rng& rng) {
    check_image("denoise_step", x_t, model);
    Tensor batch = x_t.reshaped(batch_shape(1, x_t.shape()));
    denoise_batch(batch, t, model, schedule, std::span<Rng>(&rng, 1));
    return std::move(batch).reshaped(x_t.shape());
}

std::vector<Tensor> sample_batch(const EpsilonModel& model, const NoiseSchedule& schedule,
                                 const numerics::Shape& shape, std::span<Rng> rngs) {
    if (rngs.empty()) return {};
    if (shape != model.architecture().image_shape()) {
        throw std::invalid_argument("sample: shape " + numerics::to_string(shape) + " does not match model " +
                                    numerics::to_string(model.architecture().image_shape()));
    }
    Tensor x(batch_shape(rngs.size(), shape));
    fill_normal(x, rngs);
    for (std::size_t t = schedule.steps(); t >= 1; --t) denoise_batch(x, t, model, schedule, rngs);
    clamp_unit(x);
    return unstack(x, shape);
}

Tensor sample(const EpsilonModel& model, const NoiseSchedule& schedule, const numerics::Shape& shape, Rng& rng) {
    return std::move(sample_batch(model, schedule, shape, std::span<Rng>(&rng, 1)).front());
}

std::vector<Tensor> inpaint_batch(std::span<const Tensor> originals, std::span<const masking::Mask> masks,
                                  const EpsilonModel& model, const NoiseSchedule& schedule, std::span<Rng> rngs) {
    if (originals.size() != masks.size() || originals.size() != rngs.size()) {
        throw std::invalid_argument("inpaint: images, masks and rng streams differ in count");
    }
    if (originals.empty()) return {};
    const auto& shape = model.architecture().image_shape();
    for (std::size_t n = 0; n < originals.size(); ++n) {
        check_image("inpaint", originals[n], model);
        if (masks[n].height() != shape[1] || masks[n].width() != shape[2]) {
            throw std::invalid_argument("inpaint: mask " + std::to_string(masks[n].height()) + "x" +
                                        std::to_string(masks[n].width()) + " does not match image " +
                                        numerics::to_string(shape));
        }
    }

    const std::size_t count = originals.size(), channels = shape[0], plane = shape[1] * shape[2];
    const std::size_t pixels = channels * plane;
    std::vector<Rng> diffuse_rngs;
    diffuse_rngs.reserve(count);
    for (auto& rng : rngs) diffuse_rngs.push_back(rng.split(kDiffuseStream));

    Tensor x(batch_shape(count, shape));
    fill_normal(x, rngs);
    for (std::size_t t = schedule.steps(); t >= 1; --t) {
        const std::size_t target = t - 1;
        const auto signal = static_cast<float>(std::sqrt(schedule.alpha_bar(target)));
        const auto spread = static_cast<float>(std::sqrt(1.0 - schedule.alpha_bar(target)));
        denoise_batch(x, t, model, schedule, rngs);
        for (std::size_t n = 0; n < count; ++n) {
            const Tensor& orig = originals[n];
            const masking::Mask& mask = masks[n];
            float* xn = x.raw() + n * pixels;
            for (std::size_t c = 0; c < channels; ++c) {
                for (std::size_t p = 0; p < plane; ++p) {
                    const std::size_t i = c * plane + p;
                    // Fresh draw for every pixel keeps the stream layout independent of the mask.
                    const float known = target == 0 ? orig[i] : signal * orig[i] + spread * diffuse_rngs[n].normal();
                    if (mask.kept(p)) xn[i] = known;
                }
            }
        }
    }
    for (std::size_t n = 0; n < count; ++n) {
        float* xn = x.raw() + n * pixels;
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t p = 0; p < plane; ++p) {
                if (!masks[n].kept(p)) xn[c * plane + p] = std::clamp(xn[c * plane + p], -1.0f, 1.0f);
            }
        }
    }
    return unstack(x, shape);
}

Tensor inpaint(const Tensor& original, const masking::Mask& mask, const EpsilonModel& model,
               const NoiseSchedule& schedule, Rng& rng) {
    return std::move(inpaint_batch(std::span<const Tensor>(&original, 1), std::span<const masking::Mask>(&mask, 1),
                                   model, schedule, std::span<Rng>(&rng, 1))
                         .front());
}

std::vector<Tensor> denoise_lift_batch(std::span<const Tensor> originals, std::size_t lift_step,
                                       const EpsilonModel& model, const NoiseSchedule& schedule,
                                       std::span<Rng> rngs) {
    if (originals.size() != rngs.size()) throw std::invalid_argument("denoise_lift: image/rng count mismatch");
    if (lift_step < 1 || lift_step > schedule.steps()) {
        throw std::invalid_argument("denoise_lift: lift step " + std::to_string(lift_step) + " outside [1, " +
                                    std::to_string(schedule.steps()) + "]");
    }
    if (originals.empty()) return {};
    const auto& shape = model.architecture().image_shape();
    for (const auto& img : originals) check_image("denoise_lift", img, model);

    const std::size_t pixels = numerics::element_count(shape);
    const double abar = schedule.alpha_bar(lift_step);
    const auto signal = static_cast<float>(std::sqrt(abar));
    const auto spread = static_cast<float>(std::sqrt(1.0 - abar));
    Tensor x(batch_shape(originals.size(), shape));
    for (std::size_t n = 0; n < originals.size(); ++n) {
        for (std::size_t p = 0; p < pixels; ++p) {
            x[n * pixels + p] = signal * originals[n][p] + spread * rngs[n].normal();
        }
    }
    for (std::size_t t = lift_step; t >= 1; --t) denoise_batch(x, t, model, schedule, rngs);
    clamp_unit(x);
    return unstack(x, shape);
}

Tensor denoise_lift(const Tensor& original, std::size_t lift_step, const EpsilonModel& model,
                    const NoiseSchedule& schedule, Rng& rng) {
    return std::move(
        denoise_lift_batch(std::span<const Tensor>(&original, 1), lift_step, model, schedule, std::span<Rng>(&rng, 1))
            .front());
}

}  // namespace lmd::diffusion
