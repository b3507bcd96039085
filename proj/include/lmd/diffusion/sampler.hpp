#pragma once

#include <span>
#include <vector>

#include "lmd/diffusion/model.hpp"
#include "lmd/diffusion/schedule.hpp"
#include "lmd/masking/mask.hpp"
#include "lmd/numerics/rng.hpp"

namespace lmd::diffusion {

using numerics::Rng;

// One ancestral step on a [C, H, W] image:
// (x_t - beta_t / sqrt(1 - abar_t) * eps(x_t, t)) / sqrt(alpha_t) + sigma_t z, with sigma_1 = 0.
Tensor denoise_step(const Tensor& x_t, std::size_t t, const EpsilonModel& model, const NoiseSchedule& schedule,
                    Rng& rng);

// Standard-normal start, denoise_step for t = T..1, clamp to [-1, 1].
Tensor sample(const EpsilonModel& model, const NoiseSchedule& schedule, const numerics::Shape& shape, Rng& rng);

// Diffusion inpainting. For t = T..1 the original is diffused to step t - 1
// with fresh noise, the running image is denoised one step, and observed
// pixels (mask = 1) are taken from the diffused original. Observed pixels of
// the result equal `original` exactly; generated pixels are clamped to [-1, 1].
//
// `rng` drives the start noise and the denoising draws in the same order as
// sample(); the diffusion draws come from rng.split(kDiffuseStream).
Tensor inpaint(const Tensor& original, const masking::Mask& mask, const EpsilonModel& model,
               const NoiseSchedule& schedule, Rng& rng);

// Diffuses `original` to `lift_step` with noise from `rng`, then denoises
// back through t = lift_step..1 and clamps.
Tensor denoise_lift(const Tensor& original, std::size_t lift_step, const EpsilonModel& model,
                    const NoiseSchedule& schedule, Rng& rng);

inline constexpr std::uint64_t kDiffuseStream = 0xd1ff;

// Batched forms: item n uses rngs[n] exactly as the single-image call would,
// so results do not depend on how work is grouped.
std::vector<Tensor> inpaint_batch(std::span<const Tensor> originals, std::span<const masking::Mask> masks,
                                  const EpsilonModel& model, const NoiseSchedule& schedule, std::span<Rng> rngs);
std::vector<Tensor> denoise_lift_batch(std::span<const Tensor> originals, std::size_t lift_step,
                                       const EpsilonModel& model, const NoiseSchedule& schedule,
                                       std::span<Rng> rngs);
std::vector<Tensor> sample_batch(const EpsilonModel& model, const NoiseSchedule& schedule,
                                 const numerics::Shape& shape, std::span<Rng> rngs);

}  // namespace lmd::diffusion
