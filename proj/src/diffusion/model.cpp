#include "lmd/diffusion/model.hpp"

#include <cmath>
#include <stdexcept>

#include "lmd/diffusion/schedule.hpp"
#include "lmd/numerics/kernels.hpp"
#include "lmd/numerics/rng.hpp"

namespace lmd::diffusion {

namespace k = numerics::kernels;

namespace {

constexpr std::size_t kKernel = 3;
constexpr std::size_t kBlocks = 4;
constexpr std::size_t kOut = kBlocks * 4;

Tensor scaled_normal(numerics::Rng& rng, numerics::Shape shape, float stddev) {
    Tensor t = rng.normal_tensor(shape);
    for (float& v : t.data()) v *= stddev;
    return t;
}

}  // namespace

std::string describe(const Architecture& arch) {
    return "channels=" + std::to_string(arch.channels) + " height=" + std::to_string(arch.height) +
           " width=" + std::to_string(arch.width) + " widths=" + std::to_string(arch.widths[0]) + "," +
           std::to_string(arch.widths[1]) + "," + std::to_string(arch.widths[2]) + "," +
           std::to_string(arch.widths[3]) + " time_dim=" + std::to_string(arch.time_dim);
}

EpsilonModel::EpsilonModel(Architecture arch, std::uint64_t seed) : arch_(arch), seed_(seed) {
    if (arch.channels == 0 || arch.height < 2 || arch.width < 2 || arch.height % 2 != 0 ||
        arch.width % 2 != 0) {
        throw std::invalid_argument("epsilon model: image sides must be even and >= 2, got " + describe(arch));
    }
    for (auto w : arch.widths) {
        if (w == 0) throw std::invalid_argument("epsilon model: zero block width");
    }
    if (arch.time_dim == 0 || arch.time_dim % 2 != 0) {
        throw std::invalid_argument("epsilon model: time embedding dimension must be even");
    }

    numerics::Rng rng = numerics::Rng::derive(seed, {0x1d17});
    const auto& w = arch.widths;
    const std::array<std::size_t, kBlocks> in_ch{arch.channels, w[0], w[1], w[2] + w[0]};
    const float time_std = 1.0f / std::sqrt(static_cast<float>(arch.time_dim));
    for (std::size_t b = 0; b < kBlocks; ++b) {
        const std::size_t fan_in = in_ch[b] * kKernel * kKernel;
        const std::string tag = std::to_string(b);
        params_.add("block" + tag + ".conv.weight",
                    scaled_normal(rng, {w[b], in_ch[b], kKernel, kKernel},
                                  std::sqrt(2.0f / static_cast<float>(fan_in))));
        params_.add("block" + tag + ".conv.bias", Tensor({w[b]}));
        params_.add("block" + tag + ".time.weight", scaled_normal(rng, {w[b], arch.time_dim}, time_std));
        params_.add("block" + tag + ".time.bias", Tensor({w[b]}));
    }
    // Zero-initialized head: the untrained model predicts no noise.
    params_.add("out.conv.weight", Tensor({arch.channels, w[3], kKernel, kKernel}));
    params_.add("out.conv.bias", Tensor({arch.channels}));
}

void EpsilonModel::check_input(const Tensor& batch, std::span<const std::size_t> steps) const {
    if (batch.rank() != 4 || batch.dim(1) != arch_.channels || batch.dim(2) != arch_.height ||
        batch.dim(3) != arch_.width) {
        throw std::invalid_argument("epsilon model: input " + numerics::to_string(batch.shape()) +
                                    " does not match " + numerics::to_string(arch_.image_shape()));
    }
    if (steps.size() != batch.dim(0)) {
        throw std::invalid_argument("epsilon model: " + std::to_string(steps.size()) + " steps for batch of " +
                                    std::to_string(batch.dim(0)));
    }
}

Tensor EpsilonModel::embed_steps(std::span<const std::size_t> steps) const {
    Tensor out({steps.size(), arch_.time_dim});
    for (std::size_t n = 0; n < steps.size(); ++n) {
        const auto e = time_embedding(steps[n], arch_.time_dim);
        std::copy(e.begin(), e.end(), out.raw() + n * arch_.time_dim);
    }
    return out;
}

Var EpsilonModel::forward(Graph& g, Var batch, std::span<const std::size_t> steps) {
    check_input(g.value(batch), steps);
    const Var temb = g.constant(embed_steps(steps));
    auto block = [&](std::size_t b, Var input) {
        const Var conv = g.conv2d(input, g.parameter(params_[4 * b]), g.parameter(params_[4 * b + 1]));
        const Var shift = g.affine(temb, g.parameter(params_[4 * b + 2]), g.parameter(params_[4 * b + 3]));
        return g.silu(g.add_channel_bias(conv, shift));
    };
    const Var h0 = block(0, batch);
    const Var h1 = block(1, g.mean_pool2(h0));
    const Var h2 = block(2, h1);
    const Var h3 = block(3, g.concat_channels(g.upsample2(h2), h0));
    return g.conv2d(h3, g.parameter(params_[kOut]), g.parameter(params_[kOut + 1]));
}

Tensor EpsilonModel::predict(const Tensor& batch, std::span<const std::size_t> steps) const {
    check_input(batch, steps);
    const Tensor temb = embed_steps(steps);
    auto block = [&](std::size_t b, const Tensor& input) {
        Tensor conv = k::conv2d(input, params_[4 * b].value, params_[4 * b + 1].value);
        const Tensor shift = k::affine(temb, params_[4 * b + 2].value, params_[4 * b + 3].value);
        return k::silu(k::add_channel_bias(conv, shift));
    };
    const Tensor h0 = block(0, batch);
    const Tensor h1 = block(1, k::mean_pool2(h0));
    const Tensor h2 = block(2, h1);
    const Tensor h3 = block(3, k::concat_channels(k::upsample2(h2), h0));
    return k::conv2d(h3, params_[kOut].value, params_[kOut + 1].value);
}

}  // namespace lmd::diffusion
