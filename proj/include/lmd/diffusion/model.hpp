#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "lmd/numerics/graph.hpp"

namespace lmd::diffusion {

using numerics::Graph;
using numerics::ParameterSet;
using numerics::Tensor;
using numerics::Var;

struct Architecture {
    std::size_t channels = 1;
    std::size_t height = 16;
    std::size_t width = 16;
    // Block widths: full resolution, half resolution (x2), full resolution.
    std::array<std::size_t, 4> widths{16, 32, 32, 16};
    std::size_t time_dim = 32;

    numerics::Shape image_shape() const { return {channels, height, width}; }
    bool operator==(const Architecture&) const = default;
};

std::string describe(const Architecture& arch);

// Noise-prediction network eps(x_t, t): a four-block convolutional U-shape
// with one 2x2 pooling level, a channel-concatenation skip, SiLU activations
// and a per-block affine projection of the sinusoidal time embedding.
class EpsilonModel {
   public:
    EpsilonModel(Architecture arch, std::uint64_t seed);

    const Architecture& architecture() const { return arch_; }
    std::uint64_t seed() const { return seed_; }
    ParameterSet& parameters() { return params_; }
    const ParameterSet& parameters() const { return params_; }

    // Recorded forward pass over a batch [N, C, H, W]; `steps` holds one t per sample.
    Var forward(Graph& graph, Var batch, std::span<const std::size_t> steps);

    // Same computation without a graph.
    Tensor predict(const Tensor& batch, std::span<const std::size_t> steps) const;

   private:
    Tensor embed_steps(std::span<const std::size_t> steps) const;
    void check_input(const Tensor& batch, std::span<const std::size_t> steps) const;

    Architecture arch_;
    std::uint64_t seed_;
    ParameterSet params_;
};

}  // namespace lmd::diffusion
