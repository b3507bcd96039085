#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "lmd/numerics/tensor.hpp"

namespace lmd::numerics {

// Seeded random stream identified by a 64-bit key. `split` derives an
// independent child stream from the key alone, so children do not depend on
// how many values the parent has produced.
class Rng {
   public:
    explicit Rng(std::uint64_t seed);

    // Stream for a path of identifiers, e.g. (seed, image, attempt).
    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

    Rng split(std::uint64_t tag) const;

    std::uint64_t key() const { return key_; }

    float normal();
    // Uniform in [0, 1).
    double uniform();
    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    // Uniform integer in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi);

    Tensor normal_tensor(const Shape& shape);

    std::mt19937_64& engine() { return engine_; }

   private:
    std::uint64_t key_;
    std::mt19937_64 engine_;
    std::normal_distribution<float> normal_{0.0f, 1.0f};
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace lmd::numerics
