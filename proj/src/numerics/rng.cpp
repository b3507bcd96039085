#include "lmd/numerics/rng.hpp"

#include <stdexcept>

namespace lmd::numerics {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : key_(seed), engine_(mix64(seed)) {}

Rng Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = mix64(seed);
    for (auto id : path) key = mix64(key ^ mix64(id + 0x632be59bd9b4e019ULL));
    return Rng(key);
}

Rng Rng::split(std::uint64_t tag) const { return Rng(mix64(key_ ^ mix64(tag + 0x2545f4914f6cdd1dULL))); }

float Rng::normal() { return normal_(engine_); }

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("rng: below(0)");
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
}

std::int64_t Rng::between(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("rng: empty range");
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
}

Tensor Rng::normal_tensor(const Shape& shape) {
    Tensor t(shape);
    for (float& v : t.data()) v = normal();
    return t;
}

}  // namespace lmd::numerics
