#include "lmd/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lmd/numerics/rng.hpp"

namespace lmd::data {

std::string to_string(Family family) {
    switch (family) {
        case Family::stripes: return "stripes";
        case Family::checker_texture: return "checker_texture";
        case Family::discs: return "discs";
        case Family::gaussian_noise: return "gaussian_noise";
    }
    return "?";
}

Family parse_family(const std::string& name) {
    for (auto f : {Family::stripes, Family::checker_texture, Family::discs, Family::gaussian_noise}) {
        if (to_string(f) == name) return f;
    }
    throw std::invalid_argument("synthetic: unknown family '" + name +
                                "' (stripes, checker_texture, discs, gaussian_noise)");
}

std::string to_string(Orientation orientation) {
    switch (orientation) {
        case Orientation::horizontal: return "horizontal";
        case Orientation::vertical: return "vertical";
        case Orientation::mixed: return "mixed";
    }
    return "?";
}

Orientation parse_orientation(const std::string& name) {
    for (auto o : {Orientation::horizontal, Orientation::vertical, Orientation::mixed}) {
        if (to_string(o) == name) return o;
    }
    throw std::invalid_argument("synthetic: unknown orientation '" + name + "'");
}

void SyntheticSpec::validate() const {
    if (side < 8) throw std::invalid_argument("synthetic: side must be >= 8");
    if (count < 1) throw std::invalid_argument("synthetic: count must be >= 1");
    if (period_min < 2 || period_max < period_min) throw std::invalid_argument("synthetic: bad period range");
    if (cell_min < 1 || cell_max < cell_min) throw std::invalid_argument("synthetic: bad cell range");
    if (!(radius_min > 0.0) || radius_max < radius_min) throw std::invalid_argument("synthetic: bad radius range");
    if (!(noise_std > 0.0)) throw std::invalid_argument("synthetic: noise_std must be positive");
}

namespace {

using numerics::Rng;

Tensor stripes(const SyntheticSpec& spec, Rng& rng) {
    bool horizontal = spec.orientation == Orientation::horizontal;
    if (spec.orientation == Orientation::mixed) horizontal = rng.below(2) == 0;
    const auto period = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(spec.period_min), static_cast<std::int64_t>(spec.period_max)));
    const std::size_t phase = rng.below(period);
    Tensor img({1, spec.side, spec.side});
    for (std::size_t y = 0; y < spec.side; ++y) {
        for (std::size_t x = 0; x < spec.side; ++x) {
            const std::size_t coord = horizontal ? y : x;
            img[y * spec.side + x] = (coord + phase) % period < period / 2 ? 1.0f : -1.0f;
        }
    }
    return img;
}

Tensor checker(const SyntheticSpec& spec, Rng& rng) {
    const auto cell = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(spec.cell_min), static_cast<std::int64_t>(spec.cell_max)));
    const std::size_t oy = rng.below(2 * cell), ox = rng.below(2 * cell);
    Tensor img({1, spec.side, spec.side});
    for (std::size_t y = 0; y < spec.side; ++y) {
        for (std::size_t x = 0; x < spec.side; ++x) {
            img[y * spec.side + x] = ((y + oy) / cell + (x + ox) / cell) % 2 == 0 ? 1.0f : -1.0f;
        }
    }
    return img;
}

Tensor discs(const SyntheticSpec& spec, Rng& rng) {
    Tensor img({1, spec.side, spec.side}, -1.0f);
    const auto side = static_cast<double>(spec.side);
    for (std::size_t d = 0; d < spec.disc_count; ++d) {
        const double cy = rng.uniform() * side, cx = rng.uniform() * side;
        const double r = spec.radius_min + (spec.radius_max - spec.radius_min) * rng.uniform();
        for (std::size_t y = 0; y < spec.side; ++y) {
            for (std::size_t x = 0; x < spec.side; ++x) {
                const double dy = static_cast<double>(y) + 0.5 - cy, dx = static_cast<double>(x) + 0.5 - cx;
                if (dy * dy + dx * dx <= r * r) img[y * spec.side + x] = 1.0f;
            }
        }
    }
    return img;
}

Tensor noise(const SyntheticSpec& spec, Rng& rng) {
    Tensor img({1, spec.side, spec.side});
    const auto scale = static_cast<float>(spec.noise_std);
    for (float& v : img.data()) v = std::clamp(rng.normal() * scale, -1.0f, 1.0f);
    return img;
}

}  // namespace

Dataset generate(const SyntheticSpec& spec) {
    spec.validate();
    Dataset ds;
    ds.source = "synthetic:" + to_string(spec.family) + ":seed=" + std::to_string(spec.seed);
    ds.normalization = "native[-1,1]";
    ds.images.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        Rng rng = Rng::derive(spec.seed, {static_cast<std::uint64_t>(spec.family), i});
        switch (spec.family) {
            case Family::stripes: ds.images.push_back(stripes(spec, rng)); break;
            case Family::checker_texture: ds.images.push_back(checker(spec, rng)); break;
            case Family::discs: ds.images.push_back(discs(spec, rng)); break;
            case Family::gaussian_noise: ds.images.push_back(noise(spec, rng)); break;
        }
    }
    return ds;
}

}  // namespace lmd::data
