#include "lmd/masking/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lmd/data/pgm.hpp"

namespace lmd::masking {

Mask::Mask(std::size_t height, std::size_t width, std::uint8_t fill)
    : height_(height), width_(width), values_(height * width, fill) {
    if (height == 0 || width == 0) throw std::invalid_argument("mask: dimensions must be positive");
    if (fill > 1) throw std::invalid_argument("mask: values must be 0 or 1");
}

Mask Mask::from_values(std::size_t height, std::size_t width, const std::vector<float>& values) {
    if (values.size() != height * width) {
        throw std::invalid_argument("mask: " + std::to_string(values.size()) + " values for " +
                                    std::to_string(height) + "x" + std::to_string(width));
    }
    Mask m(height, width);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != 0.0f && values[i] != 1.0f) {
            throw std::invalid_argument("mask: non-binary value " + std::to_string(values[i]) + " at index " +
                                        std::to_string(i));
        }
        m.values_[i] = values[i] == 1.0f ? 1 : 0;
    }
    return m;
}

std::size_t Mask::masked_count() const {
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{0}));
}

Mask Mask::complement() const {
    Mask out = *this;
    for (auto& v : out.values_) v = 1 - v;
    return out;
}

std::string to_string(const MaskSpec& spec) {
    switch (spec.variant) {
        case MaskVariant::alternating_checkerboard:
            return "alt" + std::to_string(spec.grid);
        case MaskVariant::fixed_checkerboard:
            return "fixed" + std::to_string(spec.grid);
        case MaskVariant::random_patch:
            return "random" + std::to_string(spec.grid);
        case MaskVariant::center:
            return "center";
    }
    return "?";
}

MaskSpec parse_mask_spec(const std::string& name) {
    if (name == "center") return {MaskVariant::center, 8};
    const std::pair<const char*, MaskVariant> prefixes[] = {
        {"alt", MaskVariant::alternating_checkerboard},
        {"fixed", MaskVariant::fixed_checkerboard},
        {"random", MaskVariant::random_patch},
    };
    for (const auto& [prefix, variant] : prefixes) {
        const std::string p = prefix;
        if (name.rfind(p, 0) != 0 || name.size() == p.size()) continue;
        const std::string digits = name.substr(p.size());
        if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
            digits.size() > 6) {
            break;
        }
        const auto grid = static_cast<std::size_t>(std::stoul(digits));
        if (grid < 2) throw std::invalid_argument("mask: grid size must be at least 2 in '" + name + "'");
        return {variant, grid};
    }
    throw std::invalid_argument("mask: unknown mask '" + name + "' (expected alt<N>, fixed<N>, random<N> or center)");
}

namespace {

// Band index of every coordinate along an axis split into n floor-bands.
std::vector<std::size_t> bands(std::size_t extent, std::size_t n) {
    std::vector<std::size_t> out(extent);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t i = b * extent / n; i < (b + 1) * extent / n; ++i) out[i] = b;
    }
    return out;
}

void require_grid(const MaskSpec& spec, std::size_t height, std::size_t width) {
    if (spec.grid < 2) throw std::invalid_argument("mask: grid size must be at least 2");
    if (spec.grid > std::min(height, width)) {
        throw std::invalid_argument("mask: grid " + std::to_string(spec.grid) + " exceeds image side " +
                                    std::to_string(std::min(height, width)));
    }
}

}  // namespace

Mask get_mask(const MaskSpec& spec, std::size_t attempt, std::size_t height, std::size_t width,
              numerics::Rng& rng) {
    if (height == 0 || width == 0) throw std::invalid_argument("mask: dimensions must be positive");
    Mask mask(height, width);
    switch (spec.variant) {
        case MaskVariant::alternating_checkerboard:
        case MaskVariant::fixed_checkerboard: {
            require_grid(spec, height, width);
            const auto rows = bands(height, spec.grid);
            const auto cols = bands(width, spec.grid);
            const std::size_t parity = spec.variant == MaskVariant::alternating_checkerboard ? attempt % 2 : 0;
            for (std::size_t y = 0; y < height; ++y) {
                for (std::size_t x = 0; x < width; ++x) {
                    mask(y, x) = (rows[y] + cols[x] + parity) % 2 == 0 ? 1 : 0;
                }
            }
            break;
        }
        case MaskVariant::center: {
            const auto side = static_cast<std::size_t>(
                std::floor(std::sqrt(static_cast<double>(height) * static_cast<double>(width)) / 2.0));
            const std::size_t side_y = std::min(side, height), side_x = std::min(side, width);
            if (side_y == 0 || side_x == 0) throw std::invalid_argument("mask: image too small for a center mask");
            const std::size_t top = (height - side_y) / 2, left = (width - side_x) / 2;
            for (std::size_t y = top; y < top + side_y; ++y) {
                for (std::size_t x = left; x < left + side_x; ++x) mask(y, x) = 0;
            }
            break;
        }
        case MaskVariant::random_patch: {
            require_grid(spec, height, width);
            const std::size_t cells = spec.grid * spec.grid;
            const std::size_t hidden = (cells + 1) / 2;
            std::vector<std::size_t> order(cells);
            std::iota(order.begin(), order.end(), std::size_t{0});
            for (std::size_t i = 0; i < hidden; ++i) {
                std::swap(order[i], order[i + rng.below(cells - i)]);
            }
            std::vector<std::uint8_t> keep(cells, 1);
            for (std::size_t i = 0; i < hidden; ++i) keep[order[i]] = 0;
            const auto rows = bands(height, spec.grid);
            const auto cols = bands(width, spec.grid);
            for (std::size_t y = 0; y < height; ++y) {
                for (std::size_t x = 0; x < width; ++x) mask(y, x) = keep[rows[y] * spec.grid + cols[x]];
            }
            break;
        }
    }
    return mask;
}

double coverage_union(const MaskSpec& spec, std::size_t attempts, std::size_t height, std::size_t width,
                      std::uint64_t seed) {
    if (attempts == 0) throw std::invalid_argument("coverage_union: attempts must be >= 1");
    std::vector<std::uint8_t> covered(height * width, 0);
    for (std::size_t a = 0; a < attempts; ++a) {
        numerics::Rng rng = numerics::Rng::derive(seed, {a});
        const Mask m = get_mask(spec, a, height, width, rng);
        for (std::size_t i = 0; i < m.size(); ++i) covered[i] |= m.kept(i) ? 0 : 1;
    }
    const auto hit = std::count(covered.begin(), covered.end(), std::uint8_t{1});
    return static_cast<double>(hit) / static_cast<double>(covered.size());
}

void write_mask_pgm(const Mask& mask, const std::filesystem::path& path) {
    std::vector<std::uint8_t> pixels(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) pixels[i] = mask.kept(i) ? 255 : 0;
    data::write_pgm(path, mask.width(), mask.height(), pixels);
}

}  // namespace lmd::masking
