#pragma once

#include <cstdint>
#include <string>

#include "lmd/data/dataset.hpp"

namespace lmd::data {

enum class Family { stripes, checker_texture, discs, gaussian_noise };
enum class Orientation { horizontal, vertical, mixed };

std::string to_string(Family family);
Family parse_family(const std::string& name);
std::string to_string(Orientation orientation);
Orientation parse_orientation(const std::string& name);

// Generator families (values in [-1, 1], single channel, side x side):
//   stripes          pixel = +1 if (coord + phase) mod period < period / 2 else -1, where coord is
//                    the row (horizontal) or column (vertical); period uniform in
//                    [period_min, period_max], phase uniform in [0, period); `mixed` picks the
//                    orientation per image.
//   checker_texture  pixel = +1 if floor((y + oy) / cell) + floor((x + ox) / cell) is even else -1,
//                    cell uniform in [cell_min, cell_max], offsets uniform in [0, 2 cell).
//   discs            -1 background with `disc_count` filled +1 discs, centers uniform over the
//                    image, radius uniform in [radius_min, radius_max].
//   gaussian_noise   N(0, noise_std) per pixel, clamped to [-1, 1].
struct SyntheticSpec {
    Family family = Family::stripes;
    std::size_t side = 16;
    std::size_t count = 200;
    std::uint64_t seed = 0;

    Orientation orientation = Orientation::mixed;
    std::size_t period_min = 4;
    std::size_t period_max = 8;

    std::size_t cell_min = 2;
    std::size_t cell_max = 4;

    std::size_t disc_count = 2;
    double radius_min = 2.0;
    double radius_max = 4.0;

    double noise_std = 1.0;

    void validate() const;
};

Dataset generate(const SyntheticSpec& spec);

}  // namespace lmd::data
