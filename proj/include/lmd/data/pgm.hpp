#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lmd/numerics/tensor.hpp"

namespace lmd::data {

struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major
};

// Binary P5, maxval 255.
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& pixels);
GrayImage read_pgm(const std::filesystem::path& path);

// [-1, 1] -> [0, 255] via (x + 1) * 127.5 rounded half up, clamped.
std::uint8_t to_byte(float value);

// Tiles single-channel [1, H, W] images row-major into a grid with
// `columns` tiles per row, separated by 1-pixel white lines.
GrayImage tile_grid(const std::vector<numerics::Tensor>& images, std::size_t columns);
void write_pgm_grid(const std::vector<numerics::Tensor>& images, std::size_t columns,
                    const std::filesystem::path& path);

}  // namespace lmd::data
