#include "lmd/data/pgm.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace lmd::data {

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& pixels) {
    if (pixels.size() != width * height) throw std::invalid_argument("pgm: pixel count does not match size");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot open " + path.string() + " for writing");
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!out) throw std::runtime_error("pgm: write failed for " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path.string());
    std::string magic;
    GrayImage img;
    int maxval = 0;
    in >> magic >> img.width >> img.height >> maxval;
    if (magic != "P5" || maxval != 255 || !in) throw std::runtime_error("pgm: unsupported header in " + path.string());
    in.get();
    img.pixels.resize(img.width * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw std::runtime_error("pgm: truncated payload in " + path.string());
    }
    return img;
}

std::uint8_t to_byte(float value) {
    const double scaled = std::floor((static_cast<double>(value) + 1.0) * 127.5 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

GrayImage tile_grid(const std::vector<numerics::Tensor>& images, std::size_t columns) {
    if (images.empty()) throw std::invalid_argument("pgm grid: no images");
    if (columns == 0) throw std::invalid_argument("pgm grid: columns must be positive");
    const auto& shape = images.front().shape();
    if (shape.size() != 3 || shape[0] != 1) {
        throw std::invalid_argument("pgm grid: expected single-channel [1,H,W] images, got " +
                                    numerics::to_string(shape));
    }
    for (const auto& img : images) {
        if (img.shape() != shape) throw std::invalid_argument("pgm grid: images differ in shape");
    }
    const std::size_t h = shape[1], w = shape[2];
    const std::size_t cols = std::min(columns, images.size());
    const std::size_t rows = (images.size() + cols - 1) / cols;
    GrayImage grid;
    grid.width = cols * w + (cols - 1);
    grid.height = rows * h + (rows - 1);
    grid.pixels.assign(grid.width * grid.height, 255);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::size_t top = (i / cols) * (h + 1), left = (i % cols) * (w + 1);
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                grid.pixels[(top + y) * grid.width + left + x] = to_byte(images[i][y * w + x]);
            }
        }
    }
    return grid;
}

void write_pgm_grid(const std::vector<numerics::Tensor>& images, std::size_t columns,
                    const std::filesystem::path& path) {
    const GrayImage grid = tile_grid(images, columns);
    write_pgm(path, grid.width, grid.height, grid.pixels);
}

}  // namespace lmd::data
