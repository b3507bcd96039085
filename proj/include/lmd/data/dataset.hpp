#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lmd/numerics/tensor.hpp"

namespace lmd::data {

using numerics::Tensor;

// Uniform-shape [C, H, W] images with values in [-1, 1].
struct Dataset {
    std::vector<Tensor> images;
    std::string source;
    std::string normalization;

    std::size_t size() const { return images.size(); }
    numerics::Shape image_shape() const;
    // Throws if shapes differ or any value lies outside [-1, 1].
    void validate() const;
    Dataset take(std::size_t count) const;
};

float normalize_byte(std::uint8_t b);

// Raw IDX unsigned-byte tensor: dims are big-endian on disk.
struct IdxFile {
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> payload;
};

IdxFile parse_idx(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> serialize_idx(const IdxFile& file);

IdxFile read_idx_file(const std::filesystem::path& path);
void write_idx_file(const IdxFile& file, const std::filesystem::path& path);

// Reads a 3-D image file (magic 0x00000803) as single-channel images
// normalized with x / 127.5 - 1.
Dataset read_idx(const std::filesystem::path& path);
Dataset idx_to_dataset(const IdxFile& file, const std::string& source);

}  // namespace lmd::data
