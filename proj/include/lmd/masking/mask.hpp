#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lmd/numerics/rng.hpp"

namespace lmd::masking {

// H x W binary grid: 1 keeps the pixel, 0 marks it for inpainting.
class Mask {
   public:
    Mask(std::size_t height, std::size_t width, std::uint8_t fill = 1);
    // Rejects any value other than 0 or 1.
    static Mask from_values(std::size_t height, std::size_t width, const std::vector<float>& values);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return values_.size(); }

    std::uint8_t operator()(std::size_t y, std::size_t x) const { return values_[y * width_ + x]; }
    std::uint8_t& operator()(std::size_t y, std::size_t x) { return values_[y * width_ + x]; }
    bool kept(std::size_t i) const { return values_[i] != 0; }
    const std::vector<std::uint8_t>& values() const { return values_; }

    std::size_t masked_count() const;
    Mask complement() const;

    bool operator==(const Mask&) const = default;

   private:
    std::size_t height_;
    std::size_t width_;
    std::vector<std::uint8_t> values_;
};

enum class MaskVariant { alternating_checkerboard, fixed_checkerboard, center, random_patch };

struct MaskSpec {
    MaskVariant variant = MaskVariant::alternating_checkerboard;
    std::size_t grid = 8;  // N for checkerboards and the random-patch grid

    bool operator==(const MaskSpec&) const = default;
};

// Short names: alt<N>, fixed<N>, random<N>, center (e.g. "alt8").
std::string to_string(const MaskSpec& spec);
MaskSpec parse_mask_spec(const std::string& name);

// Mask for one attempt. Checkerboards split each axis into N floor-bands and
// keep patch (i, j) iff (i + j + a) is even, with a = attempt for the
// alternating variant and 0 for the fixed one. The centered square has side
// floor(sqrt(H W) / 2). Random patch inpaints ceil(N^2 / 2) grid cells drawn
// without replacement from `rng`.
Mask get_mask(const MaskSpec& spec, std::size_t attempt, std::size_t height, std::size_t width,
              numerics::Rng& rng);

// Fraction of pixels inpainted by at least one of `attempts` masks.
// Random-patch masks are drawn from a stream seeded with `seed`.
double coverage_union(const MaskSpec& spec, std::size_t attempts, std::size_t height, std::size_t width,
                      std::uint64_t seed = 0);

// Binary P5 PGM, 0 -> 0 and 1 -> 255.
void write_mask_pgm(const Mask& mask, const std::filesystem::path& path);

}  // namespace lmd::masking
