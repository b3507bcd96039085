#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lmd::numerics {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

// Dense row-major float32 tensor. Plain value type: copies are deep.
class Tensor {
   public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    static Tensor scalar(float value);
    static Tensor vector(std::initializer_list<float> values);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }
    float* raw() { return data_.data(); }
    const float* raw() const { return data_.data(); }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // Value of a single-element tensor.
    float item() const;

    // Same data, new shape with equal element count.
    Tensor reshaped(Shape shape) const&;
    Tensor reshaped(Shape shape) &&;

    void fill(float value);

    bool operator==(const Tensor& other) const = default;

   private:
    Shape shape_;
    std::vector<float> data_;
};

bool all_finite(const Tensor& t);
float max_abs_difference(const Tensor& a, const Tensor& b);

// Throws std::invalid_argument naming `op` and both shapes if they differ.
void require_same_shape(const char* op, const Tensor& a, const Tensor& b);

}  // namespace lmd::numerics
