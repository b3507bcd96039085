#include "lmd/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace lmd::numerics {

std::string to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void check_extents(const Shape& shape) {
    for (auto extent : shape) {
        if (extent == 0) {
            throw std::invalid_argument("tensor: zero extent in shape " + to_string(shape));
        }
    }
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
    check_extents(shape_);
    data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents(shape_);
    if (data_.size() != element_count(shape_)) {
        throw std::invalid_argument("tensor: " + std::to_string(data_.size()) +
                                    " values do not fill shape " + to_string(shape_));
    }
}

Tensor Tensor::scalar(float value) { return Tensor({1}, std::vector<float>{value}); }

Tensor Tensor::vector(std::initializer_list<float> values) {
    return Tensor({values.size()}, std::vector<float>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw std::out_of_range("tensor: axis " + std::to_string(axis) + " out of range for " +
                                to_string(shape_));
    }
    return shape_[axis];
}

float Tensor::item() const {
    if (data_.size() != 1) {
        throw std::invalid_argument("tensor: item() on non-scalar shape " + to_string(shape_));
    }
    return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const& {
    Tensor copy = *this;
    return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
    if (element_count(shape) != data_.size()) {
        throw std::invalid_argument("tensor: cannot reshape " + to_string(shape_) + " to " +
                                    to_string(shape));
    }
    return Tensor(std::move(shape), std::move(data_));
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

bool all_finite(const Tensor& t) {
    return std::all_of(t.data().begin(), t.data().end(), [](float v) { return std::isfinite(v); });
}

float max_abs_difference(const Tensor& a, const Tensor& b) {
    require_same_shape("max_abs_difference", a, b);
    float worst = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
    return worst;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                                    " vs " + to_string(b.shape()));
    }
}

}  // namespace lmd::numerics
