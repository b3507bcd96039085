#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lmd/numerics/tensor.hpp"

namespace lmd::metrics {

using numerics::Tensor;

enum class MetricKind { mse, ssim_distance, feature_distance };

std::string to_string(MetricKind kind);
MetricKind parse_metric(const std::string& name);

// Mean of squared elementwise differences.
double mse(const Tensor& a, const Tensor& b);

struct SsimParams {
    std::size_t window = 7;
    double dynamic_range = 2.0;  // values span [-1, 1]
    double k1 = 0.01;
    double k2 = 0.03;
};

// Mean SSIM over every fully contained window x window uniform window,
// averaged over channels. Images smaller than the window use one global window.
double ssim(const Tensor& a, const Tensor& b, const SsimParams& params = {});
// 1 - ssim(a, b), in [0, 2].
double ssim_distance(const Tensor& a, const Tensor& b, const SsimParams& params = {});

// Frozen random-weight feature stack used as a self-contained perceptual
// distance: three 3x3 conv stages (8, 16, 32 channels) with SiLU, 2x2 mean
// pooling between stages. Weights ~ N(0, 2 / fan_in) from `seed`, no biases.
class FeatureExtractor {
   public:
    static constexpr std::array<std::size_t, 3> kWidths{8, 16, 32};

    FeatureExtractor(std::size_t channels, std::uint64_t seed);

    std::size_t channels() const { return channels_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<Tensor>& weights() const { return weights_; }

    // Concatenated stage outputs for one [C, H, W] image.
    std::vector<float> features(const Tensor& image) const;

   private:
    std::size_t channels_;
    std::uint64_t seed_;
    std::vector<Tensor> weights_;
    std::vector<Tensor> zero_bias_;
};

inline constexpr std::uint64_t kDefaultFeatureSeed = 7;

// 1 - cosine similarity of the two feature vectors, in [0, 2]. Zero-norm
// features are rejected.
double feature_distance(const Tensor& a, const Tensor& b, const FeatureExtractor& extractor);

// Distance(x, x') of the detector: a metric kind plus its parameters.
class DistanceMetric {
   public:
    DistanceMetric(MetricKind kind, std::size_t channels, std::uint64_t feature_seed = kDefaultFeatureSeed,
                   SsimParams ssim = {});

    MetricKind kind() const { return kind_; }
    double operator()(const Tensor& a, const Tensor& b) const;

   private:
    MetricKind kind_;
    SsimParams ssim_;
    std::shared_ptr<const FeatureExtractor> extractor_;
};

}  // namespace lmd::metrics
