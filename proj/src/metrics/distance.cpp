#include "lmd/metrics/distance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lmd/numerics/kernels.hpp"
#include "lmd/numerics/rng.hpp"

namespace lmd::metrics {

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::mse: return "mse";
        case MetricKind::ssim_distance: return "ssim_distance";
        case MetricKind::feature_distance: return "feature_distance";
    }
    return "?";
}

MetricKind parse_metric(const std::string& name) {
    if (name == "mse") return MetricKind::mse;
    if (name == "ssim" || name == "ssim_distance") return MetricKind::ssim_distance;
    if (name == "feature" || name == "feature_distance") return MetricKind::feature_distance;
    throw std::invalid_argument("metric: unknown metric '" + name + "' (mse, ssim_distance, feature_distance)");
}

double mse(const Tensor& a, const Tensor& b) {
    numerics::require_same_shape("mse", a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

namespace {

struct WindowStats {
    double mean_a, mean_b, var_a, var_b, cov;
};

double window_mean_product(const float* a, const float* b, std::size_t stride, std::size_t top, std::size_t left,
                           std::size_t wh, std::size_t ww) {
    double s = 0.0;
    for (std::size_t y = top; y < top + wh; ++y) {
        for (std::size_t x = left; x < left + ww; ++x) s += static_cast<double>(a[y * stride + x]) * b[y * stride + x];
    }
    return s / static_cast<double>(wh * ww);
}

double window_mean(const float* a, std::size_t stride, std::size_t top, std::size_t left, std::size_t wh,
                   std::size_t ww) {
    double s = 0.0;
    for (std::size_t y = top; y < top + wh; ++y) {
        for (std::size_t x = left; x < left + ww; ++x) s += a[y * stride + x];
    }
    return s / static_cast<double>(wh * ww);
}

// Covariance is E[ab] - E[a]E[b] for every pair, so var(a) uses the identical expression.
WindowStats window_stats(const float* a, const float* b, std::size_t stride, std::size_t top, std::size_t left,
                         std::size_t wh, std::size_t ww) {
    WindowStats s{};
    s.mean_a = window_mean(a, stride, top, left, wh, ww);
    s.mean_b = window_mean(b, stride, top, left, wh, ww);
    s.var_a = window_mean_product(a, a, stride, top, left, wh, ww) - s.mean_a * s.mean_a;
    s.var_b = window_mean_product(b, b, stride, top, left, wh, ww) - s.mean_b * s.mean_b;
    s.cov = window_mean_product(a, b, stride, top, left, wh, ww) - s.mean_a * s.mean_b;
    return s;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b, const SsimParams& params) {
    numerics::require_same_shape("ssim", a, b);
    if (a.rank() != 3) throw std::invalid_argument("ssim: expected [C,H,W], got " + numerics::to_string(a.shape()));
    if (params.window == 0) throw std::invalid_argument("ssim: window must be positive");
    const std::size_t channels = a.dim(0), h = a.dim(1), w = a.dim(2);
    const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
    const double c2 = std::pow(params.k2 * params.dynamic_range, 2);
    const bool global = h < params.window || w < params.window;
    const std::size_t wh = global ? h : params.window, ww = global ? w : params.window;

    double total = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
        const float* pa = a.raw() + c * h * w;
        const float* pb = b.raw() + c * h * w;
        double channel_sum = 0.0;
        std::size_t windows = 0;
        for (std::size_t top = 0; top + wh <= h; ++top) {
            for (std::size_t left = 0; left + ww <= w; ++left) {
                const WindowStats s = window_stats(pa, pb, w, top, left, wh, ww);
                const double num = (2.0 * s.mean_a * s.mean_b + c1) * (2.0 * s.cov + c2);
                const double den = (s.mean_a * s.mean_a + s.mean_b * s.mean_b + c1) * (s.var_a + s.var_b + c2);
                channel_sum += num / den;
                ++windows;
            }
        }
        total += channel_sum / static_cast<double>(windows);
    }
    return total / static_cast<double>(channels);
}

double ssim_distance(const Tensor& a, const Tensor& b, const SsimParams& params) {
    return std::clamp(1.0 - ssim(a, b, params), 0.0, 2.0);
}

FeatureExtractor::FeatureExtractor(std::size_t channels, std::uint64_t seed) : channels_(channels), seed_(seed) {
    if (channels == 0) throw std::invalid_argument("feature extractor: channels must be positive");
    numerics::Rng rng = numerics::Rng::derive(seed, {0xfea7});
    std::size_t in = channels;
    for (std::size_t width : kWidths) {
        Tensor w = rng.normal_tensor({width, in, 3, 3});
        const float stddev = std::sqrt(2.0f / static_cast<float>(in * 9));
        for (float& v : w.data()) v *= stddev;
        weights_.push_back(std::move(w));
        zero_bias_.emplace_back(numerics::Shape{width});
        in = width;
    }
}

std::vector<float> FeatureExtractor::features(const Tensor& image) const {
    if (image.rank() != 3 || image.dim(0) != channels_) {
        throw std::invalid_argument("feature extractor: expected [" + std::to_string(channels_) +
                                    ",H,W] input, got " + numerics::to_string(image.shape()));
    }
    namespace k = numerics::kernels;
    Tensor h = image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)});
    std::vector<float> out;
    for (std::size_t stage = 0; stage < weights_.size(); ++stage) {
        if (stage > 0) h = k::mean_pool2(h);
        h = k::silu(k::conv2d(h, weights_[stage], zero_bias_[stage]));
        out.insert(out.end(), h.data().begin(), h.data().end());
    }
    return out;
}

double feature_distance(const Tensor& a, const Tensor& b, const FeatureExtractor& extractor) {
    numerics::require_same_shape("feature_distance", a, b);
    const auto fa = extractor.features(a);
    const auto fb = extractor.features(b);
    if (fa == fb) return 0.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        dot += static_cast<double>(fa[i]) * fb[i];
        na += static_cast<double>(fa[i]) * fa[i];
        nb += static_cast<double>(fb[i]) * fb[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw std::domain_error("feature_distance: zero-norm feature vector (" +
                                std::string(na == 0.0 ? "first" : "second") + " image)");
    }
    return std::clamp(1.0 - dot / std::sqrt(na * nb), 0.0, 2.0);
}

DistanceMetric::DistanceMetric(MetricKind kind, std::size_t channels, std::uint64_t feature_seed, SsimParams ssim)
    : kind_(kind), ssim_(ssim) {
    if (kind == MetricKind::feature_distance) {
        extractor_ = std::make_shared<const FeatureExtractor>(channels, feature_seed);
    }
}

double DistanceMetric::operator()(const Tensor& a, const Tensor& b) const {
    switch (kind_) {
        case MetricKind::mse: return mse(a, b);
        case MetricKind::ssim_distance: return ssim_distance(a, b, ssim_);
        case MetricKind::feature_distance: return feature_distance(a, b, *extractor_);
    }
    throw std::logic_error("metric: unhandled kind");
}

}  // namespace lmd::metrics
