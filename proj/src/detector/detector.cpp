#include "lmd/detector/detector.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <stdexcept>
#include <thread>

#include "lmd/diffusion/sampler.hpp"
#include "lmd/metrics/roc.hpp"

namespace lmd::detector {

std::string to_string(LiftMode mode) { return mode == LiftMode::mask_inpaint ? "inpaint" : "denoise"; }

LiftMode parse_lift(const std::string& name) {
    if (name == "inpaint" || name == "mask_inpaint") return LiftMode::mask_inpaint;
    if (name == "denoise" || name == "diffuse_denoise") return LiftMode::diffuse_denoise;
    throw std::invalid_argument("detector: unknown lift '" + name + "' (inpaint, denoise)");
}

std::string to_string(Label label) {
    switch (label) {
        case Label::in: return "in";
        case Label::out: return "out";
        case Label::unknown: return "unknown";
    }
    return "?";
}

Label parse_label(const std::string& name) {
    if (name == "in") return Label::in;
    if (name == "out") return Label::out;
    if (name == "unknown") return Label::unknown;
    throw std::invalid_argument("detector: unknown label '" + name + "'");
}

std::size_t DetectorConfig::resolved_lift_step(const NoiseSchedule& schedule) const {
    return lift_step.value_or(schedule.steps() / 2);
}

void DetectorConfig::validate(const NoiseSchedule& schedule) const {
    if (attempts < 1) throw std::invalid_argument("detector: attempts must be >= 1");
    if (lift == LiftMode::diffuse_denoise) {
        const std::size_t t = resolved_lift_step(schedule);
        if (t == 0) throw std::invalid_argument("detector: lift step 0 performs no lift");
        if (t > schedule.steps()) {
            throw std::invalid_argument("detector: lift step " + std::to_string(t) + " outside [1, " +
                                        std::to_string(schedule.steps()) + "]");
        }
    }
}

double median(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("median: no values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    if (sorted.size() % 2 == 1) return sorted[mid];
    return 0.5 * (sorted[mid - 1] + sorted[mid]);
}

namespace {

std::vector<Rng> attempt_streams(const Rng& rng, std::size_t attempts) {
    std::vector<Rng> out;
    out.reserve(attempts);
    for (std::size_t i = 0; i < attempts; ++i) out.push_back(rng.split(i));
    return out;
}

}  // namespace

std::vector<masking::Mask> attempt_masks(const Tensor& image, const DetectorConfig& config, const Rng& rng) {
    if (image.rank() != 3) throw std::invalid_argument("detector: expected a [C,H,W] image");
    auto streams = attempt_streams(rng, config.attempts);
    std::vector<masking::Mask> masks;
    masks.reserve(config.attempts);
    for (std::size_t i = 0; i < config.attempts; ++i) {
        try {
            masks.push_back(masking::get_mask(config.mask, i, image.dim(1), image.dim(2), streams[i]));
        } catch (const std::exception& e) {
            throw std::runtime_error("attempt " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return masks;
}

std::vector<Tensor> reconstruct(const Tensor& image, const EpsilonModel& model, const NoiseSchedule& schedule,
                                const DetectorConfig& config, const Rng& rng) {
    config.validate(schedule);
    auto streams = attempt_streams(rng, config.attempts);
    const std::vector<Tensor> copies(config.attempts, image);
    if (config.lift == LiftMode::diffuse_denoise) {
        return diffusion::denoise_lift_batch(copies, config.resolved_lift_step(schedule), model, schedule, streams);
    }
    std::vector<masking::Mask> masks;
    masks.reserve(config.attempts);
    for (std::size_t i = 0; i < config.attempts; ++i) {
        try {
            masks.push_back(masking::get_mask(config.mask, i, image.dim(1), image.dim(2), streams[i]));
        } catch (const std::exception& e) {
            throw std::runtime_error("attempt " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return diffusion::inpaint_batch(copies, masks, model, schedule, streams);
}

ScoreReport report_from(std::size_t image_index, Label label, const Tensor& image,
                        std::span<const Tensor> reconstructions, const metrics::DistanceMetric& metric) {
    ScoreReport report;
    report.image_index = image_index;
    report.label = label;
    for (std::size_t i = 0; i < reconstructions.size(); ++i) {
        try {
            report.distances.push_back(metric(image, reconstructions[i]));
        } catch (const std::exception& e) {
            throw std::runtime_error("attempt " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    report.score = median(report.distances);
    return report;
}

ScoreReport ood_score(const Tensor& image, const EpsilonModel& model, const NoiseSchedule& schedule,
                      const DetectorConfig& config, const Rng& rng) {
    if (config.lift != LiftMode::mask_inpaint) throw std::invalid_argument("ood_score: lift mode must be inpaint");
    const auto recons = reconstruct(image, model, schedule, config, rng);
    const metrics::DistanceMetric metric(config.metric, image.dim(0), config.feature_seed);
    return report_from(0, Label::unknown, image, recons, metric);
}

ScoreReport denoise_lift_score(const Tensor& image, const EpsilonModel& model, const NoiseSchedule& schedule,
                               const DetectorConfig& config, const Rng& rng) {
    if (config.lift != LiftMode::diffuse_denoise) {
        throw std::invalid_argument("denoise_lift_score: lift mode must be denoise");
    }
    const auto recons = reconstruct(image, model, schedule, config, rng);
    const metrics::DistanceMetric metric(config.metric, image.dim(0), config.feature_seed);
    return report_from(0, Label::unknown, image, recons, metric);
}

Rng image_stream(std::uint64_t seed, std::uint64_t stream_id) { return Rng::derive(seed, {stream_id}); }

std::optional<double> auc_for_prefix(const std::vector<ScoreReport>& reports, std::size_t attempts) {
    std::vector<double> in, out;
    for (const auto& r : reports) {
        const std::size_t k = std::min(attempts, r.distances.size());
        const double s = median(std::span<const double>(r.distances.data(), k));
        if (r.label == Label::in) in.push_back(s);
        if (r.label == Label::out) out.push_back(s);
    }
    if (in.empty() || out.empty()) return std::nullopt;
    return metrics::roc_auc(in, out);
}

std::vector<DatasetScores> score_dataset_metrics(std::span<const Tensor> images, std::span<const Label> labels,
                                                 const EpsilonModel& model, const NoiseSchedule& schedule,
                                                 const DetectorConfig& config,
                                                 std::span<const metrics::MetricKind> metric_kinds,
                                                 const ScoreOptions& options) {
    if (images.empty()) throw std::invalid_argument("score_dataset: no images");
    if (labels.size() != images.size()) throw std::invalid_argument("score_dataset: one label per image required");
    if (!options.stream_ids.empty() && options.stream_ids.size() != images.size()) {
        throw std::invalid_argument("score_dataset: one stream id per image required");
    }
    if (metric_kinds.empty()) throw std::invalid_argument("score_dataset: no metrics requested");
    config.validate(schedule);

    std::vector<metrics::DistanceMetric> metric_objs;
    for (auto kind : metric_kinds) metric_objs.emplace_back(kind, images.front().dim(0), config.feature_seed);

    const std::size_t count = images.size();
    std::vector<std::vector<ScoreReport>> per_metric(metric_kinds.size(), std::vector<ScoreReport>(count));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                const std::uint64_t id = options.stream_ids.empty() ? i : options.stream_ids[i];
                const auto recons = reconstruct(images[i], model, schedule, config, image_stream(options.seed, id));
                for (std::size_t m = 0; m < metric_objs.size(); ++m) {
                    per_metric[m][i] = report_from(i, labels[i], images[i], recons, metric_objs[m]);
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, count);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error("image " + std::to_string(i) + ": " + e.what());
        }
    }

    const bool has_in = std::find(labels.begin(), labels.end(), Label::in) != labels.end();
    const bool has_out = std::find(labels.begin(), labels.end(), Label::out) != labels.end();
    std::vector<DatasetScores> results;
    for (std::size_t m = 0; m < metric_kinds.size(); ++m) {
        DatasetScores ds;
        ds.metric = metric_kinds[m];
        ds.reports = std::move(per_metric[m]);
        if (has_in && has_out) {
            ds.auc = auc_for_prefix(ds.reports, config.attempts);
        } else {
            ds.notice = "AUC omitted: scores need both in-domain and out-of-domain labels";
        }
        results.push_back(std::move(ds));
    }
    return results;
}

DatasetScores score_dataset(std::span<const Tensor> images, std::span<const Label> labels,
                            const EpsilonModel& model, const NoiseSchedule& schedule, const DetectorConfig& config,
                            const ScoreOptions& options) {
    const metrics::MetricKind kinds[] = {config.metric};
    return std::move(score_dataset_metrics(images, labels, model, schedule, config, kinds, options).front());
}

}  // namespace lmd::detector
