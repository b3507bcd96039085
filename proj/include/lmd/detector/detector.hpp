#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmd/diffusion/model.hpp"
#include "lmd/diffusion/schedule.hpp"
#include "lmd/masking/mask.hpp"
#include "lmd/metrics/distance.hpp"
#include "lmd/numerics/rng.hpp"

namespace lmd::detector {

using diffusion::EpsilonModel;
using diffusion::NoiseSchedule;
using numerics::Rng;
using numerics::Tensor;

enum class LiftMode { mask_inpaint, diffuse_denoise };
enum class Label { in, out, unknown };

std::string to_string(LiftMode mode);
LiftMode parse_lift(const std::string& name);  // "inpaint" | "denoise"
std::string to_string(Label label);
Label parse_label(const std::string& name);

struct DetectorConfig {
    std::size_t attempts = 10;
    masking::MaskSpec mask{masking::MaskVariant::alternating_checkerboard, 8};
    metrics::MetricKind metric = metrics::MetricKind::feature_distance;
    LiftMode lift = LiftMode::mask_inpaint;
    // Diffuse-denoise lift step t*; unset selects T / 2. Zero is rejected.
    std::optional<std::size_t> lift_step;
    std::uint64_t feature_seed = metrics::kDefaultFeatureSeed;

    std::size_t resolved_lift_step(const NoiseSchedule& schedule) const;
    void validate(const NoiseSchedule& schedule) const;
};

struct ScoreReport {
    std::size_t image_index = 0;
    Label label = Label::unknown;
    std::vector<double> distances;  // one per attempt, in attempt order
    double score = 0.0;             // median of `distances`
};

// Median; even lengths average the two middle order statistics.
double median(std::span<const double> values);

// One lifted-and-mapped reconstruction per attempt. Attempt i draws from
// rng.split(i): the mask (attempt index i) comes first, then the inpainting.
std::vector<Tensor> reconstruct(const Tensor& image, const EpsilonModel& model, const NoiseSchedule& schedule,
                                const DetectorConfig& config, const Rng& rng);

// Masks used by reconstruct() for the same rng (mask_inpaint mode only).
std::vector<masking::Mask> attempt_masks(const Tensor& image, const DetectorConfig& config, const Rng& rng);

ScoreReport report_from(std::size_t image_index, Label label, const Tensor& image,
                        std::span<const Tensor> reconstructions, const metrics::DistanceMetric& metric);

// Inpainting lift; requires config.lift == mask_inpaint.
ScoreReport ood_score(const Tensor& image, const EpsilonModel& model, const NoiseSchedule& schedule,
                      const DetectorConfig& config, const Rng& rng);
// Diffusion lift to step t*, denoising map; requires config.lift == diffuse_denoise.
ScoreReport denoise_lift_score(const Tensor& image, const EpsilonModel& model, const NoiseSchedule& schedule,
                               const DetectorConfig& config, const Rng& rng);

struct DatasetScores {
    metrics::MetricKind metric = metrics::MetricKind::feature_distance;
    std::vector<ScoreReport> reports;
    std::optional<double> auc;
    std::string notice;  // why AUC is absent, if it is
};

struct ScoreOptions {
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    // Per-image stream identifiers; defaults to the image index.
    std::vector<std::uint64_t> stream_ids;
};

// Rng stream for one image: derived from (seed, stream id).
Rng image_stream(std::uint64_t seed, std::uint64_t stream_id);

// Scores every image (fan-out over `workers` threads; identical output for
// any worker count). AUC is computed when both in and out labels are present.
DatasetScores score_dataset(std::span<const Tensor> images, std::span<const Label> labels,
                            const EpsilonModel& model, const NoiseSchedule& schedule, const DetectorConfig& config,
                            const ScoreOptions& options);

// As score_dataset, but evaluates several metrics on the same reconstructions.
// The entry for a metric equals score_dataset with config.metric set to it.
std::vector<DatasetScores> score_dataset_metrics(std::span<const Tensor> images, std::span<const Label> labels,
                                                 const EpsilonModel& model, const NoiseSchedule& schedule,
                                                 const DetectorConfig& config,
                                                 std::span<const metrics::MetricKind> metric_kinds,
                                                 const ScoreOptions& options);

// AUC over label groups using the median of the first `attempts` distances.
std::optional<double> auc_for_prefix(const std::vector<ScoreReport>& reports, std::size_t attempts);

}  // namespace lmd::detector
