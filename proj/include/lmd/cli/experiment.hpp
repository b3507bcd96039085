#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmd/data/dataset.hpp"
#include "lmd/data/synthetic.hpp"
#include "lmd/detector/detector.hpp"
#include "lmd/diffusion/model.hpp"
#include "lmd/diffusion/trainer.hpp"

namespace lmd::cli {

using Json = nlohmann::ordered_json;

// Where a dataset comes from: a synthetic generator or an IDX image file.
// A synthetic source without an explicit seed draws one from the global seed
// and its role, so training and test sets never share a stream.
struct SourceSpec {
    enum class Kind { synthetic, idx } kind = Kind::synthetic;
    data::SyntheticSpec synthetic;
    std::optional<std::uint64_t> seed;
    std::filesystem::path path;
    std::optional<std::size_t> limit;
};

enum class SourceRole : std::uint64_t { train = 1, test_in = 2, test_out = 3 };

struct ExperimentConfig {
    std::uint64_t seed = 0;
    SourceSpec train_data;
    SourceSpec test_in;
    SourceSpec test_out;
    diffusion::TrainConfig train;
    diffusion::Architecture model;
    detector::DetectorConfig detector;
    std::size_t workers = 1;
    std::size_t grid_images = 8;
    std::size_t sample_count = 16;
    std::string ablate_axis = "mask";
    std::filesystem::path checkpoint;
    std::filesystem::path eval_in_csv;
    std::filesystem::path eval_out_csv;

    ExperimentConfig();
};

Json to_json(const ExperimentConfig& config);
// Missing fields keep their current values in `config`; unknown keys are rejected.
void merge_json(ExperimentConfig& config, const Json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

std::uint64_t source_seed(const SourceSpec& source, std::uint64_t global_seed, SourceRole role);
data::Dataset load_source(const SourceSpec& source, std::uint64_t global_seed, SourceRole role);

// Train seed used by the trainer and model initialization.
std::uint64_t train_seed(const ExperimentConfig& config);

// Scores of the in-domain and out-of-domain test sets for several metrics,
// all computed from one shared set of reconstructions per image.
struct PairScores {
    metrics::MetricKind metric;
    std::vector<detector::ScoreReport> in;
    std::vector<detector::ScoreReport> out;

    double auc() const;
    double auc_for_attempts(std::size_t attempts) const;
};

// Out-of-domain images use stream ids offset by kOutStreamOffset so that no
// image shares a stream with an in-domain image.
inline constexpr std::uint64_t kOutStreamOffset = std::uint64_t{1} << 32;

std::vector<PairScores> score_pair(const data::Dataset& in, const data::Dataset& out,
                                   const diffusion::EpsilonModel& model, const diffusion::NoiseSchedule& schedule,
                                   const detector::DetectorConfig& config,
                                   const std::vector<metrics::MetricKind>& metric_kinds, std::uint64_t seed,
                                   std::size_t workers);

}  // namespace lmd::cli
