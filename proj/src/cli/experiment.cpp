#include "lmd/cli/experiment.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <stdexcept>

#include "lmd/metrics/roc.hpp"
#include "lmd/numerics/rng.hpp"

namespace lmd::cli {

namespace {

SourceSpec synthetic_source(data::Family family) {
    SourceSpec s;
    s.synthetic.family = family;
    return s;
}

// Shortest decimal form of a float, widened to double for the JSON echo.
double float_for_json(float v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::stod(std::string(buf, res.ptr));
}

void reject_unknown(const Json& doc, std::initializer_list<const char*> keys, const std::string& where) {
    if (!doc.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : doc.items()) {
        if (!allowed.count(key)) throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read_field(const Json& doc, const char* key, T& target, const std::string& where) {
    if (!doc.contains(key)) return;
    try {
        target = doc.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("config: bad value for " + where + "." + key);
    }
}

Json source_to_json(const SourceSpec& s) {
    Json j;
    if (s.kind == SourceSpec::Kind::idx) {
        j["kind"] = "idx";
        j["path"] = s.path.string();
        if (s.limit) j["limit"] = *s.limit;
        return j;
    }
    const auto& g = s.synthetic;
    j["kind"] = "synthetic";
    j["family"] = data::to_string(g.family);
    j["side"] = g.side;
    j["count"] = g.count;
    if (s.seed) j["seed"] = *s.seed;
    j["orientation"] = data::to_string(g.orientation);
    j["period_min"] = g.period_min;
    j["period_max"] = g.period_max;
    j["cell_min"] = g.cell_min;
    j["cell_max"] = g.cell_max;
    j["disc_count"] = g.disc_count;
    j["radius_min"] = g.radius_min;
    j["radius_max"] = g.radius_max;
    j["noise_std"] = g.noise_std;
    return j;
}

void merge_source(SourceSpec& s, const Json& j, const std::string& where) {
    reject_unknown(j,
                   {"kind", "family", "side", "count", "seed", "orientation", "period_min", "period_max", "cell_min",
                    "cell_max", "disc_count", "radius_min", "radius_max", "noise_std", "path", "limit"},
                   where);
    if (j.contains("kind")) {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "synthetic") {
            s.kind = SourceSpec::Kind::synthetic;
        } else if (kind == "idx") {
            s.kind = SourceSpec::Kind::idx;
        } else {
            throw std::invalid_argument("config: " + where + ".kind must be synthetic or idx, got '" + kind + "'");
        }
    }
    auto& g = s.synthetic;
    if (j.contains("family")) g.family = data::parse_family(j.at("family").get<std::string>());
    if (j.contains("orientation")) g.orientation = data::parse_orientation(j.at("orientation").get<std::string>());
    read_field(j, "side", g.side, where);
    read_field(j, "count", g.count, where);
    read_field(j, "period_min", g.period_min, where);
    read_field(j, "period_max", g.period_max, where);
    read_field(j, "cell_min", g.cell_min, where);
    read_field(j, "cell_max", g.cell_max, where);
    read_field(j, "disc_count", g.disc_count, where);
    read_field(j, "radius_min", g.radius_min, where);
    read_field(j, "radius_max", g.radius_max, where);
    read_field(j, "noise_std", g.noise_std, where);
    if (j.contains("seed")) {
        if (j.at("seed").is_null()) {
            s.seed.reset();
        } else {
            std::uint64_t v = 0;
            read_field(j, "seed", v, where);
            s.seed = v;
        }
    }
    if (j.contains("path")) s.path = j.at("path").get<std::string>();
    if (j.contains("limit")) {
        if (j.at("limit").is_null()) {
            s.limit.reset();
        } else {
            std::size_t v = 0;
            read_field(j, "limit", v, where);
            s.limit = v;
        }
    }
}

}  // namespace

ExperimentConfig::ExperimentConfig()
    : train_data(synthetic_source(data::Family::stripes)),
      test_in(synthetic_source(data::Family::stripes)),
      test_out(synthetic_source(data::Family::checker_texture)) {}

Json to_json(const ExperimentConfig& c) {
    Json j;
    j["seed"] = c.seed;
    j["data"]["train"] = source_to_json(c.train_data);
    j["data"]["test_in"] = source_to_json(c.test_in);
    j["data"]["test_out"] = source_to_json(c.test_out);
    j["model"]["widths"] = c.model.widths;
    j["model"]["time_dim"] = c.model.time_dim;
    j["train"]["epochs"] = c.train.epochs;
    j["train"]["batch_size"] = c.train.batch_size;
    j["train"]["learning_rate"] = float_for_json(c.train.learning_rate);
    j["train"]["steps"] = c.train.steps;
    j["train"]["beta_start"] = c.train.beta_start;
    j["train"]["beta_end"] = c.train.beta_end;
    j["train"]["clip_norm"] = float_for_json(c.train.clip_norm);
    j["detector"]["attempts"] = c.detector.attempts;
    j["detector"]["mask"] = masking::to_string(c.detector.mask);
    j["detector"]["metric"] = metrics::to_string(c.detector.metric);
    j["detector"]["lift"] = detector::to_string(c.detector.lift);
    j["detector"]["lift_step"] = c.detector.lift_step ? Json(*c.detector.lift_step) : Json(nullptr);
    j["detector"]["feature_seed"] = c.detector.feature_seed;
    j["workers"] = c.workers;
    j["grid_images"] = c.grid_images;
    j["sample_count"] = c.sample_count;
    j["ablate_axis"] = c.ablate_axis;
    j["checkpoint"] = c.checkpoint.string();
    j["eval"]["in_csv"] = c.eval_in_csv.string();
    j["eval"]["out_csv"] = c.eval_out_csv.string();
    return j;
}

void merge_json(ExperimentConfig& c, const Json& doc) {
    reject_unknown(doc,
                   {"seed", "data", "model", "train", "detector", "workers", "grid_images", "sample_count",
                    "ablate_axis", "checkpoint", "eval"},
                   "config");
    read_field(doc, "seed", c.seed, "config");
    if (doc.contains("data")) {
        const auto& d = doc.at("data");
        reject_unknown(d, {"train", "test_in", "test_out"}, "data");
        if (d.contains("train")) merge_source(c.train_data, d.at("train"), "data.train");
        if (d.contains("test_in")) merge_source(c.test_in, d.at("test_in"), "data.test_in");
        if (d.contains("test_out")) merge_source(c.test_out, d.at("test_out"), "data.test_out");
    }
    if (doc.contains("model")) {
        const auto& m = doc.at("model");
        reject_unknown(m, {"widths", "time_dim"}, "model");
        if (m.contains("widths")) {
            std::vector<std::size_t> widths;
            read_field(m, "widths", widths, "model");
            if (widths.size() != c.model.widths.size()) {
                throw std::invalid_argument("config: model.widths needs exactly " +
                                            std::to_string(c.model.widths.size()) + " entries");
            }
            std::copy(widths.begin(), widths.end(), c.model.widths.begin());
        }
        read_field(m, "time_dim", c.model.time_dim, "model");
    }
    if (doc.contains("train")) {
        const auto& t = doc.at("train");
        reject_unknown(t, {"epochs", "batch_size", "learning_rate", "steps", "beta_start", "beta_end", "clip_norm"},
                       "train");
        read_field(t, "epochs", c.train.epochs, "train");
        read_field(t, "batch_size", c.train.batch_size, "train");
        read_field(t, "learning_rate", c.train.learning_rate, "train");
        read_field(t, "steps", c.train.steps, "train");
        read_field(t, "beta_start", c.train.beta_start, "train");
        read_field(t, "beta_end", c.train.beta_end, "train");
        read_field(t, "clip_norm", c.train.clip_norm, "train");
    }
    if (doc.contains("detector")) {
        const auto& d = doc.at("detector");
        reject_unknown(d, {"attempts", "mask", "metric", "lift", "lift_step", "feature_seed"}, "detector");
        read_field(d, "attempts", c.detector.attempts, "detector");
        if (d.contains("mask")) c.detector.mask = masking::parse_mask_spec(d.at("mask").get<std::string>());
        if (d.contains("metric")) c.detector.metric = metrics::parse_metric(d.at("metric").get<std::string>());
        if (d.contains("lift")) c.detector.lift = detector::parse_lift(d.at("lift").get<std::string>());
        if (d.contains("lift_step")) {
            if (d.at("lift_step").is_null()) {
                c.detector.lift_step.reset();
            } else {
                std::size_t v = 0;
                read_field(d, "lift_step", v, "detector");
                if (v == 0) throw std::invalid_argument("config: detector.lift_step 0 performs no lift");
                c.detector.lift_step = v;
            }
        }
        read_field(d, "feature_seed", c.detector.feature_seed, "detector");
    }
    read_field(doc, "workers", c.workers, "config");
    read_field(doc, "grid_images", c.grid_images, "config");
    read_field(doc, "sample_count", c.sample_count, "config");
    read_field(doc, "ablate_axis", c.ablate_axis, "config");
    if (doc.contains("checkpoint")) c.checkpoint = doc.at("checkpoint").get<std::string>();
    if (doc.contains("eval")) {
        const auto& e = doc.at("eval");
        reject_unknown(e, {"in_csv", "out_csv"}, "eval");
        if (e.contains("in_csv")) c.eval_in_csv = e.at("in_csv").get<std::string>();
        if (e.contains("out_csv")) c.eval_out_csv = e.at("out_csv").get<std::string>();
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("config: " + path.string() + ": " + e.what());
    }
    ExperimentConfig c;
    merge_json(c, doc);
    return c;
}

std::uint64_t source_seed(const SourceSpec& source, std::uint64_t global_seed, SourceRole role) {
    if (source.seed) return *source.seed;
    return numerics::Rng::derive(global_seed, {0xda7a, static_cast<std::uint64_t>(role)}).key();
}

data::Dataset load_source(const SourceSpec& source, std::uint64_t global_seed, SourceRole role) {
    data::Dataset d;
    if (source.kind == SourceSpec::Kind::idx) {
        d = data::read_idx(source.path);
        if (source.limit) d = d.take(*source.limit);
    } else {
        auto spec = source.synthetic;
        spec.seed = source_seed(source, global_seed, role);
        d = data::generate(spec);
    }
    return d;
}

std::uint64_t train_seed(const ExperimentConfig& config) { return config.seed; }

double PairScores::auc() const { return auc_for_attempts(in.empty() ? 0 : in.front().distances.size()); }

double PairScores::auc_for_attempts(std::size_t attempts) const {
    std::vector<double> a, b;
    for (const auto& r : in) a.push_back(detector::median(std::span<const double>(r.distances.data(), attempts)));
    for (const auto& r : out) b.push_back(detector::median(std::span<const double>(r.distances.data(), attempts)));
    return metrics::roc_auc(a, b);
}

std::vector<PairScores> score_pair(const data::Dataset& in, const data::Dataset& out,
                                   const diffusion::EpsilonModel& model, const diffusion::NoiseSchedule& schedule,
                                   const detector::DetectorConfig& config,
                                   const std::vector<metrics::MetricKind>& metric_kinds, std::uint64_t seed,
                                   std::size_t workers) {
    auto run = [&](const data::Dataset& set, detector::Label label, std::uint64_t offset) {
        const std::vector<detector::Label> labels(set.size(), label);
        detector::ScoreOptions opts;
        opts.seed = seed;
        opts.workers = workers;
        for (std::size_t i = 0; i < set.size(); ++i) opts.stream_ids.push_back(offset + i);
        return detector::score_dataset_metrics(set.images, labels, model, schedule, config, metric_kinds, opts);
    };
    auto in_scores = run(in, detector::Label::in, 0);
    auto out_scores = run(out, detector::Label::out, kOutStreamOffset);
    std::vector<PairScores> result;
    for (std::size_t m = 0; m < metric_kinds.size(); ++m) {
        result.push_back({metric_kinds[m], std::move(in_scores[m].reports), std::move(out_scores[m].reports)});
    }
    return result;
}

}  // namespace lmd::cli
