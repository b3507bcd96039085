#include "lmd/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "lmd/data/pgm.hpp"
#include "lmd/detector/report_csv.hpp"
#include "lmd/diffusion/checkpoint.hpp"
#include "lmd/diffusion/sampler.hpp"
#include "lmd/metrics/roc.hpp"

namespace lmd::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

void prepare_dir(const fs::path& dir) {
    if (dir.empty()) throw std::runtime_error("no output directory given");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw std::runtime_error("cannot create output directory " + dir.string() +
                                 (ec ? ": " + ec.message() : std::string()));
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    out.close();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_run_json(const ExperimentConfig& config, const fs::path& dir) {
    write_text(dir / "run.json", to_json(config).dump(2) + "\n");
}

fs::path absolute_path(const fs::path& p) { return p.empty() ? p : fs::absolute(p).lexically_normal(); }

diffusion::Checkpoint open_checkpoint(const ExperimentConfig& config) {
    if (config.checkpoint.empty()) throw std::runtime_error("no checkpoint given (--checkpoint or config)");
    return diffusion::load_checkpoint(config.checkpoint);
}

void require_shape(const data::Dataset& set, const char* role, const diffusion::EpsilonModel& model) {
    const auto expected = model.architecture().image_shape();
    if (set.image_shape() != expected) {
        throw std::runtime_error(std::string(role) + " images have shape " + numerics::to_string(set.image_shape()) +
                                 " but the checkpoint expects " + numerics::to_string(expected));
    }
}

struct TestSets {
    data::Dataset in;
    data::Dataset out;
};

TestSets load_test_sets(const ExperimentConfig& config, const diffusion::EpsilonModel& model) {
    TestSets sets{load_source(config.test_in, config.seed, SourceRole::test_in),
                  load_source(config.test_out, config.seed, SourceRole::test_out)};
    sets.in.validate();
    sets.out.validate();
    require_shape(sets.in, "in-domain", model);
    require_shape(sets.out, "out-of-domain", model);
    return sets;
}

// Rows of (original, masked with mid-gray at M=0, reconstruction of attempt 1).
// The diffuse-denoise lift corrupts every pixel, so its middle panel is all gray.
void write_triplets(const data::Dataset& set, std::uint64_t stream_offset, const ExperimentConfig& config,
                    const diffusion::Checkpoint& ckpt, const fs::path& path) {
    const std::size_t k = std::min(config.grid_images, set.size());
    if (k == 0) return;
    auto single = config.detector;
    single.attempts = 1;
    const auto schedule = ckpt.schedule();
    std::vector<numerics::Tensor> tiles;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& image = set.images[i];
        const auto rng = detector::image_stream(config.seed, stream_offset + i);
        const auto recon = detector::reconstruct(image, ckpt.model, schedule, single, rng);
        numerics::Tensor masked(image.shape());
        if (single.lift == detector::LiftMode::mask_inpaint) {
            const auto mask = detector::attempt_masks(image, single, rng).front();
            const std::size_t plane = image.dim(1) * image.dim(2);
            for (std::size_t j = 0; j < image.size(); ++j) masked[j] = mask.kept(j % plane) ? image[j] : 0.0f;
        }
        tiles.push_back(image);
        tiles.push_back(std::move(masked));
        tiles.push_back(recon.front());
    }
    data::write_pgm_grid(tiles, 3, path);
}

}  // namespace

void cmd_train(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    prepare_dir(out_dir);
    const auto set = load_source(config.train_data, config.seed, SourceRole::train);
    set.validate();
    auto arch = config.model;
    const auto shape = set.image_shape();
    arch.channels = shape[0];
    arch.height = shape[1];
    arch.width = shape[2];
    auto tc = config.train;
    tc.seed = train_seed(config);
    tc.validate();

    diffusion::EpsilonModel model(arch, tc.seed);
    log << "training on " << set.size() << " images (" << set.source << "), " << tc.epochs << " epochs\n";
    const std::size_t every = std::max<std::size_t>(1, tc.epochs / 10);
    const auto result = diffusion::train(model, set.images, tc, [&](std::size_t epoch, double loss) {
        if (epoch == 1 || epoch % every == 0 || epoch == tc.epochs) {
            log << "epoch " << epoch << " loss " << detector::format_float(loss) << "\n";
        }
    });

    const fs::path ckpt = out_dir / "checkpoint.lmd";
    diffusion::save_checkpoint(ckpt, model, tc.schedule());
    std::string loss = "epoch,loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
        loss += std::to_string(e + 1) + "," + detector::format_float(result.epoch_loss[e]) + "\n";
    }
    write_text(out_dir / "loss.csv", loss);

    auto echo = config;
    echo.checkpoint = absolute_path(ckpt);
    write_run_json(echo, out_dir);
    log << "wrote " << ckpt.string() << "\n";
}

void cmd_score(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    prepare_dir(out_dir);
    const auto ckpt = open_checkpoint(config);
    const auto schedule = ckpt.schedule();
    config.detector.validate(schedule);
    const auto sets = load_test_sets(config, ckpt.model);

    const auto scores =
        score_pair(sets.in, sets.out, ckpt.model, schedule, config.detector, {config.detector.metric}, config.seed,
                   config.workers)
            .front();
    detector::write_reports_csv(out_dir / "scores_in.csv", scores.in);
    detector::write_reports_csv(out_dir / "scores_out.csv", scores.out);
    write_triplets(sets.in, 0, config, ckpt, out_dir / "reconstructions_in.pgm");
    write_triplets(sets.out, kOutStreamOffset, config, ckpt, out_dir / "reconstructions_out.pgm");

    auto echo = config;
    echo.checkpoint = absolute_path(config.checkpoint);
    write_run_json(echo, out_dir);
    log << "AUC " << fixed3(scores.auc()) << " (" << metrics::to_string(scores.metric) << ", "
        << masking::to_string(config.detector.mask) << ", r=" << config.detector.attempts << ")\n";
}

double cmd_eval(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    prepare_dir(out_dir);
    auto read = [](const fs::path& path) {
        try {
            return detector::read_reports_csv(path);
        } catch (const detector::CsvError& e) {
            throw std::runtime_error(path.string() + ": " + e.what());
        }
    };
    if (config.eval_in_csv.empty() || config.eval_out_csv.empty()) {
        throw std::runtime_error("eval needs an in-domain and an out-of-domain score CSV");
    }
    const auto in_rows = read(config.eval_in_csv);
    const auto out_rows = read(config.eval_out_csv);
    std::vector<double> in, out;
    for (const auto& r : in_rows) in.push_back(r.score);
    for (const auto& r : out_rows) out.push_back(r.score);
    const double auc = metrics::roc_auc(in, out);
    write_text(out_dir / "auc.txt", fixed3(auc) + "\n");
    auto echo = config;
    echo.eval_in_csv = absolute_path(config.eval_in_csv);
    echo.eval_out_csv = absolute_path(config.eval_out_csv);
    write_run_json(echo, out_dir);
    log << "AUC " << fixed3(auc) << "\n";
    return auc;
}

std::vector<std::string> ablation_settings(const std::string& axis, const detector::DetectorConfig& base) {
    if (axis == "mask") return {"alt4", "alt8", "alt16", "fixed8", "center", "random8"};
    if (axis == "metric") return {"mse", "ssim_distance", "feature_distance"};
    if (axis == "attempts") {
        std::vector<std::string> out;
        for (std::size_t k = 1; k <= base.attempts; ++k) out.push_back(std::to_string(k));
        return out;
    }
    throw std::invalid_argument("unknown ablation axis '" + axis + "' (valid: mask, metric, attempts)");
}

void cmd_ablate(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    const auto settings = ablation_settings(config.ablate_axis, config.detector);
    prepare_dir(out_dir);
    const auto ckpt = open_checkpoint(config);
    const auto schedule = ckpt.schedule();
    config.detector.validate(schedule);
    const auto sets = load_test_sets(config, ckpt.model);

    std::vector<double> aucs;
    if (config.ablate_axis == "mask") {
        for (const auto& name : settings) {
            auto cfg = config.detector;
            cfg.mask = masking::parse_mask_spec(name);
            aucs.push_back(
                score_pair(sets.in, sets.out, ckpt.model, schedule, cfg, {cfg.metric}, config.seed, config.workers)
                    .front()
                    .auc());
            log << name << " AUC " << fixed3(aucs.back()) << "\n";
        }
    } else if (config.ablate_axis == "metric") {
        std::vector<metrics::MetricKind> kinds;
        for (const auto& name : settings) kinds.push_back(metrics::parse_metric(name));
        for (const auto& s : score_pair(sets.in, sets.out, ckpt.model, schedule, config.detector, kinds,
                                        config.seed, config.workers)) {
            aucs.push_back(s.auc());
            log << metrics::to_string(s.metric) << " AUC " << fixed3(aucs.back()) << "\n";
        }
    } else {
        const auto s = score_pair(sets.in, sets.out, ckpt.model, schedule, config.detector,
                                  {config.detector.metric}, config.seed, config.workers)
                           .front();
        for (std::size_t k = 1; k <= config.detector.attempts; ++k) {
            aucs.push_back(s.auc_for_attempts(k));
            log << "r=" << k << " AUC " << fixed3(aucs.back()) << "\n";
        }
    }

    std::string table = config.ablate_axis + ",auc\n";
    for (std::size_t i = 0; i < settings.size(); ++i) {
        table += settings[i] + "," + detector::format_float(aucs[i]) + "\n";
    }
    write_text(out_dir / ("ablation_" + config.ablate_axis + ".csv"), table);
    auto echo = config;
    echo.checkpoint = absolute_path(config.checkpoint);
    write_run_json(echo, out_dir);
}

void cmd_sample(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    if (config.sample_count == 0) throw std::runtime_error("sample count must be >= 1");
    prepare_dir(out_dir);
    const auto ckpt = open_checkpoint(config);
    std::vector<numerics::Rng> rngs;
    for (std::size_t i = 0; i < config.sample_count; ++i) rngs.push_back(numerics::Rng::derive(config.seed, {0x5a3e, i}));
    const auto samples =
        diffusion::sample_batch(ckpt.model, ckpt.schedule(), ckpt.model.architecture().image_shape(), rngs);
    data::write_pgm_grid(samples, std::min<std::size_t>(8, samples.size()), out_dir / "samples.pgm");
    auto echo = config;
    echo.checkpoint = absolute_path(config.checkpoint);
    write_run_json(echo, out_dir);
    log << "wrote " << samples.size() << " samples to " << (out_dir / "samples.pgm").string() << "\n";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Diffusion-based unsupervised out-of-distribution detection"};
    app.require_subcommand(1);

    struct Common {
        std::string config, out;
        std::uint64_t seed = 0;
    };
    auto add_common = [](CLI::App* cmd, Common& c, bool out_required) {
        cmd->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
        cmd->add_option("--seed", c.seed, "Global seed");
        auto* o = cmd->add_option("--out", c.out, "Output directory");
        if (out_required) o->required();
    };

    Common train_c, score_c, eval_c, ablate_c, sample_c;
    std::string checkpoint, mask, metric, lift, axis, in_csv, out_csv;
    std::size_t attempts = 0, count = 0, workers = 0, epochs = 0;

    auto* train = app.add_subcommand("train", "Train the noise-prediction model on the in-domain set");
    add_common(train, train_c, true);
    train->add_option("--epochs", epochs, "Training epochs");

    auto* score = app.add_subcommand("score", "Score in-domain and out-of-domain test sets");
    add_common(score, score_c, true);
    auto* ablate = app.add_subcommand("ablate", "Sweep one detector setting, reusing one checkpoint");
    add_common(ablate, ablate_c, true);
    for (auto* cmd : {score, ablate}) {
        cmd->add_option("--checkpoint", checkpoint, "Checkpoint written by train");
        cmd->add_option("--attempts", attempts, "Reconstruction attempts r")->check(CLI::PositiveNumber);
        cmd->add_option("--mask", mask, "alt<N> | fixed<N> | random<N> | center");
        cmd->add_option("--metric", metric, "mse | ssim_distance | feature_distance");
        cmd->add_option("--lift", lift, "Lift mode")->check(CLI::IsMember({"inpaint", "denoise"}));
        cmd->add_option("--workers", workers, "Scoring threads")->check(CLI::PositiveNumber);
    }
    ablate->add_option("--axis", axis, "mask | metric | attempts");

    auto* eval = app.add_subcommand("eval", "AUC from two score CSVs");
    add_common(eval, eval_c, false);
    eval->add_option("in_csv", in_csv, "In-domain scores");
    eval->add_option("out_csv", out_csv, "Out-of-domain scores");

    auto* sample = app.add_subcommand("sample", "Draw unconditional samples");
    add_common(sample, sample_c, true);
    sample->add_option("--checkpoint", checkpoint, "Checkpoint written by train");
    sample->add_option("--count", count, "Number of samples")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    auto resolve = [&](CLI::App* cmd, const Common& c) {
        ExperimentConfig config;
        if (!c.config.empty()) config = load_config(c.config);
        if (cmd->count("--seed")) config.seed = c.seed;
        auto given = [&](const char* name) { return cmd->get_option_no_throw(name) && cmd->count(name) > 0; };
        if (given("--epochs")) config.train.epochs = epochs;
        if (given("--checkpoint")) config.checkpoint = checkpoint;
        if (given("--attempts")) config.detector.attempts = attempts;
        if (given("--mask")) config.detector.mask = masking::parse_mask_spec(mask);
        if (given("--metric")) config.detector.metric = metrics::parse_metric(metric);
        if (given("--lift")) config.detector.lift = detector::parse_lift(lift);
        if (given("--workers")) config.workers = workers;
        if (given("--axis")) config.ablate_axis = axis;
        if (given("--count")) config.sample_count = count;
        if (given("in_csv")) config.eval_in_csv = in_csv;
        if (given("out_csv")) config.eval_out_csv = out_csv;
        return config;
    };

    try {
        if (*train) cmd_train(resolve(train, train_c), train_c.out, out);
        if (*score) cmd_score(resolve(score, score_c), score_c.out, out);
        if (*eval) cmd_eval(resolve(eval, eval_c), eval_c.out.empty() ? "." : eval_c.out, out);
        if (*ablate) cmd_ablate(resolve(ablate, ablate_c), ablate_c.out, out);
        if (*sample) cmd_sample(resolve(sample, sample_c), sample_c.out, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace lmd::cli
