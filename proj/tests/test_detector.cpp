#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "lmd/detector/detector.hpp"
#include "lmd/detector/report_csv.hpp"
#include "lmd/numerics/rng.hpp"

using namespace lmd;
using namespace lmd::detector;

namespace {

diffusion::Architecture small_arch() {
    diffusion::Architecture a;
    a.height = 8;
    a.width = 8;
    a.widths = {4, 8, 8, 4};
    a.time_dim = 8;
    return a;
}

diffusion::EpsilonModel nontrivial_model() {
    diffusion::EpsilonModel m(small_arch(), 1);
    Rng rng(50);
    for (auto& p : m.parameters()) {
        if (p.name.rfind("out.", 0) == 0) {
            for (float& v : p.value.data()) v = 0.2f * rng.normal();
        }
    }
    return m;
}

std::vector<Tensor> images(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor t(small_arch().image_shape());
        for (float& v : t.data()) v = std::clamp(0.5f * rng.normal(), -1.0f, 1.0f);
        out.push_back(std::move(t));
    }
    return out;
}

const auto kSchedule = diffusion::NoiseSchedule::linear(10, 0.02, 0.4);

DetectorConfig small_config(std::size_t attempts) {
    DetectorConfig c;
    c.attempts = attempts;
    c.mask = masking::parse_mask_spec("alt4");
    return c;
}

}  // namespace

TEST_CASE("median examples") {
    const std::vector<double> three{0.3, 0.1, 0.5}, four{0.1, 0.2, 0.4, 0.8}, one{0.7};
    CHECK(median(three) == 0.3);
    CHECK(median(four) == doctest::Approx(0.3));
    CHECK(median(one) == 0.7);
    CHECK_THROWS(median(std::vector<double>{}));

    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> d(1 + rng.below(12));
        for (auto& v : d) v = rng.uniform();
        const double m = median(d);
        std::reverse(d.begin(), d.end());
        CHECK(median(d) == m);
        std::swap(d.front(), d[rng.below(d.size())]);
        CHECK(median(d) == m);
    }
}

TEST_CASE("detector config validation") {
    auto c = small_config(0);
    CHECK_THROWS(c.validate(kSchedule));
    c.attempts = 2;
    c.lift = LiftMode::diffuse_denoise;
    c.lift_step = 0;
    CHECK_THROWS(c.validate(kSchedule));
    c.lift_step = 11;
    CHECK_THROWS(c.validate(kSchedule));
    c.lift_step.reset();
    CHECK(c.resolved_lift_step(kSchedule) == 5);
    c.validate(kSchedule);
    CHECK(parse_lift(to_string(LiftMode::diffuse_denoise)) == LiftMode::diffuse_denoise);
    CHECK_THROWS(parse_lift("blur"));
}

TEST_CASE("single-image scores") {
    const auto model = nontrivial_model();
    const auto x = images(1, 3).front();
    const auto cfg = small_config(3);
    const auto a = ood_score(x, model, kSchedule, cfg, Rng(7));
    const auto b = ood_score(x, model, kSchedule, cfg, Rng(7));
    CHECK(a.distances == b.distances);
    CHECK(a.distances.size() == 3);
    CHECK(a.score == median(a.distances));

    auto r1 = small_config(1);
    const auto one = ood_score(x, model, kSchedule, r1, Rng(7));
    CHECK(one.score == one.distances[0]);
    CHECK(one.distances[0] == a.distances[0]);

    CHECK_THROWS(denoise_lift_score(x, model, kSchedule, cfg, Rng(7)));
    auto dcfg = cfg;
    dcfg.lift = LiftMode::diffuse_denoise;
    CHECK_THROWS(ood_score(x, model, kSchedule, dcfg, Rng(7)));
    const auto d = denoise_lift_score(x, model, kSchedule, dcfg, Rng(7));
    CHECK(d.distances == denoise_lift_score(x, model, kSchedule, dcfg, Rng(7)).distances);
}

TEST_CASE("attempt masks cover the image and match reconstruction") {
    const auto model = nontrivial_model();
    const auto x = images(1, 4).front();
    const auto cfg = small_config(2);
    const auto masks = attempt_masks(x, cfg, Rng(3));
    CHECK(masks[0].complement() == masks[1]);
    const auto recon = reconstruct(x, model, kSchedule, cfg, Rng(3));
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t i = 0; i < 64; ++i)
            if (masks[a].kept(i)) CHECK(recon[a][i] == x[i]);
}

TEST_CASE("score_dataset: determinism, workers, streams") {
    const auto model = nontrivial_model();
    auto imgs = images(6, 5);
    std::vector<Label> labels{Label::in, Label::in, Label::in, Label::out, Label::out, Label::out};
    const auto cfg = small_config(3);
    const auto one = score_dataset(imgs, labels, model, kSchedule, cfg, {11, 1, {}});
    const auto four = score_dataset(imgs, labels, model, kSchedule, cfg, {11, 4, {}});
    REQUIRE(one.reports.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(one.reports[i].image_index == i);
        CHECK(one.reports[i].label == labels[i]);
        CHECK(one.reports[i].distances == four.reports[i].distances);
    }
    REQUIRE(one.auc.has_value());
    CHECK(*one.auc == *four.auc);

    // Equal images with equal stream ids score identically.
    imgs[4] = imgs[1];
    const auto dup = score_dataset(imgs, labels, model, kSchedule, cfg, {11, 2, {0, 1, 2, 3, 1, 5}});
    CHECK(dup.reports[4].distances == dup.reports[1].distances);
    CHECK(dup.reports[4].distances == one.reports[1].distances);

    const std::vector<Label> all_in(6, Label::in);
    const auto no_auc = score_dataset(imgs, all_in, model, kSchedule, cfg, {11, 1, {}});
    CHECK_FALSE(no_auc.auc.has_value());
    CHECK_FALSE(no_auc.notice.empty());

    const metrics::MetricKind kinds[] = {metrics::MetricKind::mse, metrics::MetricKind::feature_distance};
    const auto multi = score_dataset_metrics(imgs, labels, model, kSchedule, cfg, kinds, {11, 1, {}});
    auto mse_cfg = cfg;
    mse_cfg.metric = metrics::MetricKind::mse;
    const auto mse_only = score_dataset(imgs, labels, model, kSchedule, mse_cfg, {11, 1, {}});
    for (std::size_t i = 0; i < 6; ++i) CHECK(multi[0].reports[i].distances == mse_only.reports[i].distances);

    CHECK(auc_for_prefix(one.reports, 3) == one.auc);
    CHECK_THROWS(score_dataset({}, {}, model, kSchedule, cfg, {}));
    CHECK_THROWS(score_dataset(imgs, std::vector<Label>(2, Label::in), model, kSchedule, cfg, {}));
}

TEST_CASE("report csv round trip and errors") {
    std::vector<ScoreReport> reports{{0, Label::in, {0.1, 0.25}, 0.175}, {1, Label::out, {1.5e-7, 3}, 1.5}};
    std::ostringstream out;
    write_reports_csv(out, reports);
    CHECK(out.str() == "image_index,label,score,d_1,d_2\n0,in,0.175,0.1,0.25\n1,out,1.5,1.5e-07,3\n");
    std::istringstream in(out.str());
    const auto rows = read_reports_csv(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].label == Label::out);
    CHECK(rows[1].distances[0] == 1.5e-7);

    std::ostringstream single;
    write_reports_csv(single, {{0, Label::in, {0.5}, 0.5}});
    CHECK(single.str().substr(0, single.str().find('\n')) == "image_index,label,score,d_1");

    auto line_of = [](const std::string& text) {
        std::istringstream s(text);
        try {
            read_reports_csv(s);
        } catch (const CsvError& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    CHECK(line_of("") == 1);
    CHECK(line_of("index,label,score\n") == 1);
    CHECK(line_of("image_index,label,score,d_1\n0,in,0.5,0.5\n1,in,x,0.5\n") == 3);
    CHECK(line_of("image_index,label,score,d_1\n0,in,0.5\n") == 2);
    CHECK(line_of("image_index,label,score,d_1\n0,maybe,0.5,0.5\n") == 2);
    CHECK(line_of("image_index,label,score,d_1\n0,in,0.5,0.5\n") == 0);
}
