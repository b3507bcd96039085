#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lmd/diffusion/checkpoint.hpp"
#include "lmd/diffusion/model.hpp"
#include "lmd/diffusion/sampler.hpp"
#include "lmd/diffusion/schedule.hpp"
#include "lmd/diffusion/trainer.hpp"
#include "lmd/masking/mask.hpp"
#include "lmd/numerics/rng.hpp"

using namespace lmd;
using namespace lmd::diffusion;
using numerics::Rng;

namespace {

Architecture small_arch() {
    Architecture a;
    a.height = 8;
    a.width = 8;
    a.widths = {4, 8, 8, 4};
    a.time_dim = 8;
    return a;
}

// A fresh model predicts exactly zero; randomize the output layer so the
// sampler sees a non-trivial epsilon.
EpsilonModel nontrivial_model(std::uint64_t seed) {
    EpsilonModel m(small_arch(), seed);
    Rng rng(seed + 100);
    for (auto& p : m.parameters()) {
        if (p.name.rfind("out.", 0) == 0) {
            for (float& v : p.value.data()) v = 0.2f * rng.normal();
        }
    }
    return m;
}

Tensor random_image(Rng& rng, const Architecture& a) {
    Tensor t(a.image_shape());
    for (float& v : t.data()) v = std::clamp(rng.normal() * 0.6f, -1.0f, 1.0f);
    return t;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("lmd_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("schedule examples") {
    const auto s2 = NoiseSchedule::linear(2, 0.5, 0.5);
    CHECK(s2.alpha_bar(1) == doctest::Approx(0.5));
    CHECK(s2.alpha_bar(2) == doctest::Approx(0.25));

    const auto s3 = NoiseSchedule::linear(3, 0.1, 0.3);
    CHECK(s3.beta(1) == doctest::Approx(0.1));
    CHECK(s3.beta(2) == doctest::Approx(0.2));
    CHECK(s3.beta(3) == doctest::Approx(0.3));
    CHECK(s3.alpha_bar(1) == doctest::Approx(0.9));
    CHECK(s3.alpha_bar(2) == doctest::Approx(0.72));
    CHECK(s3.alpha_bar(3) == doctest::Approx(0.504));
    CHECK(s3.alpha_bar(0) == 1.0);
    CHECK_THROWS(s3.beta(0));
    CHECK_THROWS(s3.beta(4));
    CHECK_THROWS(NoiseSchedule::linear(1, 0.1, 0.1));
    CHECK_THROWS(NoiseSchedule::linear(10, 0.3, 0.1));
    CHECK_THROWS(NoiseSchedule::linear(10, 0.0, 0.1));
    CHECK_THROWS(NoiseSchedule::linear(10, 0.1, 1.0));
}

TEST_CASE("schedule invariants on random schedules") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t T = 2 + rng.below(300);
        const double lo = 1e-5 + rng.uniform() * 0.2;
        const double hi = lo + rng.uniform() * (0.99 - lo);
        const auto s = NoiseSchedule::linear(T, lo, hi);
        for (std::size_t t = 1; t <= T; ++t) {
            CHECK(s.raw_sigma(t) == doctest::Approx(std::sqrt(s.beta(t))));
            if (t > 1) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
        }
        CHECK(s.sigma(1) == 0.0);
        CHECK(s.beta_end() == hi);
    }
}

TEST_CASE("default schedules leave almost no signal at T") {
    const auto s = TrainConfig{}.schedule();
    CHECK(s.steps() == 200);
    CHECK(std::sqrt(s.alpha_bar(s.steps())) < 0.1);
    for (std::size_t T : {50, 200, 1000}) {
        const auto r = default_beta_range(T);
        const auto d = NoiseSchedule::linear(T, r.start, r.end);
        CHECK(std::sqrt(d.alpha_bar(T)) < 0.1);
    }
}

TEST_CASE("time embedding") {
    CHECK_THROWS(time_embedding(0, 8));
    CHECK_THROWS(time_embedding(3, 7));
    for (std::size_t t : {1, 7, 150}) {
        const auto e = time_embedding(t, 16);
        CHECK(e[0] == doctest::Approx(std::sin(static_cast<double>(t))));
        CHECK(e[1] == doctest::Approx(std::cos(static_cast<double>(t))));
        double norm = 0;
        for (float v : e) norm += v * v;
        CHECK(std::sqrt(norm) <= std::sqrt(16.0) + 1e-6);
    }
}

TEST_CASE("diffuse_to examples") {
    Rng rng(1);
    const Tensor x0 = rng.normal_tensor({1, 4, 4});
    const Tensor noise = rng.normal_tensor({1, 4, 4});
    const auto s2 = NoiseSchedule::linear(2, 0.5, 0.5);
    CHECK(diffuse_to(x0, 0, noise, s2) == x0);
    const Tensor half = diffuse_to(x0, 2, Tensor(x0.shape()), s2);
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(half[i] == doctest::Approx(0.5 * x0[i]));

    const auto s = NoiseSchedule::linear(2, 0.1, 0.1);
    const Tensor v = diffuse_to(Tensor::vector({1.0f}), 1, Tensor::vector({0.5f}), s);
    CHECK(v[0] == doctest::Approx(1.10679).epsilon(1e-5));
    CHECK_THROWS(diffuse_to(x0, 1, Tensor({1, 4, 5}), s2));
}

TEST_CASE("model predict matches the recorded forward pass") {
    auto model = nontrivial_model(4);
    for (auto& p : model.parameters()) {
        Rng rng(p.value.size());
        for (float& v : p.value.data()) v += 0.05f * rng.normal();
    }
    Rng rng(8);
    const Tensor batch = rng.normal_tensor({3, 1, 8, 8});
    const std::vector<std::size_t> steps{1, 50, 200};
    numerics::Graph g;
    const auto out = model.forward(g, g.constant(batch), steps);
    const Tensor direct = model.predict(batch, steps);
    CHECK(numerics::max_abs_difference(g.value(out), direct) == 0.0f);

    const EpsilonModel fresh(small_arch(), 1);
    const Tensor zero = fresh.predict(batch, steps);
    for (float v : zero.data()) CHECK(v == 0.0f);
    CHECK_THROWS(EpsilonModel(Architecture{1, 7, 8, {4, 4, 4, 4}, 8}, 0));
}

TEST_CASE("denoise_step with zero prediction") {
    const EpsilonModel model(small_arch(), 2);
    const auto s = NoiseSchedule::linear(10, 0.01, 0.2);
    Rng img_rng(1);
    const Tensor x = img_rng.normal_tensor(small_arch().image_shape());
    Rng rng(5);
    const Tensor y = denoise_step(x, 1, model, s, rng);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i] / std::sqrt(s.alpha(1))));

    const auto tiny = NoiseSchedule::linear(2, 1e-9, 1e-9);
    const Tensor z = denoise_step(x, 1, model, tiny, rng);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(z[i] == doctest::Approx(x[i]).epsilon(1e-6));

    Rng a(9), b(9);
    CHECK(denoise_step(x, 7, model, s, a) == denoise_step(x, 7, model, s, b));
}

TEST_CASE("sample: bounded, stream dependent") {
    const auto model = nontrivial_model(3);
    const auto s = NoiseSchedule::linear(20, 0.01, 0.3);
    Rng a(1), b(2), a2(1);
    const Tensor x = sample(model, s, small_arch().image_shape(), a);
    const Tensor y = sample(model, s, small_arch().image_shape(), b);
    CHECK(x != y);
    CHECK(x == sample(model, s, small_arch().image_shape(), a2));
    for (float v : x.data()) {
        CHECK(v >= -1.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("inpaint identities") {
    const auto model = nontrivial_model(5);
    const auto s = NoiseSchedule::linear(20, 0.01, 0.3);
    const auto arch = small_arch();
    Rng img_rng(77);

    SUBCASE("all-ones mask returns the original") {
        const Tensor x = random_image(img_rng, arch);
        Rng rng(1);
        CHECK(inpaint(x, masking::Mask(8, 8, 1), model, s, rng) == x);
    }
    SUBCASE("all-zeros mask equals unconditional sampling") {
        const Tensor x = random_image(img_rng, arch);
        Rng r1(12), r2(12);
        CHECK(inpaint(x, masking::Mask(8, 8, 0), model, s, r1) == sample(model, s, arch.image_shape(), r2));
    }
    SUBCASE("observed pixels are bit-exact on random pairs") {
        Rng mask_rng(4);
        for (int trial = 0; trial < 50; ++trial) {
            const Tensor x = random_image(img_rng, arch);
            masking::Mask m(8, 8);
            for (std::size_t i = 0; i < 64; ++i) m(i / 8, i % 8) = static_cast<std::uint8_t>(mask_rng.below(2));
            Rng rng(static_cast<std::uint64_t>(trial));
            const Tensor y = inpaint(x, m, model, s, rng);
            for (std::size_t i = 0; i < 64; ++i) {
                if (m.kept(i)) CHECK(y[i] == x[i]);
                else CHECK(std::abs(y[i]) <= 1.0f);
            }
        }
    }
    SUBCASE("deterministic and batch independent") {
        std::vector<Tensor> xs;
        std::vector<masking::Mask> ms;
        std::vector<Rng> rngs;
        Rng mask_rng(6);
        for (int n = 0; n < 3; ++n) {
            xs.push_back(random_image(img_rng, arch));
            ms.push_back(masking::get_mask({masking::MaskVariant::alternating_checkerboard, 4},
                                           static_cast<std::size_t>(n), 8, 8, mask_rng));
            rngs.push_back(Rng::derive(3, {static_cast<std::uint64_t>(n)}));
        }
        auto copy = rngs;
        const auto batch = inpaint_batch(xs, ms, model, s, copy);
        for (int n = 0; n < 3; ++n) {
            Rng r = rngs[static_cast<std::size_t>(n)];
            CHECK(inpaint(xs[static_cast<std::size_t>(n)], ms[static_cast<std::size_t>(n)], model, s, r) ==
                  batch[static_cast<std::size_t>(n)]);
        }
    }
    SUBCASE("mismatched mask is rejected") {
        Rng rng(1);
        CHECK_THROWS(inpaint(random_image(img_rng, arch), masking::Mask(4, 4), model, s, rng));
    }
}

TEST_CASE("denoise lift") {
    const auto model = nontrivial_model(6);
    const auto s = NoiseSchedule::linear(20, 0.01, 0.3);
    Rng img_rng(2);
    const Tensor x = random_image(img_rng, small_arch());
    Rng a(1), b(1);
    const Tensor y = denoise_lift(x, 10, model, s, a);
    CHECK(y == denoise_lift(x, 10, model, s, b));
    for (float v : y.data()) CHECK(std::abs(v) <= 1.0f);
    CHECK_THROWS(denoise_lift(x, 0, model, s, a));
    CHECK_THROWS(denoise_lift(x, 21, model, s, a));
}

TEST_CASE("trainer") {
    const auto arch = small_arch();
    Rng img_rng(10);
    std::vector<Tensor> images;
    for (int i = 0; i < 8; ++i) images.push_back(random_image(img_rng, arch));
    TrainConfig cfg;
    cfg.steps = 20;
    cfg.beta_start = 0.01;
    cfg.beta_end = 0.3;
    cfg.batch_size = 4;

    SUBCASE("zero epochs leave parameters unchanged") {
        EpsilonModel m(arch, 1);
        const EpsilonModel fresh(arch, 1);
        cfg.epochs = 0;
        CHECK(train(m, images, cfg).epoch_loss.empty());
        for (std::size_t i = 0; i < m.parameters().size(); ++i)
            CHECK(m.parameters()[i].value == fresh.parameters()[i].value);
    }
    SUBCASE("same seed gives bitwise-identical parameters") {
        cfg.epochs = 3;
        EpsilonModel a(arch, 1), b(arch, 1);
        const auto ra = train(a, images, cfg);
        const auto rb = train(b, images, cfg);
        CHECK(ra.epoch_loss == rb.epoch_loss);
        for (std::size_t i = 0; i < a.parameters().size(); ++i)
            CHECK(a.parameters()[i].value == b.parameters()[i].value);
    }
    SUBCASE("one constant image, 200 epochs: loss decreases") {
        cfg.epochs = 200;
        EpsilonModel m(arch, 2);
        const std::vector<Tensor> one{Tensor(arch.image_shape(), 0.5f)};
        const auto r = train(m, one, cfg);
        REQUIRE(r.epoch_loss.size() == 200);
        CHECK(r.epoch_loss.back() < r.epoch_loss.front());
    }
    SUBCASE("bad inputs are rejected") {
        EpsilonModel m(arch, 1);
        cfg.epochs = 1;
        CHECK_THROWS(train(m, {}, cfg));
        CHECK_THROWS(train(m, {Tensor({1, 4, 4})}, cfg));
        cfg.batch_size = 0;
        CHECK_THROWS(train(m, images, cfg));
    }
}

TEST_CASE("checkpoint round trip") {
    const auto dir = temp_dir("ckpt");
    const auto model = nontrivial_model(9);
    const auto s = NoiseSchedule::linear(20, 0.01, 0.3);
    save_checkpoint(dir / "m.lmd", model, s);
    const auto loaded = load_checkpoint(dir / "m.lmd");
    CHECK(loaded.model.architecture() == model.architecture());
    CHECK(loaded.steps == 20);
    CHECK(loaded.beta_start == 0.01);
    CHECK(loaded.beta_end == 0.3);
    for (std::size_t i = 0; i < model.parameters().size(); ++i)
        CHECK(loaded.model.parameters()[i].value == model.parameters()[i].value);

    save_checkpoint(dir / "again.lmd", loaded.model, loaded.schedule());
    std::ifstream a(dir / "m.lmd", std::ios::binary), b(dir / "again.lmd", std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);

    std::ofstream(dir / "short.lmd", std::ios::binary) << sa.substr(0, sa.size() - 3);
    CHECK_THROWS(load_checkpoint(dir / "short.lmd"));
    std::ofstream(dir / "long.lmd", std::ios::binary) << sa << "x";
    CHECK_THROWS(load_checkpoint(dir / "long.lmd"));
    CHECK_THROWS(load_checkpoint(dir / "missing.lmd"));
}
