#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <thread>

#include "httplib.h"

#include "facecloak/error.hpp"
#include "facecloak/focusing.hpp"
#include "facecloak/rng.hpp"
#include "testutil/fixtures.hpp"

using namespace facecloak;

namespace {

// Brute-force rasterization oracle: point-in-box test per pixel, boxes
// derived independently from the same centered/clipped definition.
BinaryMask sticker_oracle(const LandmarkSet& lm, const StickerSpec& spec, int height, int width) {
    struct Box {
        int x0, y0, x1, y1;
    };
    auto make_box = [&](Point center, BoxFraction frac) {
        const int w_px = std::max(1, static_cast<int>(std::llround(frac.width_frac * width)));
        const int h_px = std::max(1, static_cast<int>(std::llround(frac.height_frac * height)));
        Box b;
        b.x0 = center.x - w_px / 2;
        b.y0 = center.y - h_px / 2;
        b.x1 = b.x0 + w_px - 1;
        b.y1 = b.y0 + h_px - 1;
        return b;
    };
    const Box boxes[4] = {make_box(lm.left_eye, spec.eye), make_box(lm.right_eye, spec.eye),
                          make_box(lm.nose, spec.nose), make_box(lm.mouth, spec.mouth)};
    BinaryMask mask = BinaryMask::zeros(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            bool inside = false;
            for (const Box& b : boxes) {
                if (x >= b.x0 && x <= b.x1 && y >= b.y0 && y <= b.y1) inside = true;
            }
            if (inside) {
                for (int c = 0; c < 3; ++c) {
                    mask.values[(static_cast<std::size_t>(y) * width + x) * 3 + c] = 1;
                }
            }
        }
    }
    return mask;
}

// Naive O(HW·k²) 2-D convolution with the full (truncated, normalized)
// Gaussian kernel and reflect padding.
std::vector<double> blur_oracle(const ImagePlane& image, double sigma, int radius) {
    const int height = image.height();
    const int width = image.width();
    const int k = 2 * radius + 1;
    std::vector<double> kernel(static_cast<std::size_t>(k) * k);
    double sum = 0.0;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            kernel[static_cast<std::size_t>(dy + radius) * k + (dx + radius)] = w;
            sum += w;
        }
    }
    for (double& w : kernel) w /= sum;

    auto reflect = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * n - 2 - i;
        }
        return i;
    };
    std::vector<double> out(image.size());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int dy = -radius; dy <= radius; ++dy) {
                    for (int dx = -radius; dx <= radius; ++dx) {
                        acc += kernel[static_cast<std::size_t>(dy + radius) * k + (dx + radius)] *
                               image.at(reflect(y + dy, height), reflect(x + dx, width), c);
                    }
                }
                out[(static_cast<std::size_t>(y) * width + x) * 3 + c] = acc;
            }
        }
    }
    return out;
}

std::vector<double> highpass_oracle(const ImagePlane& image, const HighPassConfig& cfg) {
    const std::vector<double> blurred = blur_oracle(image, cfg.sigma, cfg.kernel_radius);
    std::vector<double> residual(image.size());
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = image.data()[i] - blurred[i];
    const std::size_t pixels = image.size() / 3;
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (std::size_t p = 0; p < pixels; ++p) mean += residual[p * 3 + c];
        mean /= static_cast<double>(pixels);
        double var = 0.0;
        for (std::size_t p = 0; p < pixels; ++p) {
            const double d = residual[p * 3 + c] - mean;
            var += d * d;
        }
        const double std_dev = std::sqrt(var / static_cast<double>(pixels));
        for (std::size_t p = 0; p < pixels; ++p) {
            residual[p * 3 + c] = std_dev < 1e-8 ? 0.0 : (residual[p * 3 + c] - mean) / std_dev;
        }
    }
    return residual;
}

ImagePlane random_image(int height, int width, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> data(plane_size(height, width));
    for (double& v : data) v = rng.uniform();
    return ImagePlane(height, width, std::move(data));
}

LandmarkSet random_landmarks(Rng& rng, int height, int width) {
    LandmarkSet lm;
    lm.left_eye = {rng.uniform_int(0, width / 2 - 1), rng.uniform_int(0, height - 1)};
    lm.right_eye = {rng.uniform_int(width / 2, width - 1), rng.uniform_int(0, height - 1)};
    lm.nose = {rng.uniform_int(0, width - 1), rng.uniform_int(0, height - 1)};
    lm.mouth = {rng.uniform_int(0, width - 1), rng.uniform_int(0, height - 1)};
    return lm;
}

}  // namespace

TEST_CASE("canonical landmarks on a 112×112 crop") {
    const LandmarkSet lm = canonical_landmarks(112, 112);
    CHECK(lm.left_eye.x == 34);
    CHECK(lm.left_eye.y == 45);
    CHECK(lm.right_eye.x == 78);
    CHECK(lm.nose.x == 56);
    CHECK(lm.nose.y == 65);
    CHECK(lm.mouth.y == 87);

    // Coordinates scale linearly with the dimensions.
    const LandmarkSet big = canonical_landmarks(224, 224);
    CHECK(big.left_eye.x == 67);   // round(0.30·224)
    CHECK(big.left_eye.y == 90);   // round(0.40·224)
    CHECK(big.mouth.y == 175);     // round(0.78·224)
}

TEST_CASE("detect_landmarks falls back to canonical and validates adapters") {
    const ImagePlane image = random_image(32, 32, 5);
    const LandmarkSet lm = detect_landmarks(image, nullptr);
    CHECK(lm.left_eye.x == canonical_landmarks(32, 32).left_eye.x);

    struct NoFaceAdapter : LandmarkAdapter {
        std::optional<LandmarkSet> detect(const std::vector<std::uint8_t>&) override {
            return std::nullopt;
        }
    } no_face;
    try {
        detect_landmarks(image, &no_face);
        FAIL("expected detection error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DetectionFailure);
    }
}

TEST_CASE("HTTP landmark adapter speaks the documented protocol") {
    httplib::Server server;
    bool report_face = true;
    server.Post("/landmarks", [&](const httplib::Request& req, httplib::Response& res) {
        CHECK(req.body.size() > 8);  // PNG payload arrives
        if (!report_face) {
            res.set_content(R"({"face": false})", "application/json");
            return;
        }
        res.set_content(R"({"left_eye":[10,13],"right_eye":[22,13],"nose":[16,19],"mouth":[16,25]})",
                        "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpLandmarkOptions options;
    options.host = "127.0.0.1";
    options.port = port;
    options.path = "/landmarks";
    const auto adapter = make_http_landmark_adapter(options);
    const ImagePlane image = random_image(32, 32, 17);
    const LandmarkSet lm = detect_landmarks(image, adapter.get());
    CHECK(lm.left_eye.x == 10);
    CHECK(lm.mouth.y == 25);

    report_face = false;
    try {
        detect_landmarks(image, adapter.get());
        FAIL("expected detection error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DetectionFailure);
    }

    server.stop();
    server_thread.join();
}

TEST_CASE("landmark validation") {
    LandmarkSet lm = canonical_landmarks(32, 32);
    CHECK_NOTHROW(validate_landmarks(lm, 32, 32));
    lm.nose.x = 32;  // out of bounds
    CHECK_THROWS_AS(validate_landmarks(lm, 32, 32), Error);
    lm = canonical_landmarks(32, 32);
    std::swap(lm.left_eye, lm.right_eye);
    CHECK_THROWS_AS(validate_landmarks(lm, 32, 32), Error);
}

TEST_CASE("sticker mask matches the default-spec popcount oracle") {
    const LandmarkSet lm = canonical_landmarks(112, 112);
    const StickerSpec spec;
    const BinaryMask mask = build_sticker_mask(lm, spec, 112, 112);
    const BinaryMask oracle = sticker_oracle(lm, spec, 112, 112);
    CHECK(mask.values == oracle.values);
    CHECK(mask.popcount() == oracle.popcount());
    CHECK(mask.popcount() > 0);

    // Identical across channels.
    for (int y = 0; y < 112; ++y) {
        for (int x = 0; x < 112; ++x) {
            CHECK(mask.at(y, x, 0) == mask.at(y, x, 1));
            CHECK(mask.at(y, x, 0) == mask.at(y, x, 2));
        }
    }
}

TEST_CASE("sticker mask equals brute-force rasterization on 1000 random draws") {
    Rng rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const int height = rng.uniform_int(16, 64);
        const int width = rng.uniform_int(16, 64);
        LandmarkSet lm = random_landmarks(rng, height, width);
        StickerSpec spec;
        spec.eye = {rng.uniform(0.01, 0.6), rng.uniform(0.01, 0.6)};
        spec.nose = {rng.uniform(0.01, 0.6), rng.uniform(0.01, 0.6)};
        spec.mouth = {rng.uniform(0.01, 0.6), rng.uniform(0.01, 0.6)};
        const BinaryMask mask = build_sticker_mask(lm, spec, height, width);
        const BinaryMask oracle = sticker_oracle(lm, spec, height, width);
        REQUIRE(mask.values == oracle.values);
    }
}

TEST_CASE("overlapping boxes keep union semantics") {
    LandmarkSet lm = canonical_landmarks(32, 32);
    lm.nose = lm.mouth;  // force overlap
    const BinaryMask mask = build_sticker_mask(lm, StickerSpec{}, 32, 32);
    for (std::uint8_t v : mask.values) CHECK(v <= 1);
}

TEST_CASE("sticker spec rejects fractions outside (0, 0.6]") {
    StickerSpec spec;
    spec.eye = {0.0, 0.1};
    CHECK_THROWS_AS(validate_sticker_spec(spec), Error);
    spec.eye = {0.61, 0.1};
    CHECK_THROWS_AS(validate_sticker_spec(spec), Error);
}

TEST_CASE("high_pass: constant image yields exactly zero") {
    const ImagePlane flat = ImagePlane::filled(24, 24, 0.4);
    const std::vector<double> response = high_pass(flat, HighPassConfig{});
    for (double v : response) CHECK(v == 0.0);
    const BinaryMask mask = build_highpass_mask(flat, HighPassConfig{});
    CHECK(mask.popcount() == 0);
}

TEST_CASE("high_pass matches the naive convolution oracle") {
    const HighPassConfig cfg;
    SUBCASE("single impulse") {
        std::vector<double> data(plane_size(24, 24), 0.0);
        data[(12 * 24 + 12) * 3 + 1] = 1.0;
        const ImagePlane impulse(24, 24, std::move(data));
        const std::vector<double> got = high_pass(impulse, cfg);
        const std::vector<double> expected = highpass_oracle(impulse, cfg);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-9).scale(1.0));
        }
    }
    SUBCASE("random images") {
        for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
            const ImagePlane image = random_image(20, 28, seed);
            const std::vector<double> got = high_pass(image, cfg);
            const std::vector<double> expected = highpass_oracle(image, cfg);
            double max_err = 0.0;
            for (std::size_t i = 0; i < got.size(); ++i) {
                max_err = std::max(max_err, std::abs(got[i] - expected[i]));
            }
            CHECK(max_err < 1e-6);
        }
    }
}

TEST_CASE("high_pass output is normalized per channel") {
    const ImagePlane image = random_image(32, 32, 99);
    const std::vector<double> response = high_pass(image, HighPassConfig{});
    const std::size_t pixels = image.size() / 3;
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0, var = 0.0;
        for (std::size_t p = 0; p < pixels; ++p) mean += response[p * 3 + c];
        mean /= static_cast<double>(pixels);
        for (std::size_t p = 0; p < pixels; ++p) {
            const double d = response[p * 3 + c] - mean;
            var += d * d;
        }
        const double std_dev = std::sqrt(var / static_cast<double>(pixels));
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(std_dev - 1.0) < 1e-6);
    }
}

TEST_CASE("highpass mask is antitone in mu and matches the strict threshold") {
    const ImagePlane image = random_image(24, 24, 3);
    HighPassConfig cfg;
    cfg.mu = 0.0;
    const BinaryMask at_zero = build_highpass_mask(image, cfg);
    const std::vector<double> response = high_pass(image, cfg);
    for (std::size_t i = 0; i < response.size(); ++i) {
        CHECK(at_zero.values[i] == (response[i] > 0.0 ? 1 : 0));
    }
    double previous = -1.0;
    std::size_t previous_count = at_zero.values.size() + 1;
    for (double mu : {-0.5, 0.0, 0.5, 1.0, 2.0}) {
        cfg.mu = mu;
        const std::size_t count = build_highpass_mask(image, cfg).popcount();
        CHECK(count <= previous_count);
        // Subset check against the smaller threshold.
        if (previous >= -0.5) {
            HighPassConfig prev_cfg;
            prev_cfg.mu = previous;
            const BinaryMask prev_mask = build_highpass_mask(image, prev_cfg);
            const BinaryMask this_mask = build_highpass_mask(image, cfg);
            for (std::size_t i = 0; i < this_mask.values.size(); ++i) {
                if (this_mask.values[i]) CHECK(prev_mask.values[i] == 1);
            }
        }
        previous = mu;
        previous_count = count;
    }
}

TEST_CASE("highpass config validation") {
    HighPassConfig cfg;
    cfg.sigma = 0.0;
    CHECK_THROWS_AS(validate_highpass_config(cfg), Error);
    cfg.sigma = 2.0;
    cfg.kernel_radius = 5;  // below ceil(3·2) = 6
    CHECK_THROWS_AS(validate_highpass_config(cfg), Error);
}

TEST_CASE("combine_budget has union semantics and a two-value image") {
    const float eps = 8.0f / 255.0f;
    const float eps_boost = 32.0f / 255.0f;

    SUBCASE("both masks empty → uniform eps") {
        const BudgetMap budget = combine_budget(BinaryMask::zeros(16, 16),
                                                BinaryMask::zeros(16, 16), eps, eps_boost);
        for (float v : budget.values()) CHECK(v == eps);
    }
    SUBCASE("overlap boosts once, never twice") {
        BinaryMask a = BinaryMask::zeros(16, 16);
        BinaryMask b = BinaryMask::zeros(16, 16);
        a.values[10] = 1;
        b.values[10] = 1;
        b.values[11] = 1;
        const BudgetMap budget = combine_budget(a, b, eps, eps_boost);
        CHECK(budget.values()[10] == eps_boost);
        CHECK(budget.values()[11] == eps_boost);
        CHECK(budget.values()[12] == eps);
    }
    SUBCASE("random masks match the per-element conditional oracle") {
        Rng rng(77);
        BinaryMask a = BinaryMask::zeros(20, 20);
        BinaryMask b = BinaryMask::zeros(20, 20);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            a.values[i] = rng.uniform() < 0.2;
            b.values[i] = rng.uniform() < 0.2;
        }
        const BudgetMap budget = combine_budget(a, b, eps, eps_boost);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            const float expected = (a.values[i] || b.values[i]) ? eps_boost : eps;
            CHECK(budget.values()[i] == expected);
            CHECK((budget.values()[i] == eps || budget.values()[i] == eps_boost));
        }
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(
            combine_budget(BinaryMask::zeros(16, 16), BinaryMask::zeros(16, 17), eps, eps_boost),
            Error);
    }
}

TEST_CASE("init_attention: degenerate, deterministic, and mean-centered") {
    AttentionConfig cfg;
    SUBCASE("init_low = init_high = 1 gives all ones") {
        cfg.init_low = cfg.init_high = 1.0;
        const std::vector<double> alpha = init_attention(16, 16, cfg, 1);
        for (double v : alpha) CHECK(v == 1.0);
    }
    SUBCASE("fixed seed repeats exactly") {
        const std::vector<double> a = init_attention(32, 32, cfg, 9);
        const std::vector<double> b = init_attention(32, 32, cfg, 9);
        CHECK(a == b);
        const std::vector<double> c = init_attention(32, 32, cfg, 10);
        CHECK(a != c);
    }
    SUBCASE("sample mean near (low+high)/2 on a 112×112×3 draw") {
        const std::vector<double> alpha = init_attention(112, 112, cfg, 4);
        double mean = 0.0;
        for (double v : alpha) mean += v;
        mean /= static_cast<double>(alpha.size());
        CHECK(std::abs(mean - 1.0) < 0.005);
    }
}

TEST_CASE("update_attention follows the normalized step rule") {
    AttentionConfig cfg;
    cfg.z_alpha = 0.01;
    const std::vector<double> alpha(12, 1.0);

    SUBCASE("zero gradient leaves alpha unchanged") {
        const std::vector<double> out = update_attention(alpha, std::vector<double>(12, 0.0), cfg);
        CHECK(out == alpha);
    }
    SUBCASE("max element change equals z_alpha") {
        std::vector<double> grad(12, 0.0);
        grad[3] = 5.0;
        grad[7] = -2.5;
        const std::vector<double> out = update_attention(alpha, grad, cfg);
        // Element-wise oracle: alpha − z·g/max|g|.
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i] == doctest::Approx(1.0 - 0.01 * grad[i] / 5.0));
        }
        CHECK(std::abs(out[3] - 1.0) == doctest::Approx(0.01));
    }
    SUBCASE("clamp floors the update") {
        AttentionConfig tight;
        tight.z_alpha = 5.0;
        tight.clamp_low = 0.0;
        tight.clamp_high = 2.0;
        std::vector<double> grad(12, 1.0);
        const std::vector<double> out = update_attention(alpha, grad, tight);
        for (double v : out) CHECK(v == 0.0);  // 1 − 5 clamped at 0
    }
    SUBCASE("non-finite gradient raises") {
        std::vector<double> grad(12, 0.0);
        grad[0] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(update_attention(alpha, grad, cfg), Error);
    }
    SUBCASE("no element ever moves more than z_alpha") {
        Rng rng(5);
        std::vector<double> a(64), g(64);
        for (auto& v : a) v = rng.uniform(0.0, 2.0);
        for (auto& v : g) v = rng.normal() * 10.0;
        const std::vector<double> out = update_attention(a, g, cfg);
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(std::abs(out[i] - a[i]) <= cfg.z_alpha + 1e-12);
        }
    }
}
