#include <catch2/catch_amalgamated.hpp>

#include "satr/noise.hpp"
#include "satr/synthgen.hpp"

#include "test_util.hpp"

using namespace satr;

TEST_CASE("splitmix64 reference stream", "[noise]") {
    SplitMix64 a(0);
    CHECK(a.next_u64() == 0xE220A8397B1DCDAFull);
    CHECK(a.next_u64() == 0x6E789E6AA1B965F4ull);
    CHECK(a.next_u64() == 0x06C45D188009454Full);
    SplitMix64 b(1);
    CHECK(b.next_u64() == 0x910A2DEC89025CC1ull);
    CHECK(b.next_u64() == 0xBEEB8DA1658EEC67ull);
    SplitMix64 c(1234567);
    CHECK(c.next_u64() == 0x599ED017FB08FC85ull);

    SplitMix64 d(0);
    CHECK(d.next_double() == Catch::Approx(0.8833108082136426).margin(1e-18));

    // derive_seed(base, k) is the k-th splitmix64 output of `base`
    SplitMix64 e(42);
    CHECK(derive_seed(42, 0) == e.next_u64());
    CHECK(derive_seed(42, 1) == e.next_u64());
}

TEST_CASE("psnr definition", "[noise]") {
    SECTION("identical images report infinity") {
        Tensor img({1, 2, 2}, {1, 2, 3, 4});
        CHECK(std::isinf(psnr(img, img)));
    }
    SECTION("constant 8-bit images differing by one everywhere") {
        Tensor a({1, 4, 4});
        Tensor b({1, 4, 4});
        std::fill(a.data().begin(), a.data().end(), 255.0);
        std::fill(b.data().begin(), b.data().end(), 254.0);
        CHECK(psnr(a, b) == Catch::Approx(48.13080360867910).margin(1e-10));
    }
    SECTION("halving the mse raises psnr by about 3.0103 dB") {
        Tensor ref({1, 2, 2}, {10, 10, 10, 10});
        Tensor one({1, 2, 2}, {10 + 2.0, 10, 10, 10});
        Tensor half({1, 2, 2}, {10 + std::sqrt(2.0), 10, 10, 10});
        CHECK(psnr(ref, half) - psnr(ref, one) ==
              Catch::Approx(3.0102999566398120).margin(1e-10));
    }
    SECTION("shape mismatch") {
        CHECK_THROWS_AS(psnr(Tensor({1, 2, 2}), Tensor({1, 2, 3})), DimensionError);
    }
}

TEST_CASE("mean-one rayleigh speckle", "[noise]") {
    SECTION("monte carlo mean of a million normalized draws") {
        SplitMix64 rng(12345);
        const double sigma = 1.0;
        const double mean_factor = sigma * std::sqrt(3.14159265358979323846 / 2.0);
        double sum_normalized = 0.0;
        double sum_field = 0.0;
        const int n = 1000000;
        for (int i = 0; i < n; ++i) {
            const double r = noise_detail::rayleigh(rng, sigma);
            sum_normalized += r / mean_factor;
            sum_field += 1.0 + r - mean_factor;
        }
        CHECK(sum_normalized / n == Catch::Approx(1.0).margin(0.002));
        CHECK(sum_field / n == Catch::Approx(1.0).margin(0.002));
    }
    SECTION("sigma to zero limit approaches the identity") {
        SceneSpec scene_spec;
        scene_spec.width = 96;
        scene_spec.height = 96;
        scene_spec.seed = 4;
        const Scene scene = generate_scene(scene_spec);
        NoiseConfig cfg;
        cfg.target_psnr_db = 80.0;
        cfg.seed = 9;
        const CorruptResult result = corrupt_rayleigh(scene.image, cfg);
        for (std::size_t i = 0; i < scene.image.numel(); ++i) {
            CHECK(std::abs(result.image[i] - scene.image[i]) <=
                  1e-2 * std::max(1.0, scene.image[i]));
        }
    }
}

TEST_CASE("psnr calibration hits its target", "[noise]") {
    SceneSpec scene_spec;
    scene_spec.seed = 21;
    const Scene scene = generate_scene(scene_spec);

    for (double target : {35.0, 25.0}) {
        NoiseConfig cfg;
        cfg.target_psnr_db = target;
        cfg.seed = 77;
        const CorruptResult result = corrupt_rayleigh(scene.image, cfg);
        CHECK(std::abs(result.achieved_psnr_db - target) <= 0.5);
        CHECK(std::abs(psnr(scene.image, result.image) - target) <= 0.5);
    }

    SECTION("unreachable targets raise a calibration error") {
        Tensor flat({1, 8, 8});
        std::fill(flat.data().begin(), flat.data().end(), 128.0);
        NoiseConfig cfg;
        cfg.target_psnr_db = 80.0;
        cfg.seed = 1;
        // 8-bit path: quantization makes the psnr jump discretely around
        // high targets
        CHECK_THROWS_AS(corrupt_rayleigh(flat, cfg, 255.0, true), CalibrationError);
    }
}

TEST_CASE("corruption is deterministic and range preserving", "[noise]") {
    SplitMix64 rng(31);
    const Tensor img = testutil::random_image({1, 24, 24}, rng, 0.0, 1.0);

    NoiseConfig cfg;
    cfg.sigma = 0.4;
    cfg.seed = 123;
    const CorruptResult a = corrupt_rayleigh(img, cfg);
    const CorruptResult b = corrupt_rayleigh(img, cfg);
    CHECK(a.image.data() == b.image.data());

    for (double v : a.image.data()) CHECK(v >= 0.0);

    Tensor eight({1, 6, 6});
    for (std::size_t i = 0; i < eight.numel(); ++i) eight[i] = 100.0 + double(i * 4);
    const CorruptResult q = corrupt_rayleigh(eight, cfg, 255.0, true);
    for (double v : q.image.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 255.0);
        CHECK(v == std::nearbyint(v));
    }

    SECTION("negative input rejected") {
        Tensor neg({1, 2, 2}, {0.5, -0.1, 0.2, 0.3});
        CHECK_THROWS_AS(corrupt_rayleigh(neg, cfg), ArgumentError);
    }
    SECTION("config must set exactly one knob") {
        NoiseConfig both;
        both.sigma = 0.3;
        both.target_psnr_db = 30.0;
        CHECK_THROWS_AS(corrupt_rayleigh(img, both), ArgumentError);
        NoiseConfig neither;
        CHECK_THROWS_AS(corrupt_rayleigh(img, neither), ArgumentError);
    }
}

TEST_CASE("achieved psnr decreases monotonically in sigma", "[noise]") {
    SceneSpec scene_spec;
    scene_spec.width = 96;
    scene_spec.height = 64;
    scene_spec.seed = 8;
    const Scene scene = generate_scene(scene_spec);

    double prev = std::numeric_limits<double>::infinity();
    for (double sigma : {0.01, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2}) {
        NoiseConfig cfg;
        cfg.sigma = sigma;
        cfg.seed = 55;
        const CorruptResult result = corrupt_rayleigh(scene.image, cfg);
        CHECK(result.achieved_psnr_db < prev);
        prev = result.achieved_psnr_db;
    }
}
