#include <catch2/catch_amalgamated.hpp>

#include "satr/dataset.hpp"
#include "satr/metrics.hpp"
#include "satr/svm.hpp"
#include "satr/synthgen.hpp"

using namespace satr;

namespace {

ChipSpec noise_free_block() {
    ChipSpec spec;
    spec.class_name = "block";
    spec.jitter_px = 0.0;
    spec.orientation_jitter_deg = 0.0;
    spec.scale_jitter = 0.0;
    spec.speckle_sigma = 0.0;
    spec.clutter_density = 0.0;
    return spec;
}

}  // namespace

TEST_CASE("noise-free chip is the exact geometric template", "[synthgen]") {
    const Tensor chip = generate_chip(noise_free_block());
    REQUIRE(chip.shape() == std::vector<std::size_t>{1, 64, 64});

    // block highlight: |x|<=8, |y|<=6 around the center (32,32) sampled at
    // pixel centers; shadow continues downrange to x=22
    CHECK(chip.at(0, 32, 32) == kHighlightLevel);
    CHECK(chip.at(0, 26, 24) == kHighlightLevel);
    CHECK(chip.at(0, 32, 45) == kShadowLevel);
    CHECK(chip.at(0, 5, 5) == kBackgroundLevel);
    CHECK(chip.at(0, 25, 32) == kBackgroundLevel);  // just above the highlight

    std::size_t highlight = 0, shadow = 0, background = 0;
    for (double v : chip.data()) {
        if (v == kHighlightLevel) ++highlight;
        else if (v == kShadowLevel) ++shadow;
        else if (v == kBackgroundLevel) ++background;
    }
    CHECK(highlight == 16 * 12);  // cols 24..39, rows 26..37
    CHECK(shadow == 14 * 12);
    CHECK(highlight + shadow + background == 64 * 64);
}

TEST_CASE("every class renders with a distinct silhouette", "[synthgen]") {
    for (const std::string& name : target_class_names()) {
        ChipSpec spec = noise_free_block();
        spec.class_name = name;
        const Tensor chip = generate_chip(spec);
        std::size_t highlight = 0, shadow = 0;
        for (double v : chip.data()) {
            if (v == kHighlightLevel) ++highlight;
            if (v == kShadowLevel) ++shadow;
        }
        INFO(name);
        CHECK(highlight > 30);
        CHECK(shadow > 30);
    }
    SECTION("cylinder aspect ratio is at least 3") {
        ChipSpec spec = noise_free_block();
        spec.class_name = "cylinder";
        const Tensor chip = generate_chip(spec);
        std::size_t min_r = 64, max_r = 0, min_c = 64, max_c = 0;
        for (std::size_t r = 0; r < 64; ++r) {
            for (std::size_t c = 0; c < 64; ++c) {
                if (chip.at(0, r, c) == kHighlightLevel) {
                    min_r = std::min(min_r, r);
                    max_r = std::max(max_r, r);
                    min_c = std::min(min_c, c);
                    max_c = std::max(max_c, c);
                }
            }
        }
        const double long_side = static_cast<double>(max_r - min_r + 1);
        const double short_side = static_cast<double>(max_c - min_c + 1);
        CHECK(long_side / short_side >= 3.0);
    }
    SECTION("unknown class") {
        ChipSpec spec = noise_free_block();
        spec.class_name = "wedge";
        CHECK_THROWS_AS(generate_chip(spec), ArgumentError);
    }
}

TEST_CASE("chip generation is deterministic per seed", "[synthgen]") {
    ChipSpec spec;
    spec.class_name = "cone";
    spec.seed = 99;
    const Tensor a = generate_chip(spec);
    const Tensor b = generate_chip(spec);
    CHECK(a.data() == b.data());

    spec.seed = 100;
    const Tensor c = generate_chip(spec);
    CHECK(a.data() != c.data());
}

TEST_CASE("geometry exceeding the chip raises", "[synthgen]") {
    ChipSpec spec;
    spec.class_name = "sphere";
    spec.scale = 2.0;  // reach 46 from center of a 64-chip
    CHECK_THROWS_AS(generate_chip(spec), GeometryError);
}

TEST_CASE("highlight stands off the background across random chips", "[synthgen]") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ChipSpec spec;
        spec.class_name = "block";
        spec.seed = seed;
        const Tensor chip = generate_chip(spec);

        ChipSpec clean = spec;
        clean.speckle_sigma = 0.0;
        clean.clutter_density = 0.0;
        const Tensor mask = generate_chip(clean);

        double highlight_sum = 0.0, background_sum = 0.0;
        std::size_t highlight_n = 0, background_n = 0;
        for (std::size_t i = 0; i < chip.numel(); ++i) {
            if (mask[i] == kHighlightLevel) {
                highlight_sum += chip[i];
                ++highlight_n;
            } else if (mask[i] == kBackgroundLevel) {
                background_sum += chip[i];
                ++background_n;
            }
        }
        REQUIRE(highlight_n > 0);
        REQUIRE(background_n > 0);
        CHECK(highlight_sum / highlight_n - background_sum / background_n >= 0.3);
    }
}

TEST_CASE("generate_dataset is balanced and reproducible", "[synthgen]") {
    const LabeledChipSet set = generate_dataset(60, 1002);
    REQUIRE(set.size() == 240);
    std::vector<std::size_t> counts(4, 0);
    for (std::size_t lab : set.labels) counts[lab]++;
    for (std::size_t c : counts) CHECK(c == 60);

    const LabeledChipSet again = generate_dataset(60, 1002);
    bool identical = true;
    for (std::size_t i = 0; i < set.size() && identical; ++i) {
        identical = set.chips[i].data() == again.chips[i].data();
    }
    CHECK(identical);

    const LabeledChipSet other = generate_dataset(60, 1003);
    bool any_differ = false;
    for (std::size_t i = 0; i < set.size() && !any_differ; ++i) {
        any_differ = set.chips[i].data() != other.chips[i].data();
    }
    CHECK(any_differ);
}

TEST_CASE("train/test split is disjoint with per-class counts", "[synthgen]") {
    const LabeledChipSet set = generate_dataset(30, 5);
    const TrainTestSplit split = split_per_class(set, 20, 10, 42);
    CHECK(split.train_indices.size() == 80);
    CHECK(split.test_indices.size() == 40);

    std::set<std::size_t> train(split.train_indices.begin(), split.train_indices.end());
    for (std::size_t t : split.test_indices) CHECK(train.count(t) == 0);

    std::vector<std::size_t> train_counts(4, 0), test_counts(4, 0);
    for (std::size_t i : split.train_indices) train_counts[set.labels[i]]++;
    for (std::size_t i : split.test_indices) test_counts[set.labels[i]]++;
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(train_counts[k] == 20);
        CHECK(test_counts[k] == 10);
    }

    CHECK_THROWS_AS(split_per_class(set, 25, 10, 42), TrainingDataError);
}

TEST_CASE("scenes render targets onto clutter with exact bookkeeping", "[synthgen]") {
    SECTION("empty target list gives a pure background scene") {
        SceneSpec spec;
        spec.width = 80;
        spec.height = 60;
        spec.clutter_density = 0.0;
        spec.speckle_sigma = 0.0;
        const Scene scene = generate_scene(spec);
        CHECK(scene.truth.empty());
        for (double v : scene.image.data()) CHECK(v == kBackgroundLevel);
    }
    SECTION("two targets give exactly two truth boxes") {
        SceneSpec spec;
        spec.targets = {{"block", 64.0, 64.0, 0.0}, {"sphere", 160.0, 128.0, 0.0}};
        spec.seed = 7;
        const Scene scene = generate_scene(spec);
        REQUIRE(scene.truth.size() == 2);
        CHECK(scene.truth[0].class_name == "block");
        CHECK(scene.truth[0].x == 32);
        CHECK(scene.truth[0].y == 32);
        CHECK(scene.truth[0].width == 64);
        CHECK(scene.truth[1].class_name == "sphere");
        CHECK(scene.truth[1].x == 128);
        CHECK(scene.truth[1].y == 96);
    }
    SECTION("overlapping placements rejected") {
        SceneSpec spec;
        spec.targets = {{"block", 64.0, 64.0, 0.0}, {"sphere", 100.0, 64.0, 0.0}};
        CHECK_THROWS_AS(generate_scene(spec), GeometryError);
    }
    SECTION("out-of-bounds placement rejected") {
        SceneSpec spec;
        spec.targets = {{"block", 16.0, 64.0, 0.0}};
        CHECK_THROWS_AS(generate_scene(spec), GeometryError);
    }
    SECTION("target regions outshine the background over 50 random scenes") {
        SplitMix64 rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            SceneSpec spec;
            spec.seed = rng.next_u64();
            const std::vector<std::string>& names = target_class_names();
            const double cx = 64.0 + 16.0 * double(rng.next_below(9));
            const double cy = 64.0 + 8.0 * double(rng.next_below(8));
            spec.targets = {{names[rng.next_below(4)], cx, cy,
                             rng.uniform(-15.0, 15.0)}};
            const Scene scene = generate_scene(spec);

            const GroundTruthBox& box = scene.truth[0];
            double in_sum = 0.0, out_sum = 0.0;
            std::size_t in_n = 0, out_n = 0;
            for (std::size_t y = 0; y < spec.height; ++y) {
                for (std::size_t x = 0; x < spec.width; ++x) {
                    const bool inside = static_cast<long>(x) >= box.x &&
                                        static_cast<long>(x) < box.x + 64 &&
                                        static_cast<long>(y) >= box.y &&
                                        static_cast<long>(y) < box.y + 64;
                    if (inside) {
                        in_sum += scene.image.at(0, y, x);
                        ++in_n;
                    } else {
                        out_sum += scene.image.at(0, y, x);
                        ++out_n;
                    }
                }
            }
            CHECK(in_sum / in_n > out_sum / out_n);
        }
    }
}

TEST_CASE("raw-pixel svm on the standard dataset reaches 0.6 mean recall", "[synthgen]") {
    const LabeledChipSet set = generate_dataset(30, 1002);
    const TrainTestSplit split = split_per_class(set, 20, 10, 1);

    FeatureSet fs;
    fs.class_names = set.class_names;
    for (std::size_t i : split.train_indices) {
        fs.vectors.push_back(set.chips[i].data());
        fs.labels.push_back(set.labels[i]);
    }
    const SvmModel svm = train_svm(fs, 1.0, 2);

    ConfusionMatrix cm(set.class_names);
    for (std::size_t i : split.test_indices) {
        cm.add(set.labels[i], classify(svm, set.chips[i].data()).class_index);
    }
    const PRReport report = precision_recall(cm);
    REQUIRE(report.mean_recall.has_value());
    CHECK(*report.mean_recall >= 0.6);
}
