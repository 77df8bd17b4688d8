#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "satr/network.hpp"
#include "satr/synthgen.hpp"

#include "test_util.hpp"

using namespace satr;

namespace {

double loss_of(const Model& model, const LabeledChipSet& data,
               const std::vector<std::size_t>& batch) {
    Gradients scratch = Gradients::zeros_like(model.weights);
    return compute_gradients(model, data, batch, scratch);
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

/// 16x16 chips with tiny rendered targets, one class per label.
LabeledChipSet tiny_target_set(std::size_t per_class, std::uint64_t seed,
                               double speckle = 0.15) {
    LabeledChipSet set;
    set.class_names = target_class_names();
    for (std::size_t k = 0; k < set.class_names.size(); ++k) {
        for (std::size_t j = 0; j < per_class; ++j) {
            ChipSpec spec;
            spec.class_name = set.class_names[k];
            spec.chip_size = 16;
            spec.scale = 0.25;
            spec.jitter_px = 1.0;
            spec.scale_jitter = 0.05;
            spec.speckle_sigma = speckle;
            spec.clutter_density = 0.0;
            spec.seed = derive_seed(seed, k * per_class + j);
            set.chips.push_back(generate_chip(spec));
            set.labels.push_back(k);
        }
    }
    return set;
}

}  // namespace

TEST_CASE("forward with zero weights yields the uniform distribution", "[network]") {
    NetworkSpec spec;
    spec.input_shape = {1, 6, 6};
    spec.layers = {LayerSpec::Conv(2, 3, 1, 1), LayerSpec::Relu(), LayerSpec::Flatten(),
                   LayerSpec::Dense(4), LayerSpec::Softmax()};
    spec.class_names = {"a", "b", "c", "d"};
    Model model = make_model(spec, 0);
    for (ParamBlock& b : model.weights.blocks) {
        std::fill(b.values.begin(), b.values.end(), 0.0);
    }
    SplitMix64 rng(3);
    const ForwardTrace trace = forward(model, testutil::random_image({1, 6, 6}, rng));
    const Tensor& probs = trace.activations.back();
    for (std::size_t i = 0; i < 4; ++i) CHECK(probs[i] == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("forward output is a probability distribution", "[network]") {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Model model = testutil::random_model(rng);
        const Tensor image = testutil::random_image(model.spec.input_shape, rng);
        const ForwardTrace trace = forward(model, image);
        const Tensor& probs = trace.activations.back();
        double sum = 0.0;
        for (double v : probs.data()) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("forward trace is byte-identical across runs", "[network]") {
    SplitMix64 rng(9);
    const Model model = make_model(testutil::micro_spec(), 1234);
    const Tensor image = testutil::random_image({1, 8, 8}, rng);
    const ForwardTrace a = forward(model, image);
    const ForwardTrace b = forward(model, image);
    REQUIRE(a.activations.size() == b.activations.size());
    REQUIRE(a.activations.size() == model.spec.layers.size());
    for (std::size_t i = 0; i < a.activations.size(); ++i) {
        CHECK(same_bits(a.activations[i].data(), b.activations[i].data()));
    }
}

TEST_CASE("forward rejects a wrong input shape", "[network]") {
    const Model model = make_model(testutil::micro_spec(), 1);
    CHECK_THROWS_AS(forward(model, Tensor({1, 7, 8})), DimensionError);
}

TEST_CASE("extract_features taps the penultimate representation", "[network]") {
    const Model mini = make_model(mini_cnn_spec({"block", "cone", "sphere", "cylinder"}), 2);
    SplitMix64 rng(11);
    const Tensor image = testutil::random_image({1, 64, 64}, rng);
    const std::vector<double> f = extract_features(mini, image);
    CHECK(f.size() == 64);

    const std::vector<double> again = extract_features(mini, image);
    CHECK(f == again);

    CHECK_THROWS_AS(extract_features(mini, image, std::size_t{99}), ArgumentError);
}

TEST_CASE("features of a trained model separate the classes", "[network]") {
    Model model = make_model(testutil::micro16_spec(), 21);
    const LabeledChipSet train = tiny_target_set(6, 500);
    FineTuneConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.02;
    cfg.seed = 7;
    fine_tune(model, train, cfg);

    ChipSpec block_spec, sphere_spec;
    block_spec.class_name = "block";
    sphere_spec.class_name = "sphere";
    for (ChipSpec* s : {&block_spec, &sphere_spec}) {
        s->chip_size = 16;
        s->scale = 0.25;
        s->jitter_px = 1.0;
        s->scale_jitter = 0.05;
        s->speckle_sigma = 0.15;
        s->clutter_density = 0.0;
        s->seed = 999;
    }
    const std::vector<double> fb = extract_features(model, generate_chip(block_spec));
    const std::vector<double> fs = extract_features(model, generate_chip(sphere_spec));
    double max_diff = 0.0;
    for (std::size_t i = 0; i < fb.size(); ++i) {
        max_diff = std::max(max_diff, std::abs(fb[i] - fs[i]));
    }
    CHECK(max_diff > 1e-6);
}

TEST_CASE("replace_head reinitializes only the final dense layer", "[network]") {
    const Model model = make_model(testutil::micro_spec(3), 77);
    const Model swapped = replace_head(model, {"w", "x", "y", "z"}, 11);

    CHECK(swapped.spec.class_names.size() == 4);
    const std::size_t head = swapped.spec.layers.size() - 2;
    CHECK(swapped.weights.find(head, "weights").shape ==
          std::vector<std::size_t>{4, model.weights.find(head, "weights").shape[1]});

    for (const ParamBlock& b : model.weights.blocks) {
        if (b.layer_index == head) continue;
        CHECK(same_bits(b.values, swapped.weights.find(b.layer_index, b.name).values));
    }

    SECTION("head draws are reproducible from the seed") {
        const Model again = replace_head(model, {"w", "x", "y", "z"}, 11);
        CHECK(same_bits(again.weights.find(head, "weights").values,
                        swapped.weights.find(head, "weights").values));
        for (double v : swapped.weights.find(head, "weights").values) {
            CHECK(v >= -0.05);
            CHECK(v < 0.05);
        }
        for (double v : swapped.weights.find(head, "bias").values) CHECK(v == 0.0);
    }
    SECTION("empty class list rejected") {
        CHECK_THROWS_AS(replace_head(model, {}, 0), ArgumentError);
    }
}

TEST_CASE("fine_tune with zero learning rate changes nothing", "[network]") {
    Model model = make_model(testutil::micro_spec(), 13);
    const Model before = model;
    SplitMix64 rng(15);
    const LabeledChipSet data = testutil::random_chipset(model.spec, 6, rng);
    FineTuneConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 5;
    const std::vector<double> history = fine_tune(model, data, cfg);

    REQUIRE(history.size() == 5);
    for (double h : history) CHECK(h == history[0]);
    for (std::size_t b = 0; b < model.weights.blocks.size(); ++b) {
        CHECK(same_bits(model.weights.blocks[b].values, before.weights.blocks[b].values));
    }
}

TEST_CASE("fine_tune memorizes a one-example-per-class set", "[network]") {
    Model model = make_model(testutil::micro_spec(2), 17);
    SplitMix64 rng(19);
    const LabeledChipSet data = testutil::random_chipset(model.spec, 2, rng);
    FineTuneConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.epochs = 200;
    cfg.batch_size = 1;
    const std::vector<double> history = fine_tune(model, data, cfg);
    REQUIRE(history.size() == 200);
    CHECK(history.back() < 0.01);
}

TEST_CASE("fine_tune validates its training set", "[network]") {
    Model model = make_model(testutil::micro_spec(3), 23);
    LabeledChipSet empty;
    empty.class_names = model.spec.class_names;
    CHECK_THROWS_AS(fine_tune(model, empty, FineTuneConfig{}), TrainingDataError);

    SplitMix64 rng(25);
    LabeledChipSet missing = testutil::random_chipset(model.spec, 4, rng);
    for (std::size_t& lab : missing.labels) lab = lab % 2;  // class 2 empty
    CHECK_THROWS_AS(fine_tune(model, missing, FineTuneConfig{}), TrainingDataError);

    LabeledChipSet wrong_shape;
    wrong_shape.class_names = model.spec.class_names;
    wrong_shape.chips.push_back(Tensor({1, 4, 4}));
    wrong_shape.labels.push_back(0);
    wrong_shape.chips.push_back(Tensor({1, 4, 4}));
    wrong_shape.labels.push_back(1);
    wrong_shape.chips.push_back(Tensor({1, 4, 4}));
    wrong_shape.labels.push_back(2);
    CHECK_THROWS_AS(fine_tune(model, wrong_shape, FineTuneConfig{}), DimensionError);
}

namespace {

/// Central differences are only meaningful away from the relu kinks and
/// maxpool argmax ties, so fixtures whose operating point sits within
/// `margin` of one are rejected (the h=1e-5 probe moves these micro-net
/// activations by no more than ~2e-5).
bool fixture_is_smooth(const Model& model, const LabeledChipSet& data, double margin = 1e-4) {
    for (const Tensor& chip : data.chips) {
        const ForwardTrace trace = forward(model, chip);
        for (std::size_t li = 0; li < model.spec.layers.size(); ++li) {
            const LayerSpec& l = model.spec.layers[li];
            const Tensor& input = li == 0 ? chip : trace.activations[li - 1];
            if (l.kind == LayerKind::relu) {
                for (double v : input.data()) {
                    if (std::abs(v) < margin) return false;
                }
            } else if (l.kind == LayerKind::maxpool) {
                const std::size_t oh = (input.dim(1) - l.window) / l.stride + 1;
                const std::size_t ow = (input.dim(2) - l.window) / l.stride + 1;
                for (std::size_t c = 0; c < input.dim(0); ++c) {
                    for (std::size_t y = 0; y < oh; ++y) {
                        for (std::size_t x = 0; x < ow; ++x) {
                            double top = -1e300, second = -1e300;
                            for (std::size_t r = 0; r < l.window; ++r) {
                                for (std::size_t cc = 0; cc < l.window; ++cc) {
                                    const double v =
                                        input.at(c, y * l.stride + r, x * l.stride + cc);
                                    if (v > top) {
                                        second = top;
                                        top = v;
                                    } else if (v > second) {
                                        second = v;
                                    }
                                }
                            }
                            // ties among non-positive values are killed by
                            // the preceding relu and carry no gradient
                            if (top > 0.0 && top - second < margin) return false;
                        }
                    }
                }
            }
        }
    }
    return true;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences", "[network][gradcheck]") {
    const double h = 1e-5;
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; checked < 10; ++seed) {
        REQUIRE(seed < 200);  // plenty of smooth fixtures in this range
        Model model = make_model(testutil::micro_spec(), derive_seed(1000, seed));
        std::size_t n_params = 0;
        for (const ParamBlock& b : model.weights.blocks) n_params += b.values.size();
        REQUIRE(n_params <= 500);

        SplitMix64 rng(derive_seed(2000, seed));
        const LabeledChipSet data = testutil::random_chipset(model.spec, 3, rng);
        const std::vector<std::size_t> batch = {0, 1, 2};
        if (!fixture_is_smooth(model, data)) continue;
        ++checked;

        Gradients grads = Gradients::zeros_like(model.weights);
        compute_gradients(model, data, batch, grads);

        double max_rel = 0.0;
        for (std::size_t b = 0; b < model.weights.blocks.size(); ++b) {
            ParamBlock& block = model.weights.blocks[b];
            for (std::size_t i = 0; i < block.values.size(); ++i) {
                const double saved = block.values[i];
                block.values[i] = saved + h;
                const double up = loss_of(model, data, batch);
                block.values[i] = saved - h;
                const double down = loss_of(model, data, batch);
                block.values[i] = saved;
                const double numeric = (up - down) / (2.0 * h);
                const double analytic = grads.blocks[b].values[i];
                const double rel = std::abs(analytic - numeric) /
                                   std::max({std::abs(analytic), std::abs(numeric), 1e-5});
                max_rel = std::max(max_rel, rel);
            }
        }
        INFO("seed " << seed);
        CHECK(max_rel < 1e-4);
    }
}

TEST_CASE("freeze_depth keeps early layers bitwise fixed", "[network]") {
    Model model = make_model(testutil::micro_spec(), 31);
    const Model before = model;
    SplitMix64 rng(33);
    const LabeledChipSet data = testutil::random_chipset(model.spec, 6, rng);
    FineTuneConfig cfg;
    cfg.epochs = 3;
    cfg.freeze_depth = model.spec.layers.size() - 2;  // only the head may move
    fine_tune(model, data, cfg);

    const std::size_t head = model.spec.layers.size() - 2;
    bool head_changed = false;
    for (const ParamBlock& b : before.weights.blocks) {
        const ParamBlock& after = model.weights.find(b.layer_index, b.name);
        if (b.layer_index < cfg.freeze_depth) {
            CHECK(same_bits(b.values, after.values));
        } else if (b.layer_index == head && !same_bits(b.values, after.values)) {
            head_changed = true;
        }
    }
    CHECK(head_changed);
}

TEST_CASE("training loss is non-increasing at a small learning rate", "[network]") {
    Model model = make_model(testutil::micro16_spec(), 41);
    const LabeledChipSet data = tiny_target_set(10, 600);
    FineTuneConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 21;
    cfg.seed = 5;
    const std::vector<double> history = fine_tune(model, data, cfg);

    std::size_t increases = 0;
    for (std::size_t e = 1; e < history.size(); ++e) {
        if (history[e] > history[e - 1]) {
            ++increases;
            CHECK(history[e] < history[e - 1] * 1.10);
        }
    }
    // allow at most 5% of the epoch-to-epoch steps to tick upward
    CHECK(increases <= (history.size() - 1) / 20);
}

TEST_CASE("dump_activations renders normalized channels", "[network]") {
    Model model = make_model(testutil::micro_spec(), 43);
    SplitMix64 rng(45);
    const Tensor image = testutil::random_image({1, 8, 8}, rng);

    SECTION("constant channel renders mid-gray") {
        for (ParamBlock& b : model.weights.blocks) {
            if (b.layer_index == 0) std::fill(b.values.begin(), b.values.end(), 0.0);
        }
        const auto images = dump_activations(model, image, {0});
        REQUIRE(!images.empty());
        for (const ActivationImage& img : images) {
            for (std::uint8_t p : img.pixels) CHECK(p == 128);
        }
    }
    SECTION("channel counts match the spec") {
        const auto images = dump_activations(model, image, {0, 1, 2});
        std::size_t conv_channels = 0, relu_channels = 0, pool_channels = 0;
        for (const ActivationImage& img : images) {
            if (img.layer_index == 0) ++conv_channels;
            if (img.layer_index == 1) ++relu_channels;
            if (img.layer_index == 2) ++pool_channels;
        }
        CHECK(conv_channels == model.spec.layers[0].out_channels);
        CHECK(relu_channels == model.spec.layers[0].out_channels);
        CHECK(pool_channels == model.spec.layers[0].out_channels);
        for (const ActivationImage& img : images) {
            if (img.layer_index == 2) {
                CHECK(img.height == 4);
                CHECK(img.width == 4);
            }
        }
    }
    SECTION("byte-identical across runs") {
        const auto a = dump_activations(model, image, {0, 2});
        const auto b = dump_activations(model, image, {0, 2});
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].pixels == b[i].pixels);
    }
    SECTION("bad indices and non-spatial layers rejected") {
        CHECK_THROWS_AS(dump_activations(model, image, {99}), ArgumentError);
        const std::size_t dense_idx = model.spec.layers.size() - 2;
        CHECK_THROWS_AS(dump_activations(model, image, {dense_idx}), ArgumentError);
    }
}
