#pragma once

// Helpers shared by the unit suites and the acceptance runner.

#include <cstdint>
#include <string>
#include <vector>

#include "satr/network.hpp"
#include "satr/rng.hpp"
#include "satr/tensor.hpp"

namespace testutil {

/// Tiny fully valid network for fast tests: 8x8 input, one conv/pool
/// stage, narrow head. Well under 500 parameters.
inline satr::NetworkSpec micro_spec(std::size_t classes = 3, std::size_t conv_channels = 2,
                                    std::size_t dense_width = 4) {
    satr::NetworkSpec spec;
    spec.input_shape = {1, 8, 8};
    spec.layers = {satr::LayerSpec::Conv(conv_channels, 3, 1, 1),
                   satr::LayerSpec::Relu(),
                   satr::LayerSpec::MaxPool(2, 2),
                   satr::LayerSpec::Flatten(),
                   satr::LayerSpec::Dense(dense_width),
                   satr::LayerSpec::Relu(),
                   satr::LayerSpec::Dense(classes),
                   satr::LayerSpec::Softmax()};
    for (std::size_t k = 0; k < classes; ++k) {
        spec.class_names.push_back("class" + std::to_string(k));
    }
    return spec;
}

/// 16x16 variant with room for recognizable synthetic targets.
inline satr::NetworkSpec micro16_spec(std::size_t classes = 4) {
    satr::NetworkSpec spec;
    spec.input_shape = {1, 16, 16};
    spec.layers = {satr::LayerSpec::Conv(4, 3, 1, 1),
                   satr::LayerSpec::Relu(),
                   satr::LayerSpec::MaxPool(2, 2),
                   satr::LayerSpec::Flatten(),
                   satr::LayerSpec::Dense(16),
                   satr::LayerSpec::Relu(),
                   satr::LayerSpec::Dense(classes),
                   satr::LayerSpec::Softmax()};
    for (std::size_t k = 0; k < classes; ++k) {
        spec.class_names.push_back("class" + std::to_string(k));
    }
    return spec;
}

/// Random but always-valid architecture for round-trip property tests.
inline satr::NetworkSpec random_spec(satr::SplitMix64& rng) {
    satr::NetworkSpec spec;
    const std::size_t side = 8 + 2 * rng.next_below(5);  // 8..16
    spec.input_shape = {1 + rng.next_below(2), side, side};
    std::vector<std::size_t> cur = spec.input_shape;
    const std::size_t n_stages = 1 + rng.next_below(2);
    for (std::size_t s = 0; s < n_stages; ++s) {
        const std::size_t kernel = 1 + 2 * rng.next_below(2);  // 1 or 3
        const std::size_t channels = 1 + rng.next_below(4);
        spec.layers.push_back(satr::LayerSpec::Conv(channels, kernel, 1, kernel / 2));
        if (rng.next_below(2)) spec.layers.push_back(satr::LayerSpec::Relu());
        if (cur[1] >= 4 && rng.next_below(2)) {
            spec.layers.push_back(satr::LayerSpec::MaxPool(2, 2));
        }
        cur = {channels, cur[1], cur[2]};
    }
    spec.layers.push_back(satr::LayerSpec::Flatten());
    spec.layers.push_back(satr::LayerSpec::Dense(1 + rng.next_below(8)));
    if (rng.next_below(2)) spec.layers.push_back(satr::LayerSpec::Relu());
    const std::size_t classes = 2 + rng.next_below(4);
    spec.layers.push_back(satr::LayerSpec::Dense(classes));
    spec.layers.push_back(satr::LayerSpec::Softmax());
    for (std::size_t k = 0; k < classes; ++k) {
        spec.class_names.push_back("c" + std::to_string(k));
    }
    // re-walk so dense widths are consistent with whatever pooling produced
    satr::shape_chain(spec);
    return spec;
}

inline satr::Model random_model(satr::SplitMix64& rng) {
    return satr::make_model(random_spec(rng), rng.next_u64());
}

inline satr::Tensor random_image(const std::vector<std::size_t>& shape, satr::SplitMix64& rng,
                                 double lo = 0.0, double hi = 1.0) {
    satr::Tensor t(shape);
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

/// Tiny random labeled set matching a network's input shape, round-robin
/// labels so every class is covered when n >= classes.
inline satr::LabeledChipSet random_chipset(const satr::NetworkSpec& spec, std::size_t n,
                                           satr::SplitMix64& rng) {
    satr::LabeledChipSet set;
    set.class_names = spec.class_names;
    for (std::size_t i = 0; i < n; ++i) {
        set.chips.push_back(random_image(spec.input_shape, rng));
        set.labels.push_back(i % spec.class_names.size());
    }
    return set;
}

}  // namespace testutil
