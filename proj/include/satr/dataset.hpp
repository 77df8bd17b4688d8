#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satr/error.hpp"
#include "satr/rng.hpp"
#include "satr/tensor.hpp"

namespace satr {

/// Fixed-size labeled image chips, the training/test currency.
struct LabeledChipSet {
    std::vector<Tensor> chips;            // each [1,H,W]
    std::vector<std::size_t> labels;      // index into class_names
    std::vector<std::string> class_names;

    std::size_t size() const { return chips.size(); }
};

struct TrainTestSplit {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

/// Disjoint per-class train/test partition by seeded shuffle. Requires
/// every class to hold at least train+test examples.
inline TrainTestSplit split_per_class(const LabeledChipSet& set, std::size_t n_train,
                                      std::size_t n_test, std::uint64_t seed) {
    TrainTestSplit out;
    for (std::size_t k = 0; k < set.class_names.size(); ++k) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < set.labels.size(); ++i) {
            if (set.labels[i] == k) idx.push_back(i);
        }
        if (idx.size() < n_train + n_test) {
            throw TrainingDataError("class '" + set.class_names[k] + "' has only " +
                                    std::to_string(idx.size()) + " examples, need " +
                                    std::to_string(n_train + n_test));
        }
        SplitMix64 rng(derive_seed(seed, k));
        rng.shuffle(idx);
        out.train_indices.insert(out.train_indices.end(), idx.begin(), idx.begin() + n_train);
        out.test_indices.insert(out.test_indices.end(), idx.begin() + n_train,
                                idx.begin() + n_train + n_test);
    }
    return out;
}

/// New set holding the selected chips.
inline LabeledChipSet subset(const LabeledChipSet& set,
                             const std::vector<std::size_t>& indices) {
    LabeledChipSet out;
    out.class_names = set.class_names;
    for (std::size_t i : indices) {
        out.chips.push_back(set.chips[i]);
        out.labels.push_back(set.labels[i]);
    }
    return out;
}

}  // namespace satr
