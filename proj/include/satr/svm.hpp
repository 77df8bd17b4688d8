#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "satr/error.hpp"
#include "satr/io.hpp"
#include "satr/rng.hpp"
#include "satr/tensor.hpp"

namespace satr {

/// Labeled feature vectors for SVM training.
struct FeatureSet {
    std::vector<std::vector<double>> vectors;
    std::vector<std::size_t> labels;  // index into class_names
    std::vector<std::string> class_names;
};

/// One-vs-rest linear SVM over standardized features.
struct SvmModel {
    std::vector<std::string> class_names;
    std::vector<std::vector<double>> weights;  // per class, length = feature dim
    std::vector<double> biases;                // per class
    double regularization_c = 1.0;
    std::vector<double> feature_mean;   // per dimension
    std::vector<double> feature_scale;  // per dimension, strictly positive
    std::vector<std::size_t> zero_variance_dims;

    std::size_t dim() const { return feature_mean.size(); }
    std::size_t num_classes() const { return class_names.size(); }
};

struct SvmTrainOptions {
    double c = 1.0;
    std::uint64_t seed = 0;
    double gap_tolerance = 1e-6;
    std::size_t max_epochs = 10000;
};

namespace svm_detail {

/// Hinge-loss primal with the bias folded into the weight vector:
/// 0.5*||w_aug||^2 + C * sum_i max(0, 1 - y_i * (w_aug . x_aug_i)).
inline double primal_objective(const std::vector<std::vector<double>>& x_aug,
                               const std::vector<double>& y, double c,
                               const std::vector<double>& w_aug) {
    double obj = 0.0;
    for (double w : w_aug) obj += w * w;
    obj *= 0.5;
    for (std::size_t i = 0; i < x_aug.size(); ++i) {
        double margin = 0.0;
        for (std::size_t j = 0; j < w_aug.size(); ++j) margin += w_aug[j] * x_aug[i][j];
        obj += c * std::max(0.0, 1.0 - y[i] * margin);
    }
    return obj;
}

struct BinarySolveResult {
    std::vector<double> w_aug;
    std::size_t epochs = 0;
    double duality_gap = 0.0;
    std::vector<double> primal_history;  // incumbent primal per completed epoch
};

/// Dual coordinate descent over the box-constrained dual (0 <= alpha_i <= C)
/// of the L1-loss linear SVM, coordinate order permuted per epoch from the
/// seed. The dual walk is not primal-monotone, so the solver keeps the
/// best-primal iterate seen at epoch boundaries and returns that incumbent;
/// P(incumbent) - D(alpha) still bounds the suboptimality. Runs until that
/// gap drops below the tolerance or the epoch cap is hit.
inline BinarySolveResult solve_binary(const std::vector<std::vector<double>>& x_aug,
                                      const std::vector<double>& y, double c,
                                      std::uint64_t seed, double gap_tolerance,
                                      std::size_t max_epochs) {
    const std::size_t n = x_aug.size();
    const std::size_t d = x_aug[0].size();
    std::vector<double> alpha(n, 0.0);
    std::vector<double> w(d, 0.0);
    std::vector<double> q_diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        double q = 0.0;
        for (double v : x_aug[i]) q += v * v;
        q_diag[i] = q;
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    SplitMix64 rng(seed);

    BinarySolveResult result;
    std::vector<double> best_w = w;
    double best_primal = primal_objective(x_aug, y, c, w);
    for (std::size_t epoch = 0; epoch < max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            double margin = 0.0;
            for (std::size_t j = 0; j < d; ++j) margin += w[j] * x_aug[i][j];
            const double grad = y[i] * margin - 1.0;
            const double next =
                std::min(std::max(alpha[i] - grad / q_diag[i], 0.0), c);
            const double delta = next - alpha[i];
            if (delta != 0.0) {
                const double step = delta * y[i];
                for (std::size_t j = 0; j < d; ++j) w[j] += step * x_aug[i][j];
                alpha[i] = next;
            }
        }
        double w_norm2 = 0.0;
        for (double v : w) w_norm2 += v * v;
        double alpha_sum = 0.0;
        for (double a : alpha) alpha_sum += a;
        const double primal = primal_objective(x_aug, y, c, w);
        if (primal < best_primal) {
            best_primal = primal;
            best_w = w;
        }
        const double dual = alpha_sum - 0.5 * w_norm2;
        result.primal_history.push_back(best_primal);
        result.epochs = epoch + 1;
        result.duality_gap = best_primal - dual;
        if (result.duality_gap < gap_tolerance) break;
    }
    result.w_aug = std::move(best_w);
    return result;
}

}  // namespace svm_detail

/// Standardized copy of a raw feature vector under a trained model.
inline std::vector<double> standardize(const SvmModel& model, const std::vector<double>& x) {
    if (x.size() != model.dim()) {
        throw DimensionError("feature length " + std::to_string(x.size()) +
                             " does not match model dimension " +
                             std::to_string(model.dim()));
    }
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = (x[j] - model.feature_mean[j]) / model.feature_scale[j];
    }
    return out;
}

inline SvmModel train_svm(const FeatureSet& features, const SvmTrainOptions& opts) {
    const std::size_t n = features.vectors.size();
    if (n == 0) throw TrainingDataError("svm: empty feature set");
    if (features.labels.size() != n) {
        throw TrainingDataError("svm: feature/label count mismatch");
    }
    const std::size_t k = features.class_names.size();
    if (k < 2) throw TrainingDataError("svm: need at least two classes");
    std::vector<std::size_t> per_class(k, 0);
    for (std::size_t lab : features.labels) {
        if (lab >= k) throw TrainingDataError("svm: label index out of range");
        per_class[lab]++;
    }
    for (std::size_t ki = 0; ki < k; ++ki) {
        if (per_class[ki] == 0) {
            throw TrainingDataError("svm: class '" + features.class_names[ki] +
                                    "' has no examples");
        }
    }
    if (opts.c <= 0.0) throw ArgumentError("svm: C must be positive");
    const std::size_t d = features.vectors[0].size();
    for (const auto& v : features.vectors) {
        if (v.size() != d) throw DimensionError("svm: inconsistent feature lengths");
    }

    SvmModel model;
    model.class_names = features.class_names;
    model.regularization_c = opts.c;
    model.feature_mean.assign(d, 0.0);
    model.feature_scale.assign(d, 1.0);

    // Training-set statistics: per-dimension mean and population std.
    for (const auto& v : features.vectors) {
        for (std::size_t j = 0; j < d; ++j) model.feature_mean[j] += v[j];
    }
    for (double& m : model.feature_mean) m /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (const auto& v : features.vectors) {
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = v[j] - model.feature_mean[j];
            var[j] += diff * diff;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(var[j] / static_cast<double>(n));
        if (sd < 1e-12) {
            model.feature_scale[j] = 1.0;  // degenerate dimension, flagged
            model.zero_variance_dims.push_back(j);
        } else {
            model.feature_scale[j] = sd;
        }
    }

    // Standardized features with a trailing constant for the bias term.
    std::vector<std::vector<double>> x_aug(n, std::vector<double>(d + 1, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            x_aug[i][j] =
                (features.vectors[i][j] - model.feature_mean[j]) / model.feature_scale[j];
        }
    }

    model.weights.resize(k);
    model.biases.resize(k);
    std::vector<double> y(n);
    for (std::size_t ki = 0; ki < k; ++ki) {
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = features.labels[i] == ki ? 1.0 : -1.0;
        }
        auto result = svm_detail::solve_binary(x_aug, y, opts.c, derive_seed(opts.seed, ki),
                                               opts.gap_tolerance, opts.max_epochs);
        model.biases[ki] = result.w_aug.back();
        result.w_aug.pop_back();
        model.weights[ki] = std::move(result.w_aug);
    }
    return model;
}

inline SvmModel train_svm(const FeatureSet& features, double c, std::uint64_t seed) {
    SvmTrainOptions opts;
    opts.c = c;
    opts.seed = seed;
    return train_svm(features, opts);
}

/// Raw per-class decision values w_k . standardize(x) + b_k.
inline std::vector<double> decision_scores(const SvmModel& model,
                                           const std::vector<double>& x) {
    const std::vector<double> z = standardize(model, x);
    std::vector<double> scores(model.num_classes());
    for (std::size_t ki = 0; ki < model.num_classes(); ++ki) {
        double s = model.biases[ki];
        const std::vector<double>& w = model.weights[ki];
        for (std::size_t j = 0; j < z.size(); ++j) s += w[j] * z[j];
        scores[ki] = s;
    }
    return scores;
}

/// Softmax over the decision values: bounded, comparable scores that give
/// the detection threshold its scale (uniform baseline 1/K).
inline std::vector<double> normalized_scores(const SvmModel& model,
                                             const std::vector<double>& x) {
    return softmax(decision_scores(model, x));
}

struct Classification {
    std::string class_name;
    std::size_t class_index = 0;
    double normalized_score = 0.0;
};

/// Argmax of the decision values; exact ties go to the lowest class index.
inline Classification classify(const SvmModel& model, const std::vector<double>& x) {
    const std::vector<double> raw = decision_scores(model, x);
    std::size_t best = 0;
    for (std::size_t ki = 1; ki < raw.size(); ++ki) {
        if (raw[ki] > raw[best]) best = ki;
    }
    const std::vector<double> norm = softmax(raw);
    return Classification{model.class_names[best], best, norm[best]};
}

// ---------------------------------------------------------------------------
// SVM model file "SSVM": magic, version u16, K u32, dim u32, C f64, class
// names (u8 length + bytes each), per class w (dim f32) and b (f32), then
// mean and scale vectors (dim f32 each) and the zero-variance dim list.
// ---------------------------------------------------------------------------

constexpr std::uint16_t kSvmFormatVersion = 1;

inline std::string serialize_svm(const SvmModel& model) {
    ByteWriter w;
    w.str("SSVM");
    w.u16(kSvmFormatVersion);
    w.u32(static_cast<std::uint32_t>(model.num_classes()));
    w.u32(static_cast<std::uint32_t>(model.dim()));
    w.f64(model.regularization_c);
    for (const std::string& name : model.class_names) {
        w.u8(static_cast<std::uint8_t>(name.size()));
        w.str(name);
    }
    for (std::size_t ki = 0; ki < model.num_classes(); ++ki) {
        for (double v : model.weights[ki]) w.f32(static_cast<float>(v));
        w.f32(static_cast<float>(model.biases[ki]));
    }
    for (double v : model.feature_mean) w.f32(static_cast<float>(v));
    for (double v : model.feature_scale) w.f32(static_cast<float>(v));
    w.u32(static_cast<std::uint32_t>(model.zero_variance_dims.size()));
    for (std::size_t dim : model.zero_variance_dims) {
        w.u32(static_cast<std::uint32_t>(dim));
    }
    return w.buffer();
}

inline SvmModel deserialize_svm(const std::string& data, const std::string& what) {
    ByteReader r(data, what);
    if (r.bytes(4) != "SSVM") throw BadMagicError(what + ": bad magic, not an SVM file");
    const std::uint16_t version = r.u16();
    if (version != kSvmFormatVersion) {
        throw VersionError(what + ": unsupported SVM format version " +
                           std::to_string(version));
    }
    SvmModel model;
    const std::uint32_t k = r.u32();
    const std::uint32_t dim = r.u32();
    if (k < 2) throw FormatError(what + ": SVM file holds fewer than two classes");
    model.regularization_c = r.f64();
    for (std::uint32_t i = 0; i < k; ++i) {
        const std::uint8_t len = r.u8();
        model.class_names.push_back(r.bytes(len));
    }
    model.weights.resize(k);
    model.biases.resize(k);
    for (std::uint32_t ki = 0; ki < k; ++ki) {
        model.weights[ki].reserve(dim);
        for (std::uint32_t j = 0; j < dim; ++j) {
            model.weights[ki].push_back(static_cast<double>(r.f32()));
        }
        model.biases[ki] = static_cast<double>(r.f32());
    }
    for (std::uint32_t j = 0; j < dim; ++j) {
        model.feature_mean.push_back(static_cast<double>(r.f32()));
    }
    for (std::uint32_t j = 0; j < dim; ++j) {
        const double s = static_cast<double>(r.f32());
        if (!(s > 0.0)) {
            throw FormatError(what + ": feature scale " + std::to_string(j) +
                              " is not strictly positive");
        }
        model.feature_scale.push_back(s);
    }
    const std::uint32_t n_zero = r.u32();
    for (std::uint32_t i = 0; i < n_zero; ++i) model.zero_variance_dims.push_back(r.u32());
    if (!r.exhausted()) throw FormatError(what + ": trailing bytes");
    return model;
}

inline void save_svm(const SvmModel& model, const std::string& path) {
    write_file(path, serialize_svm(model));
}

inline SvmModel load_svm(const std::string& path) {
    return deserialize_svm(read_file(path), path);
}

}  // namespace satr
