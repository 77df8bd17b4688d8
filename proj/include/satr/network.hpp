#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "satr/dataset.hpp"
#include "satr/error.hpp"
#include "satr/rng.hpp"
#include "satr/tensor.hpp"

namespace satr {

enum class LayerKind { conv, relu, maxpool, flatten, dense, softmax };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::flatten: return "flatten";
        case LayerKind::dense: return "dense";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

/// One layer of the graph; only the fields its kind requires are meaningful.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    std::size_t out_channels = 0;  // conv
    std::size_t kernel = 0;        // conv (square)
    std::size_t stride = 1;        // conv, maxpool
    std::size_t pad = 0;           // conv
    std::size_t window = 0;        // maxpool
    std::size_t width = 0;         // dense

    static LayerSpec Conv(std::size_t out_channels, std::size_t kernel,
                          std::size_t stride = 1, std::size_t pad = 0) {
        LayerSpec l;
        l.kind = LayerKind::conv;
        l.out_channels = out_channels;
        l.kernel = kernel;
        l.stride = stride;
        l.pad = pad;
        return l;
    }
    static LayerSpec Relu() {
        LayerSpec l;
        l.kind = LayerKind::relu;
        return l;
    }
    static LayerSpec MaxPool(std::size_t window, std::size_t stride) {
        LayerSpec l;
        l.kind = LayerKind::maxpool;
        l.window = window;
        l.stride = stride;
        return l;
    }
    static LayerSpec Flatten() {
        LayerSpec l;
        l.kind = LayerKind::flatten;
        return l;
    }
    static LayerSpec Dense(std::size_t width) {
        LayerSpec l;
        l.kind = LayerKind::dense;
        l.width = width;
        return l;
    }
    static LayerSpec Softmax() {
        LayerSpec l;
        l.kind = LayerKind::softmax;
        return l;
    }
};

struct NetworkSpec {
    std::vector<std::size_t> input_shape;  // [C,H,W]
    std::vector<LayerSpec> layers;
    std::vector<std::string> class_names;
};

/// Output shape of each layer given the previous shape; throws
/// DimensionError when consecutive layers cannot chain.
inline std::vector<std::size_t> layer_output_shape(const LayerSpec& l,
                                                   const std::vector<std::size_t>& in,
                                                   std::size_t index) {
    const std::string where = "layer " + std::to_string(index) + " (" +
                              layer_kind_name(l.kind) + ")";
    switch (l.kind) {
        case LayerKind::conv: {
            if (in.size() != 3) {
                throw DimensionError(where + ": needs [C,H,W] input, got " + shape_str(in));
            }
            if (l.kernel > in[1] + 2 * l.pad || l.kernel > in[2] + 2 * l.pad) {
                throw DimensionError(where + ": kernel exceeds padded input");
            }
            return {l.out_channels, (in[1] + 2 * l.pad - l.kernel) / l.stride + 1,
                    (in[2] + 2 * l.pad - l.kernel) / l.stride + 1};
        }
        case LayerKind::relu:
            return in;
        case LayerKind::maxpool: {
            if (in.size() != 3) {
                throw DimensionError(where + ": needs [C,H,W] input, got " + shape_str(in));
            }
            if (l.window > in[1] || l.window > in[2]) {
                throw DimensionError(where + ": window exceeds spatial axes");
            }
            return {in[0], (in[1] - l.window) / l.stride + 1,
                    (in[2] - l.window) / l.stride + 1};
        }
        case LayerKind::flatten: {
            std::size_t n = 1;
            for (std::size_t d : in) n *= d;
            return {n};
        }
        case LayerKind::dense: {
            if (in.size() != 1) {
                throw DimensionError(where + ": needs flat input, got " + shape_str(in));
            }
            return {l.width};
        }
        case LayerKind::softmax: {
            if (in.size() != 1) {
                throw DimensionError(where + ": needs flat input, got " + shape_str(in));
            }
            return in;
        }
    }
    throw DimensionError(where + ": unknown layer kind");
}

/// Shape of every layer output in order; also validates the head rule
/// (final softmax preceded by a dense of width = number of classes).
inline std::vector<std::vector<std::size_t>> shape_chain(const NetworkSpec& spec) {
    if (spec.input_shape.size() != 3) {
        throw DimensionError("network input shape must be [C,H,W], got " +
                             shape_str(spec.input_shape));
    }
    if (spec.layers.size() < 2) {
        throw DimensionError("network needs at least a dense and a softmax layer");
    }
    std::vector<std::vector<std::size_t>> shapes;
    std::vector<std::size_t> cur = spec.input_shape;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        cur = layer_output_shape(spec.layers[i], cur, i);
        shapes.push_back(cur);
    }
    const LayerSpec& last = spec.layers.back();
    const LayerSpec& prev = spec.layers[spec.layers.size() - 2];
    if (last.kind != LayerKind::softmax || prev.kind != LayerKind::dense) {
        throw DimensionError("network must end with dense followed by softmax");
    }
    if (prev.width != spec.class_names.size()) {
        throw DimensionError("final dense width " + std::to_string(prev.width) +
                             " does not match class count " +
                             std::to_string(spec.class_names.size()));
    }
    return shapes;
}

/// One named parameter array of one layer.
struct ParamBlock {
    std::size_t layer_index = 0;
    std::string name;  // "kernels" | "bias" | "weights"
    std::vector<std::size_t> shape;
    std::vector<double> values;

    std::size_t numel() const {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }
};

struct WeightStore {
    std::vector<ParamBlock> blocks;

    const ParamBlock& find(std::size_t layer, const std::string& name) const {
        for (const auto& b : blocks) {
            if (b.layer_index == layer && b.name == name) return b;
        }
        throw ArgumentError("no parameter block '" + name + "' for layer " +
                            std::to_string(layer));
    }
    ParamBlock& find(std::size_t layer, const std::string& name) {
        return const_cast<ParamBlock&>(
            static_cast<const WeightStore*>(this)->find(layer, name));
    }
};

struct Model {
    NetworkSpec spec;
    WeightStore weights;
};

namespace detail {

inline Tensor block_tensor(const ParamBlock& b) { return Tensor(b.shape, b.values); }

}  // namespace detail

/// Reference architecture: 64x64 grayscale input, two conv/pool stages,
/// a 64-wide penultimate dense layer, and a class-sized softmax head.
/// Shipped as configs/mini_cnn.json; kept here as the single in-code
/// definition.
inline NetworkSpec mini_cnn_spec(std::vector<std::string> class_names) {
    NetworkSpec spec;
    spec.input_shape = {1, 64, 64};
    spec.layers = {
        LayerSpec::Conv(8, 5, 1, 2),  LayerSpec::Relu(), LayerSpec::MaxPool(2, 2),
        LayerSpec::Conv(16, 5, 1, 2), LayerSpec::Relu(), LayerSpec::MaxPool(2, 2),
        LayerSpec::Flatten(),         LayerSpec::Dense(64), LayerSpec::Relu(),
        LayerSpec::Dense(class_names.size()), LayerSpec::Softmax()};
    spec.class_names = std::move(class_names);
    return spec;
}

/// Parameter block skeleton (layer order, shapes, empty values) the spec
/// requires.
inline std::vector<ParamBlock> expected_blocks(const NetworkSpec& spec) {
    shape_chain(spec);
    std::vector<ParamBlock> blocks;
    std::vector<std::size_t> cur = spec.input_shape;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (l.kind == LayerKind::conv) {
            blocks.push_back({i, "kernels", {l.out_channels, cur[0], l.kernel, l.kernel}, {}});
            blocks.push_back({i, "bias", {l.out_channels}, {}});
        } else if (l.kind == LayerKind::dense) {
            blocks.push_back({i, "weights", {l.width, cur[0]}, {}});
            blocks.push_back({i, "bias", {l.width}, {}});
        }
        cur = layer_output_shape(l, cur, i);
    }
    return blocks;
}

/// Freshly initialized weights: uniform(-0.05, 0.05) draws in block order
/// from one splitmix64 stream, biases zero.
inline WeightStore init_weights(const NetworkSpec& spec, std::uint64_t seed) {
    WeightStore store;
    store.blocks = expected_blocks(spec);
    SplitMix64 rng(seed);
    for (ParamBlock& b : store.blocks) {
        b.values.resize(b.numel());
        if (b.name == "bias") continue;
        for (double& v : b.values) v = rng.uniform(-0.05, 0.05);
    }
    return store;
}

inline Model make_model(NetworkSpec spec, std::uint64_t seed) {
    Model m;
    m.spec = std::move(spec);
    m.weights = init_weights(m.spec, seed);
    return m;
}

/// Checks that every block in the store matches the spec exactly (same
/// blocks, same shapes, in layer order).
inline void validate_weights(const NetworkSpec& spec, const WeightStore& store) {
    const std::vector<ParamBlock> expect = expected_blocks(spec);
    if (store.blocks.size() != expect.size()) {
        throw ShapeMismatchError("weight store has " + std::to_string(store.blocks.size()) +
                                 " blocks, spec requires " + std::to_string(expect.size()));
    }
    for (std::size_t i = 0; i < store.blocks.size(); ++i) {
        const ParamBlock& got = store.blocks[i];
        const ParamBlock& want = expect[i];
        if (got.layer_index != want.layer_index || got.name != want.name ||
            got.shape != want.shape) {
            throw ShapeMismatchError("weight block " + std::to_string(i) + " ('" + got.name +
                                     "' layer " + std::to_string(got.layer_index) +
                                     " shape " + shape_str(got.shape) +
                                     ") does not match spec block '" + want.name +
                                     "' layer " + std::to_string(want.layer_index) +
                                     " shape " + shape_str(want.shape));
        }
        if (got.values.size() != got.numel()) {
            throw ShapeMismatchError("weight block " + std::to_string(i) +
                                     " value count does not match its shape");
        }
    }
}

/// All layer outputs in order for one image.
struct ForwardTrace {
    std::vector<Tensor> activations;
};

inline ForwardTrace forward(const Model& model, const Tensor& image) {
    if (image.shape() != model.spec.input_shape) {
        throw DimensionError("input image shape " + shape_str(image.shape()) +
                             " does not match network input " +
                             shape_str(model.spec.input_shape));
    }
    ForwardTrace trace;
    trace.activations.reserve(model.spec.layers.size());
    const Tensor* cur = &image;
    for (std::size_t i = 0; i < model.spec.layers.size(); ++i) {
        const LayerSpec& l = model.spec.layers[i];
        Tensor next;
        switch (l.kind) {
            case LayerKind::conv:
                next = conv2d(*cur, detail::block_tensor(model.weights.find(i, "kernels")),
                              model.weights.find(i, "bias").values, l.stride, l.pad);
                break;
            case LayerKind::relu:
                next = relu(*cur);
                break;
            case LayerKind::maxpool:
                next = maxpool2d(*cur, l.window, l.stride);
                break;
            case LayerKind::flatten:
                next = cur->flattened();
                break;
            case LayerKind::dense:
                next = dense(*cur, detail::block_tensor(model.weights.find(i, "weights")),
                             model.weights.find(i, "bias").values);
                break;
            case LayerKind::softmax:
                next = softmax(*cur);
                break;
        }
        trace.activations.push_back(std::move(next));
        cur = &trace.activations.back();
    }
    return trace;
}

/// Index of the layer whose output feeds the final dense+softmax head.
inline std::size_t default_feature_tap(const NetworkSpec& spec) {
    if (spec.layers.size() < 3) {
        throw DimensionError("network too small to have a penultimate feature layer");
    }
    return spec.layers.size() - 3;
}

/// Penultimate representation (output of the layer before the final dense
/// head, or of `tap_layer` when given), flattened to a vector.
inline std::vector<double> extract_features(const Model& model, const Tensor& image,
                                            std::optional<std::size_t> tap_layer = {}) {
    const std::size_t tap = tap_layer.value_or(default_feature_tap(model.spec));
    if (tap >= model.spec.layers.size()) {
        throw ArgumentError("feature tap layer " + std::to_string(tap) +
                            " out of range (network has " +
                            std::to_string(model.spec.layers.size()) + " layers)");
    }
    ForwardTrace trace = forward(model, image);
    return trace.activations[tap].data();
}

/// New model with the final dense layer re-initialized for a new class
/// list; every other parameter block is preserved verbatim.
inline Model replace_head(const Model& model, const std::vector<std::string>& new_class_names,
                          std::uint64_t seed) {
    if (new_class_names.empty()) {
        throw ArgumentError("replace_head: class list must not be empty");
    }
    shape_chain(model.spec);
    Model out = model;
    const std::size_t head = out.spec.layers.size() - 2;  // dense before softmax
    out.spec.class_names = new_class_names;
    out.spec.layers[head].width = new_class_names.size();

    ParamBlock& w = out.weights.find(head, "weights");
    const std::size_t in_width = w.shape[1];
    w.shape = {new_class_names.size(), in_width};
    w.values.resize(w.numel());
    SplitMix64 rng(seed);
    for (double& v : w.values) v = rng.uniform(-0.05, 0.05);

    ParamBlock& b = out.weights.find(head, "bias");
    b.shape = {new_class_names.size()};
    b.values.assign(new_class_names.size(), 0.0);
    return out;
}

/// Parameter gradients, block-aligned with a WeightStore.
struct Gradients {
    std::vector<ParamBlock> blocks;

    static Gradients zeros_like(const WeightStore& store) {
        Gradients g;
        g.blocks = store.blocks;
        for (auto& b : g.blocks) std::fill(b.values.begin(), b.values.end(), 0.0);
        return g;
    }
};

namespace detail {

inline void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                           Tensor& grad_in, std::vector<double>& grad_w,
                           std::vector<double>& grad_b) {
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    grad_in = Tensor({n});
    for (std::size_t i = 0; i < m; ++i) {
        const double g = grad_out[i];
        grad_b[i] += g;
        const double* row = weights.raw() + i * n;
        double* gw = grad_w.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            grad_in[j] += row[j] * g;
            gw[j] += g * input[j];
        }
    }
}

inline Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
    Tensor grad_in = grad_out;
    for (std::size_t i = 0; i < input.numel(); ++i) {
        if (input[i] <= 0.0) grad_in[i] = 0.0;
    }
    return grad_in;
}

/// Routes each window's gradient to the first maximum in scan order.
inline Tensor maxpool2d_backward(const Tensor& input, std::size_t window, std::size_t stride,
                                 const Tensor& grad_out) {
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t oh = grad_out.dim(1), ow = grad_out.dim(2);
    Tensor grad_in({c, h, w});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                std::size_t best_r = 0, best_c = 0;
                double best = input.at(ch, y * stride, x * stride);
                for (std::size_t r = 0; r < window; ++r) {
                    for (std::size_t cc = 0; cc < window; ++cc) {
                        const double v = input.at(ch, y * stride + r, x * stride + cc);
                        if (v > best) {
                            best = v;
                            best_r = r;
                            best_c = cc;
                        }
                    }
                }
                grad_in.at(ch, y * stride + best_r, x * stride + best_c) +=
                    grad_out.at(ch, y, x);
            }
        }
    }
    return grad_in;
}

inline void conv2d_backward(const Tensor& input, const Tensor& kernels, std::size_t stride,
                            std::size_t padding, const Tensor& grad_out, Tensor& grad_in,
                            std::vector<double>& grad_k, std::vector<double>& grad_b) {
    const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t c_out = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
    const std::size_t oh = grad_out.dim(1), ow = grad_out.dim(2);
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(padding);
    grad_in = Tensor({c_in, h, w});

    for (std::size_t co = 0; co < c_out; ++co) {
        const double* go_plane = grad_out.raw() + co * oh * ow;
        double acc = 0.0;
        for (std::size_t i = 0; i < oh * ow; ++i) acc += go_plane[i];
        grad_b[co] += acc;

        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const double* in_plane = input.raw() + ci * h * w;
            double* gin_plane = grad_in.raw() + ci * h * w;
            for (std::size_t r = 0; r < kh; ++r) {
                for (std::size_t c = 0; c < kw; ++c) {
                    const double kval = kernels.raw()[((co * c_in + ci) * kh + r) * kw + c];
                    double gk = 0.0;
                    for (std::size_t y = 0; y < oh; ++y) {
                        const std::ptrdiff_t iy =
                            static_cast<std::ptrdiff_t>(y * stride + r) - pad;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        const double* in_row = in_plane + iy * w;
                        double* gin_row = gin_plane + iy * w;
                        const double* go_row = go_plane + y * ow;
                        for (std::size_t x = 0; x < ow; ++x) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(x * stride + c) - pad;
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            const double g = go_row[x];
                            gin_row[ix] += kval * g;
                            gk += in_row[ix] * g;
                        }
                    }
                    grad_k[((co * c_in + ci) * kh + r) * kw + c] += gk;
                }
            }
        }
    }
}

}  // namespace detail

namespace detail {

inline ParamBlock& grads_find(Gradients& grads, std::size_t layer, const char* name) {
    for (auto& b : grads.blocks) {
        if (b.layer_index == layer && b.name == name) return b;
    }
    throw ArgumentError("no gradient block '" + std::string(name) + "' for layer " +
                        std::to_string(layer));
}

}  // namespace detail

/// Mean cross-entropy loss and parameter gradients over a batch. The
/// softmax+cross-entropy pair is differentiated jointly (probs - onehot).
/// `example_losses`, when given, receives one loss per batch entry.
inline double compute_gradients(const Model& model, const LabeledChipSet& data,
                                const std::vector<std::size_t>& batch, Gradients& grads,
                                std::vector<double>* example_losses = nullptr) {
    const std::size_t n_layers = model.spec.layers.size();
    double total_loss = 0.0;
    if (example_losses) example_losses->clear();

    for (std::size_t bi : batch) {
        const Tensor& image = data.chips[bi];
        const std::size_t label = data.labels[bi];
        ForwardTrace trace = forward(model, image);
        const Tensor& probs = trace.activations.back();
        if (label >= probs.numel()) {
            throw TrainingDataError("label index " + std::to_string(label) +
                                    " out of range for " + std::to_string(probs.numel()) +
                                    " classes");
        }
        const double example_loss = -std::log(std::max(probs[label], 1e-300));
        total_loss += example_loss;
        if (example_losses) example_losses->push_back(example_loss);

        // dL/dlogits through the softmax head.
        Tensor grad = probs;
        grad[label] -= 1.0;

        for (std::size_t li = n_layers - 2; li + 1 > 0; --li) {
            const LayerSpec& l = model.spec.layers[li];
            const Tensor& input = (li == 0) ? image : trace.activations[li - 1];
            Tensor grad_in;
            switch (l.kind) {
                case LayerKind::conv: {
                    ParamBlock& gk = detail::grads_find(grads, li, "kernels");
                    ParamBlock& gb = detail::grads_find(grads, li, "bias");
                    detail::conv2d_backward(
                        input, detail::block_tensor(model.weights.find(li, "kernels")),
                        l.stride, l.pad, grad, grad_in, gk.values, gb.values);
                    break;
                }
                case LayerKind::relu:
                    grad_in = detail::relu_backward(input, grad);
                    break;
                case LayerKind::maxpool:
                    grad_in = detail::maxpool2d_backward(input, l.window, l.stride, grad);
                    break;
                case LayerKind::flatten:
                    grad_in = Tensor(input.shape(), grad.data());
                    break;
                case LayerKind::dense: {
                    ParamBlock& gw = detail::grads_find(grads, li, "weights");
                    ParamBlock& gb = detail::grads_find(grads, li, "bias");
                    detail::dense_backward(
                        input, detail::block_tensor(model.weights.find(li, "weights")), grad,
                        grad_in, gw.values, gb.values);
                    break;
                }
                case LayerKind::softmax:
                    throw DimensionError("softmax before the head is unsupported");
            }
            grad = std::move(grad_in);
            if (li == 0) break;
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& b : grads.blocks) {
        for (double& v : b.values) v *= inv;
    }
    return total_loss * inv;
}

/// Mean cross-entropy of the model over a labeled set (forward only).
inline double evaluate_loss(const Model& model, const LabeledChipSet& data) {
    if (data.size() == 0) throw TrainingDataError("cannot evaluate loss on an empty set");
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ForwardTrace trace = forward(model, data.chips[i]);
        const Tensor& probs = trace.activations.back();
        if (data.labels[i] >= probs.numel()) {
            throw TrainingDataError("label index out of range");
        }
        total += -std::log(std::max(probs[data.labels[i]], 1e-300));
    }
    return total / static_cast<double>(data.size());
}

struct FineTuneConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t epochs = 30;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;
    std::size_t freeze_depth = 0;  // layers with index < freeze_depth stay fixed
};

/// Mini-batch SGD with momentum on cross-entropy; example order shuffled
/// per epoch from the run seed. The returned history holds the full
/// training-set loss evaluated after each epoch's updates.
inline std::vector<double> fine_tune(Model& model, const LabeledChipSet& data,
                                     const FineTuneConfig& cfg) {
    if (data.size() == 0) throw TrainingDataError("training set is empty");
    std::vector<std::size_t> per_class(model.spec.class_names.size(), 0);
    for (std::size_t lab : data.labels) {
        if (lab >= per_class.size()) {
            throw TrainingDataError("label index " + std::to_string(lab) +
                                    " out of range for " +
                                    std::to_string(per_class.size()) + " classes");
        }
        per_class[lab]++;
    }
    for (std::size_t k = 0; k < per_class.size(); ++k) {
        if (per_class[k] == 0) {
            throw TrainingDataError("class '" + model.spec.class_names[k] +
                                    "' has no training examples");
        }
    }
    for (const Tensor& chip : data.chips) {
        if (chip.shape() != model.spec.input_shape) {
            throw DimensionError("training chip shape " + shape_str(chip.shape()) +
                                 " does not match network input " +
                                 shape_str(model.spec.input_shape));
        }
    }
    if (cfg.batch_size < 1) throw ArgumentError("batch_size must be >= 1");

    Gradients velocity = Gradients::zeros_like(model.weights);
    std::vector<double> history;
    history.reserve(cfg.epochs);
    SplitMix64 rng(cfg.seed);

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
            Gradients grads = Gradients::zeros_like(model.weights);
            compute_gradients(model, data, batch, grads);

            for (std::size_t b = 0; b < model.weights.blocks.size(); ++b) {
                ParamBlock& w = model.weights.blocks[b];
                if (w.layer_index < cfg.freeze_depth) continue;
                ParamBlock& v = velocity.blocks[b];
                const ParamBlock& g = grads.blocks[b];
                for (std::size_t i = 0; i < w.values.size(); ++i) {
                    v.values[i] = cfg.momentum * v.values[i] -
                                  cfg.learning_rate * g.values[i];
                    w.values[i] += v.values[i];
                }
            }
        }
        history.push_back(evaluate_loss(model, data));
    }
    return history;
}

/// One normalized grayscale rendering of one activation channel.
struct ActivationImage {
    std::size_t layer_index = 0;
    std::size_t channel = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;
};

/// Each channel of each selected spatial activation, min-max scaled to
/// [0,255]. A zero-range channel renders as mid-gray (128).
inline std::vector<ActivationImage> dump_activations(const Model& model, const Tensor& image,
                                                     const std::vector<std::size_t>& layers) {
    ForwardTrace trace = forward(model, image);
    std::vector<ActivationImage> out;
    for (std::size_t li : layers) {
        if (li >= trace.activations.size()) {
            throw ArgumentError("layer index " + std::to_string(li) +
                                " out of range (network has " +
                                std::to_string(trace.activations.size()) + " layers)");
        }
        const Tensor& act = trace.activations[li];
        if (act.rank() != 3) {
            throw ArgumentError("layer " + std::to_string(li) +
                                " has no spatial activation to render");
        }
        const std::size_t c = act.dim(0), h = act.dim(1), w = act.dim(2);
        for (std::size_t ch = 0; ch < c; ++ch) {
            ActivationImage img;
            img.layer_index = li;
            img.channel = ch;
            img.height = h;
            img.width = w;
            img.pixels.resize(h * w);
            const double* plane = act.raw() + ch * h * w;
            double lo = plane[0], hi = plane[0];
            for (std::size_t i = 1; i < h * w; ++i) {
                lo = std::min(lo, plane[i]);
                hi = std::max(hi, plane[i]);
            }
            if (hi == lo) {
                std::fill(img.pixels.begin(), img.pixels.end(),
                          static_cast<std::uint8_t>(128));
            } else {
                const double scale = 255.0 / (hi - lo);
                for (std::size_t i = 0; i < h * w; ++i) {
                    img.pixels[i] = static_cast<std::uint8_t>(
                        std::lround((plane[i] - lo) * scale));
                }
            }
            out.push_back(std::move(img));
        }
    }
    return out;
}

}  // namespace satr
