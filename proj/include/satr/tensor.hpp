#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "satr/error.hpp"

namespace satr {

/// Dense row-major numeric array, rank 1..4. Channel-major [C,H,W] for
/// images. All arithmetic is double precision; tensors are treated as
/// immutable once built, so they can be shared freely across threads.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != checked_numel(shape_)) {
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape product " +
                                 std::to_string(checked_numel(shape_)));
        }
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }
    const double* raw() const { return data_.data(); }
    double* raw() { return data_.data(); }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    // [C,H,W] accessors for rank-3 tensors.
    double at(std::size_t c, std::size_t h, std::size_t w) const {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }
    double& at(std::size_t c, std::size_t h, std::size_t w) {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    /// Same data reinterpreted as a rank-1 vector.
    Tensor flattened() const { return Tensor({numel()}, data_); }

private:
    static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
        if (shape.empty() || shape.size() > 4) {
            throw DimensionError("tensor rank must be 1..4, got " +
                                 std::to_string(shape.size()));
        }
        std::size_t n = 1;
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (shape[i] < 1) {
                throw DimensionError("tensor axis " + std::to_string(i) +
                                     " must be >= 1");
            }
            n *= shape[i];
        }
        return n;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

inline std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

/// 2-D cross-correlation of a [C_in,H,W] input with [C_out,C_in,kH,kW]
/// kernels, zero padding. Output is [C_out,H',W'] with
/// H' = floor((H+2p-kH)/stride)+1.
inline Tensor conv2d(const Tensor& input, const Tensor& kernels,
                     const std::vector<double>& bias, std::size_t stride,
                     std::size_t padding) {
    if (input.rank() != 3) {
        throw DimensionError("conv2d: input must be rank 3 [C,H,W], got " +
                             shape_str(input.shape()));
    }
    if (kernels.rank() != 4) {
        throw DimensionError("conv2d: kernels must be rank 4 [C_out,C_in,kH,kW], got " +
                             shape_str(kernels.shape()));
    }
    if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
    const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t c_out = kernels.dim(0), kc = kernels.dim(1);
    const std::size_t kh = kernels.dim(2), kw = kernels.dim(3);
    if (kc != c_in) {
        throw DimensionError("conv2d: kernel input-channel axis (" + std::to_string(kc) +
                             ") does not match input channel axis (" +
                             std::to_string(c_in) + ")");
    }
    if (bias.size() != c_out) {
        throw DimensionError("conv2d: bias length " + std::to_string(bias.size()) +
                             " does not match output-channel axis " +
                             std::to_string(c_out));
    }
    if (kh > h + 2 * padding || kw > w + 2 * padding) {
        throw DimensionError("conv2d: kernel " + std::to_string(kh) + "x" +
                             std::to_string(kw) + " exceeds padded input " +
                             std::to_string(h + 2 * padding) + "x" +
                             std::to_string(w + 2 * padding));
    }
    const std::size_t oh = (h + 2 * padding - kh) / stride + 1;
    const std::size_t ow = (w + 2 * padding - kw) / stride + 1;

    Tensor out({c_out, oh, ow});
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(padding);
    for (std::size_t co = 0; co < c_out; ++co) {
        double* out_plane = out.raw() + co * oh * ow;
        std::fill(out_plane, out_plane + oh * ow, bias[co]);
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const double* in_plane = input.raw() + ci * h * w;
            const double* k_plane = kernels.raw() + ((co * c_in + ci) * kh) * kw;
            for (std::size_t r = 0; r < kh; ++r) {
                for (std::size_t c = 0; c < kw; ++c) {
                    const double kval = k_plane[r * kw + c];
                    if (kval == 0.0) continue;
                    for (std::size_t y = 0; y < oh; ++y) {
                        const std::ptrdiff_t iy =
                            static_cast<std::ptrdiff_t>(y * stride + r) - pad;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        const double* in_row = in_plane + iy * w;
                        double* out_row = out_plane + y * ow;
                        for (std::size_t x = 0; x < ow; ++x) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(x * stride + c) - pad;
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            out_row[x] += kval * in_row[ix];
                        }
                    }
                }
            }
        }
    }
    return out;
}

/// Max pooling over square windows. Output [C,H',W'] with
/// H' = floor((H-window)/stride)+1.
inline Tensor maxpool2d(const Tensor& input, std::size_t window, std::size_t stride) {
    if (input.rank() != 3) {
        throw DimensionError("maxpool2d: input must be rank 3 [C,H,W], got " +
                             shape_str(input.shape()));
    }
    if (window < 1 || stride < 1) {
        throw DimensionError("maxpool2d: window and stride must be >= 1");
    }
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (window > h || window > w) {
        throw DimensionError("maxpool2d: window " + std::to_string(window) +
                             " exceeds spatial axes " + std::to_string(h) + "x" +
                             std::to_string(w));
    }
    const std::size_t oh = (h - window) / stride + 1;
    const std::size_t ow = (w - window) / stride + 1;
    Tensor out({c, oh, ow});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double m = input.at(ch, y * stride, x * stride);
                for (std::size_t r = 0; r < window; ++r) {
                    for (std::size_t cc = 0; cc < window; ++cc) {
                        m = std::max(m, input.at(ch, y * stride + r, x * stride + cc));
                    }
                }
                out.at(ch, y, x) = m;
            }
        }
    }
    return out;
}

/// Elementwise max(0, x).
inline Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

/// Affine map: out_i = sum_j weights[i,j] * input[j] + bias[i].
inline Tensor dense(const Tensor& input, const Tensor& weights,
                    const std::vector<double>& bias) {
    if (input.rank() != 1) {
        throw DimensionError("dense: input must be rank 1, got " +
                             shape_str(input.shape()));
    }
    if (weights.rank() != 2) {
        throw DimensionError("dense: weights must be rank 2 [M,N], got " +
                             shape_str(weights.shape()));
    }
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    if (input.dim(0) != n) {
        throw DimensionError("dense: input length " + std::to_string(input.dim(0)) +
                             " does not match weight column axis " + std::to_string(n));
    }
    if (bias.size() != m) {
        throw DimensionError("dense: bias length " + std::to_string(bias.size()) +
                             " does not match weight row axis " + std::to_string(m));
    }
    Tensor out({m});
    const double* x = input.raw();
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = weights.raw() + i * n;
        double acc = bias[i];
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
    return out;
}

/// Max-shifted softmax; outputs sum to 1 and lie in (0,1].
inline Tensor softmax(const Tensor& input) {
    if (input.rank() != 1) {
        throw DimensionError("softmax: input must be rank 1, got " +
                             shape_str(input.shape()));
    }
    const double m = *std::max_element(input.data().begin(), input.data().end());
    Tensor out({input.dim(0)});
    double sum = 0.0;
    for (std::size_t i = 0; i < input.numel(); ++i) {
        out[i] = std::exp(input[i] - m);
        sum += out[i];
    }
    for (double& v : out.data()) v /= sum;
    return out;
}

inline std::vector<double> softmax(const std::vector<double>& x) {
    return softmax(Tensor({x.size()}, x)).data();
}

}  // namespace satr
