#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "satr/error.hpp"
#include "satr/rng.hpp"
#include "satr/tensor.hpp"

namespace satr {

/// Exactly one of target_psnr_db / sigma must be set.
struct NoiseConfig {
    std::optional<double> target_psnr_db;
    std::optional<double> sigma;
    std::uint64_t seed = 0;
};

/// 10*log10(MAX^2/MSE) with MAX = reference peak value. Identical images
/// report +infinity.
inline double psnr(const Tensor& reference, const Tensor& test) {
    if (!reference.same_shape(test)) {
        throw DimensionError("psnr: shapes differ, " + shape_str(reference.shape()) +
                             " vs " + shape_str(test.shape()));
    }
    double max_val = 0.0;
    double mse = 0.0;
    for (std::size_t i = 0; i < reference.numel(); ++i) {
        max_val = std::max(max_val, reference[i]);
        const double diff = reference[i] - test[i];
        mse += diff * diff;
    }
    mse /= static_cast<double>(reference.numel());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(max_val * max_val / mse);
}

namespace noise_detail {

/// Rayleigh(sigma) draw by inverse CDF: R = sigma*sqrt(-2*ln(1-U)).
inline double rayleigh(SplitMix64& rng, double sigma) {
    return sigma * std::sqrt(-2.0 * std::log1p(-rng.next_double()));
}

constexpr double kRayleighMeanFactor = 1.2533141373155003;  // sqrt(pi/2)

/// Multiplicative mean-one speckle field of strength sigma:
/// N = 1 + (R - E[R]) with R ~ Rayleigh(sigma), E[R] = sigma*sqrt(pi/2).
/// E[N] = 1 for every sigma, N -> 1 as sigma -> 0, and the noise power
/// grows monotonically with sigma, which makes PSNR calibration by
/// bisection well posed. At sigma = 1/sqrt(pi/2) the field coincides with
/// the plain normalized speckle R/E[R].
inline double speckle_factor(SplitMix64& rng, double sigma) {
    return 1.0 + rayleigh(rng, sigma) - sigma * kRayleighMeanFactor;
}

inline Tensor apply_speckle(const Tensor& image, double sigma, std::uint64_t seed,
                            double clip_hi, bool quantize) {
    SplitMix64 rng(seed);
    Tensor out = image;
    for (double& v : out.data()) {
        v *= speckle_factor(rng, sigma);
        if (v < 0.0) v = 0.0;
        if (clip_hi > 0.0 && v > clip_hi) v = clip_hi;
        if (quantize) v = std::nearbyint(v);
    }
    return out;
}

constexpr std::uint64_t kCalibrationSeed = 0x5A5CA11B7A7E0001ULL;

}  // namespace noise_detail

struct CorruptResult {
    Tensor image;
    double achieved_psnr_db = 0.0;
    double sigma = 0.0;
};

/// Multiplicative mean-one Rayleigh speckle. When a PSNR target is given,
/// sigma is found by bisection on [1e-6, 10] against PSNR measured with a
/// fixed internal seed; the final field is drawn with the user seed and
/// must land within +-0.5 dB of the target. `clip_hi` > 0 clips the output
/// from above; `quantize` rounds to whole values (both set for 8-bit
/// rasters, neither for float rasters, which only clip at zero).
inline CorruptResult corrupt_rayleigh(const Tensor& image, const NoiseConfig& config,
                                      double clip_hi = 0.0, bool quantize = false) {
    if (config.sigma.has_value() == config.target_psnr_db.has_value()) {
        throw ArgumentError("noise config must set exactly one of sigma / target psnr");
    }
    for (double v : image.data()) {
        if (!(v >= 0.0)) throw ArgumentError("corrupt_rayleigh: image must be nonnegative");
    }

    double sigma;
    if (config.sigma) {
        sigma = *config.sigma;
        if (sigma <= 0.0) throw ArgumentError("corrupt_rayleigh: sigma must be positive");
    } else {
        const double target = *config.target_psnr_db;
        if (target <= 0.0) throw ArgumentError("corrupt_rayleigh: psnr target must be > 0 dB");
        double lo = 1e-6, hi = 10.0;
        const auto measure = [&](double s) {
            return psnr(image, noise_detail::apply_speckle(
                                   image, s, noise_detail::kCalibrationSeed, clip_hi, quantize));
        };
        const double psnr_lo_sigma = measure(lo);
        const double psnr_hi_sigma = measure(hi);
        if (target > psnr_lo_sigma || target < psnr_hi_sigma) {
            throw CalibrationError("psnr target " + std::to_string(target) +
                                   " dB outside the reachable range [" +
                                   std::to_string(psnr_hi_sigma) + ", " +
                                   std::to_string(psnr_lo_sigma) + "] dB");
        }
        for (int iter = 0; iter < 60; ++iter) {
            const double mid = 0.5 * (lo + hi);
            const double value = measure(mid);
            if (std::abs(value - target) < 0.1) {
                lo = hi = mid;
                break;
            }
            if (value > target) {
                lo = mid;  // too clean, more noise
            } else {
                hi = mid;
            }
        }
        sigma = 0.5 * (lo + hi);
    }

    CorruptResult result;
    result.sigma = sigma;
    result.image = noise_detail::apply_speckle(image, sigma, config.seed, clip_hi, quantize);
    result.achieved_psnr_db = psnr(image, result.image);
    if (config.target_psnr_db &&
        std::abs(result.achieved_psnr_db - *config.target_psnr_db) > 0.5) {
        throw CalibrationError("achieved psnr " + std::to_string(result.achieved_psnr_db) +
                               " dB misses target " + std::to_string(*config.target_psnr_db) +
                               " dB by more than 0.5 dB");
    }
    return result;
}

}  // namespace satr
