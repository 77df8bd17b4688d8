#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "satr/dataset.hpp"
#include "satr/error.hpp"
#include "satr/noise.hpp"
#include "satr/rng.hpp"
#include "satr/tensor.hpp"

namespace satr {

inline const std::vector<std::string>& target_class_names() {
    static const std::vector<std::string> names = {"block", "cone", "sphere", "cylinder"};
    return names;
}

// Intensity levels on the [0,1] scale before speckle.
constexpr double kBackgroundLevel = 0.3;
constexpr double kHighlightLevel = 0.9;
constexpr double kShadowLevel = 0.05;

struct ChipSpec {
    std::string class_name;
    std::size_t chip_size = 64;
    double orientation_deg = 0.0;
    double scale = 1.0;
    double jitter_px = 5.0;                // positional jitter amplitude
    double orientation_jitter_deg = 15.0;  // around the downrange (+x) axis
    double scale_jitter = 0.1;             // relative scale jitter
    double speckle_sigma = 0.35;
    double clutter_density = 1.0;          // blobs per 64x64 tile, as in scenes
    std::uint64_t seed = 0;
};

namespace synth_detail {

// Shape templates in the local frame: target centered at the origin,
// shadow extending downrange (+x). Units are pixels at scale 1.
//   block:    16x12 highlight, equally wide shadow of length 14
//   cylinder: 7x26 highlight (aspect > 3), matching shadow of length 10
//   sphere:   radius-7 disc, elliptical shadow behind it
//   cone:     triangle pointing uprange, mildly flaring shadow
inline bool in_highlight(std::size_t class_idx, double x, double y, double s) {
    switch (class_idx) {
        case 0:  // block
            return std::abs(x) <= 8.0 * s && std::abs(y) <= 6.0 * s;
        case 1: {  // cone
            if (x < -9.0 * s || x > 7.0 * s) return false;
            const double half_width = 7.0 * s * (x + 9.0 * s) / (16.0 * s);
            return std::abs(y) <= half_width;
        }
        case 2:  // sphere
            return x * x + y * y <= 49.0 * s * s;
        case 3:  // cylinder
            return std::abs(x) <= 3.5 * s && std::abs(y) <= 13.0 * s;
    }
    return false;
}

inline bool in_shadow(std::size_t class_idx, double x, double y, double s) {
    switch (class_idx) {
        case 0:  // block
            return x > 8.0 * s && x <= 22.0 * s && std::abs(y) <= 6.0 * s;
        case 1: {  // cone
            if (x <= 7.0 * s || x > 15.0 * s) return false;
            const double half_width = (7.0 + 2.0 * (x - 7.0 * s) / (8.0 * s)) * s;
            return std::abs(y) <= half_width;
        }
        case 2: {  // sphere
            const double dx = (x - 15.0 * s) / (8.0 * s);
            const double dy = y / (5.0 * s);
            return dx * dx + dy * dy <= 1.0;
        }
        case 3:  // cylinder
            return x > 3.5 * s && x <= 13.5 * s && std::abs(y) <= 13.0 * s;
    }
    return false;
}

/// Maximal distance from the target center reached by highlight or shadow.
inline double target_reach(std::size_t class_idx, double s) {
    switch (class_idx) {
        case 0: return std::hypot(22.0, 6.0) * s;
        case 1: return std::hypot(15.0, 9.0) * s;
        case 2: return 23.0 * s;
        case 3: return std::hypot(13.5, 13.0) * s;
    }
    return 0.0;
}

/// Low-amplitude smoothed-noise blobs, the generic seabed clutter
/// texture: faint anisotropic bumps, smaller and dimmer than any target
/// highlight and of no fixed shape class.
inline void render_clutter(Tensor& image, double density, SplitMix64& rng) {
    const std::size_t h = image.dim(1), w = image.dim(2);
    const double tiles = static_cast<double>(w * h) / 4096.0;
    const std::size_t n_blobs = static_cast<std::size_t>(std::lround(density * tiles));
    for (std::size_t i = 0; i < n_blobs; ++i) {
        const double bx = rng.uniform(0.0, static_cast<double>(w));
        const double by = rng.uniform(0.0, static_cast<double>(h));
        const double radius = rng.uniform(2.0, 5.0);
        const double aspect = rng.uniform(1.0, 3.0);
        const double theta = rng.uniform(0.0, 3.14159265358979323846);
        const double amplitude = rng.uniform(0.03, 0.07);
        const double ct = std::cos(theta), st = std::sin(theta);
        const double inv_long = 1.0 / (2.0 * (radius * aspect / 2.0) * (radius * aspect / 2.0));
        const double inv_short = 1.0 / (2.0 * (radius / 2.0) * (radius / 2.0));
        const double reach = 3.0 * radius * aspect;
        const long rx0 = std::max(0L, static_cast<long>(bx - reach));
        const long rx1 = std::min(static_cast<long>(w) - 1, static_cast<long>(bx + reach));
        const long ry0 = std::max(0L, static_cast<long>(by - reach));
        const long ry1 = std::min(static_cast<long>(h) - 1, static_cast<long>(by + reach));
        for (long py = ry0; py <= ry1; ++py) {
            for (long px = rx0; px <= rx1; ++px) {
                const double dx = static_cast<double>(px) + 0.5 - bx;
                const double dy = static_cast<double>(py) + 0.5 - by;
                const double lx = ct * dx + st * dy;
                const double ly = -st * dx + ct * dy;
                image.at(0, static_cast<std::size_t>(py), static_cast<std::size_t>(px)) +=
                    amplitude * std::exp(-(lx * lx * inv_long + ly * ly * inv_short));
            }
        }
    }
}

inline std::size_t class_index_of(const std::string& name) {
    const auto& names = target_class_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw ArgumentError("unknown target class '" + name + "'");
}

/// Paints highlight and shadow of one target over an existing raster.
inline void render_target(Tensor& image, std::size_t class_idx, double cx, double cy,
                          double orientation_deg, double scale) {
    const std::size_t h = image.dim(1), w = image.dim(2);
    const double theta = orientation_deg * 3.14159265358979323846 / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double reach = target_reach(class_idx, scale);
    const long x0 = std::max(0L, static_cast<long>(std::floor(cx - reach - 1.0)));
    const long x1 = std::min(static_cast<long>(w) - 1,
                             static_cast<long>(std::ceil(cx + reach + 1.0)));
    const long y0 = std::max(0L, static_cast<long>(std::floor(cy - reach - 1.0)));
    const long y1 = std::min(static_cast<long>(h) - 1,
                             static_cast<long>(std::ceil(cy + reach + 1.0)));
    for (long py = y0; py <= y1; ++py) {
        for (long px = x0; px <= x1; ++px) {
            const double dx = (static_cast<double>(px) + 0.5) - cx;
            const double dy = (static_cast<double>(py) + 0.5) - cy;
            // rotate into the local frame
            const double lx = ct * dx + st * dy;
            const double ly = -st * dx + ct * dy;
            if (in_highlight(class_idx, lx, ly, scale)) {
                image.at(0, static_cast<std::size_t>(py), static_cast<std::size_t>(px)) =
                    kHighlightLevel;
            } else if (in_shadow(class_idx, lx, ly, scale)) {
                image.at(0, static_cast<std::size_t>(py), static_cast<std::size_t>(px)) =
                    kShadowLevel;
            }
        }
    }
}

}  // namespace synth_detail

/// One class-specific chip: highlight plus downrange shadow on a speckled
/// background, geometry randomized within the spec's jitter bounds.
inline Tensor generate_chip(const ChipSpec& spec) {
    const std::size_t class_idx = synth_detail::class_index_of(spec.class_name);
    const std::size_t n = spec.chip_size;
    if (n < 8) throw ArgumentError("chip size too small");

    SplitMix64 rng(derive_seed(spec.seed, 0));
    const double jx = rng.uniform(-spec.jitter_px, spec.jitter_px);
    const double jy = rng.uniform(-spec.jitter_px, spec.jitter_px);
    const double theta =
        spec.orientation_deg +
        rng.uniform(-spec.orientation_jitter_deg, spec.orientation_jitter_deg);
    const double scale = spec.scale * (1.0 + rng.uniform(-spec.scale_jitter, spec.scale_jitter));
    if (scale <= 0.0) throw GeometryError("chip scale collapsed to zero");

    const double cx = static_cast<double>(n) / 2.0 + jx;
    const double cy = static_cast<double>(n) / 2.0 + jy;
    const double reach = synth_detail::target_reach(class_idx, scale);
    if (cx - reach < 0.0 || cx + reach > static_cast<double>(n) || cy - reach < 0.0 ||
        cy + reach > static_cast<double>(n)) {
        throw GeometryError("target geometry for class '" + spec.class_name +
                            "' exceeds chip bounds (reach " + std::to_string(reach) +
                            " px from center " + std::to_string(cx) + "," +
                            std::to_string(cy) + ")");
    }

    Tensor chip({1, n, n});
    std::fill(chip.data().begin(), chip.data().end(), kBackgroundLevel);
    if (spec.clutter_density > 0.0) {
        SplitMix64 clutter_rng(derive_seed(spec.seed, 2));
        synth_detail::render_clutter(chip, spec.clutter_density, clutter_rng);
    }
    synth_detail::render_target(chip, class_idx, cx, cy, theta, scale);
    if (spec.speckle_sigma > 0.0) {
        chip = noise_detail::apply_speckle(chip, spec.speckle_sigma, derive_seed(spec.seed, 1),
                                           0.0, false);
    }
    return chip;
}

struct DatasetConfig {
    std::size_t per_class = 60;
    std::uint64_t seed = 0;
    std::size_t chip_size = 64;
    double scale = 1.0;
    double jitter_px = 5.0;
    double orientation_jitter_deg = 15.0;
    double scale_jitter = 0.1;
    double speckle_sigma = 0.35;
    double clutter_density = 1.0;
};

/// Balanced labeled set, one derived seed per chip (class-major order).
inline LabeledChipSet generate_dataset(const DatasetConfig& cfg) {
    if (cfg.per_class < 1) throw ArgumentError("per_class must be >= 1");
    LabeledChipSet set;
    set.class_names = target_class_names();
    for (std::size_t ki = 0; ki < set.class_names.size(); ++ki) {
        for (std::size_t j = 0; j < cfg.per_class; ++j) {
            ChipSpec spec;
            spec.class_name = set.class_names[ki];
            spec.chip_size = cfg.chip_size;
            spec.scale = cfg.scale;
            spec.jitter_px = cfg.jitter_px;
            spec.orientation_jitter_deg = cfg.orientation_jitter_deg;
            spec.scale_jitter = cfg.scale_jitter;
            spec.speckle_sigma = cfg.speckle_sigma;
            spec.clutter_density = cfg.clutter_density;
            spec.seed = derive_seed(cfg.seed, ki * cfg.per_class + j);
            set.chips.push_back(generate_chip(spec));
            set.labels.push_back(ki);
        }
    }
    return set;
}

inline LabeledChipSet generate_dataset(std::size_t per_class, std::uint64_t seed) {
    DatasetConfig cfg;
    cfg.per_class = per_class;
    cfg.seed = seed;
    return generate_dataset(cfg);
}

struct ScenePlacement {
    std::string class_name;
    double center_x = 0.0;
    double center_y = 0.0;
    double orientation_deg = 0.0;
};

struct SceneSpec {
    std::size_t width = 256;
    std::size_t height = 192;
    std::vector<ScenePlacement> targets;
    double clutter_density = 1.0;  // blobs per 64x64 tile
    double speckle_sigma = 0.35;
    double target_scale = 1.0;
    std::size_t box_size = 64;  // ground-truth box side, matches the chip size
    std::uint64_t seed = 0;
};

struct GroundTruthBox {
    std::string class_name;
    long x = 0;
    long y = 0;
    std::size_t width = 0;
    std::size_t height = 0;
};

struct Scene {
    Tensor image;  // [1,H,W]
    std::vector<GroundTruthBox> truth;
};

/// Targets on a speckled, lightly cluttered background, with one
/// chip-sized ground-truth box per target. Overlapping boxes are rejected.
inline Scene generate_scene(const SceneSpec& spec) {
    const long w = static_cast<long>(spec.width);
    const long h = static_cast<long>(spec.height);
    const long box = static_cast<long>(spec.box_size);

    std::vector<GroundTruthBox> truth;
    for (const ScenePlacement& t : spec.targets) {
        synth_detail::class_index_of(t.class_name);
        GroundTruthBox b;
        b.class_name = t.class_name;
        b.x = static_cast<long>(std::lround(t.center_x)) - box / 2;
        b.y = static_cast<long>(std::lround(t.center_y)) - box / 2;
        b.width = spec.box_size;
        b.height = spec.box_size;
        if (b.x < 0 || b.y < 0 || b.x + box > w || b.y + box > h) {
            throw GeometryError("target box for '" + t.class_name +
                                "' falls outside the scene");
        }
        for (const GroundTruthBox& other : truth) {
            const bool separated = b.x + box <= other.x || other.x + box <= b.x ||
                                   b.y + box <= other.y || other.y + box <= b.y;
            if (!separated) {
                throw GeometryError("target boxes overlap at " + std::to_string(b.x) + "," +
                                    std::to_string(b.y));
            }
        }
        truth.push_back(b);
    }

    Tensor image({1, spec.height, spec.width});
    std::fill(image.data().begin(), image.data().end(), kBackgroundLevel);

    // Smooth clutter bumps, drawn before the targets.
    if (spec.clutter_density > 0.0) {
        SplitMix64 rng(derive_seed(spec.seed, 0));
        synth_detail::render_clutter(image, spec.clutter_density, rng);
    }

    for (const ScenePlacement& t : spec.targets) {
        synth_detail::render_target(image, synth_detail::class_index_of(t.class_name),
                                    t.center_x, t.center_y, t.orientation_deg,
                                    spec.target_scale);
    }

    if (spec.speckle_sigma > 0.0) {
        image = noise_detail::apply_speckle(image, spec.speckle_sigma,
                                            derive_seed(spec.seed, 1), 0.0, false);
    }
    return Scene{std::move(image), std::move(truth)};
}

}  // namespace satr
