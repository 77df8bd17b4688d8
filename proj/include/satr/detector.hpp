#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "satr/error.hpp"
#include "satr/network.hpp"
#include "satr/svm.hpp"
#include "satr/synthgen.hpp"
#include "satr/tensor.hpp"

namespace satr {

/// Uniform overlapping patch tiling; origins in row-major (y, x) order.
struct PatchGrid {
    std::size_t patch_size = 0;
    std::size_t stride = 0;
    std::vector<std::pair<std::size_t, std::size_t>> origins;  // (x, y)
};

inline PatchGrid build_grid(std::size_t scene_width, std::size_t scene_height,
                            std::size_t patch_size, std::size_t stride) {
    if (patch_size > scene_width || patch_size > scene_height) {
        throw DimensionError("patch size " + std::to_string(patch_size) +
                             " exceeds scene " + std::to_string(scene_width) + "x" +
                             std::to_string(scene_height));
    }
    if (stride < 1 || stride > patch_size) {
        throw ArgumentError("stride must lie in [1, patch_size]");
    }
    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.stride = stride;
    for (std::size_t y = 0; y + patch_size <= scene_height; y += stride) {
        for (std::size_t x = 0; x + patch_size <= scene_width; x += stride) {
            grid.origins.emplace_back(x, y);
        }
    }
    return grid;
}

struct Detection {
    std::size_t origin_x = 0;
    std::size_t origin_y = 0;
    std::size_t patch_size = 0;
    std::string class_name;
    std::size_t class_index = 0;
    double normalized_score = 0.0;
    std::vector<double> raw_scores;
};

struct DetectionReport {
    std::string scene_id;
    double threshold = 0.0;
    std::size_t patch_size = 0;
    std::size_t stride = 0;
    std::vector<Detection> detections;  // sorted by (y, x)
};

namespace detector_detail {

inline Tensor crop(const Tensor& scene, std::size_t x, std::size_t y, std::size_t size) {
    Tensor out({1, size, size});
    for (std::size_t r = 0; r < size; ++r) {
        const double* src = scene.raw() + (y + r) * scene.dim(2) + x;
        std::copy(src, src + size, out.raw() + r * size);
    }
    return out;
}

/// Half-pixel-center bilinear resize of a [C,H,W] tensor.
inline Tensor resize_bilinear(const Tensor& input, std::size_t out_h, std::size_t out_w) {
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h == out_h && w == out_w) return input;
    Tensor out({c, out_h, out_w});
    const double sy = static_cast<double>(h) / static_cast<double>(out_h);
    const double sx = static_cast<double>(w) / static_cast<double>(out_w);
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < out_h; ++y) {
            double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
            fy = std::min(std::max(fy, 0.0), static_cast<double>(h - 1));
            const std::size_t y0 = static_cast<std::size_t>(fy);
            const std::size_t y1 = std::min(y0 + 1, h - 1);
            const double wy = fy - static_cast<double>(y0);
            for (std::size_t x = 0; x < out_w; ++x) {
                double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
                fx = std::min(std::max(fx, 0.0), static_cast<double>(w - 1));
                const std::size_t x0 = static_cast<std::size_t>(fx);
                const std::size_t x1 = std::min(x0 + 1, w - 1);
                const double wx = fx - static_cast<double>(x0);
                const double top = input.at(ch, y0, x0) * (1.0 - wx) +
                                   input.at(ch, y0, x1) * wx;
                const double bot = input.at(ch, y1, x0) * (1.0 - wx) +
                                   input.at(ch, y1, x1) * wx;
                out.at(ch, y, x) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

}  // namespace detector_detail

/// Scores every grid patch and keeps those whose maximal normalized SVM
/// score reaches the threshold. Patches are independent, so the result
/// does not depend on evaluation order; detections come back sorted by
/// (y, x) origin.
inline DetectionReport scan(const Tensor& scene, const Model& net, const SvmModel& svm,
                            const PatchGrid& grid, double tau,
                            const std::string& scene_id = "") {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw ArgumentError("detection threshold must lie in (0,1)");
    }
    if (scene.rank() != 3 || scene.dim(0) != 1) {
        throw DimensionError("scan: scene must be [1,H,W], got " + shape_str(scene.shape()));
    }
    DetectionReport report;
    report.scene_id = scene_id;
    report.threshold = tau;
    report.patch_size = grid.patch_size;
    report.stride = grid.stride;

    const std::size_t in_h = net.spec.input_shape[1];
    const std::size_t in_w = net.spec.input_shape[2];
    for (const auto& [x, y] : grid.origins) {
        if (x + grid.patch_size > scene.dim(2) || y + grid.patch_size > scene.dim(1)) {
            throw DimensionError("grid origin " + std::to_string(x) + "," +
                                 std::to_string(y) + " falls outside the scene");
        }
        Tensor patch = detector_detail::crop(scene, x, y, grid.patch_size);
        patch = detector_detail::resize_bilinear(patch, in_h, in_w);
        const std::vector<double> feature = extract_features(net, patch);
        const std::vector<double> scores = normalized_scores(svm, feature);
        std::size_t best = 0;
        for (std::size_t k = 1; k < scores.size(); ++k) {
            if (scores[k] > scores[best]) best = k;
        }
        if (scores[best] >= tau) {
            Detection d;
            d.origin_x = x;
            d.origin_y = y;
            d.patch_size = grid.patch_size;
            d.class_index = best;
            d.class_name = svm.class_names[best];
            d.normalized_score = scores[best];
            d.raw_scores = decision_scores(svm, feature);
            report.detections.push_back(std::move(d));
        }
    }
    std::sort(report.detections.begin(), report.detections.end(),
              [](const Detection& a, const Detection& b) {
                  return a.origin_y != b.origin_y ? a.origin_y < b.origin_y
                                                  : a.origin_x < b.origin_x;
              });
    return report;
}

struct MergedRegion {
    std::string class_name;
    long x = 0;
    long y = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    double score = 0.0;  // max member score
};

/// Connected components (by positive-area rectangle intersection) of
/// same-class detections; each component becomes one bounding region
/// carrying the maximal member score. Idempotent.
inline std::vector<MergedRegion> merge_regions(const DetectionReport& report) {
    const std::size_t n = report.detections.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    const auto find = [&](std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    const auto overlap = [](const Detection& a, const Detection& b) {
        return a.origin_x < b.origin_x + b.patch_size &&
               b.origin_x < a.origin_x + a.patch_size &&
               a.origin_y < b.origin_y + b.patch_size &&
               b.origin_y < a.origin_y + a.patch_size;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Detection& a = report.detections[i];
            const Detection& b = report.detections[j];
            if (a.class_index == b.class_index && overlap(a, b)) {
                parent[find(i)] = find(j);
            }
        }
    }
    std::vector<MergedRegion> regions;
    std::vector<long> root_of;  // region index per root, -1 when unseen
    root_of.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const Detection& d = report.detections[i];
        const std::size_t r = find(i);
        if (root_of[r] < 0) {
            root_of[r] = static_cast<long>(regions.size());
            MergedRegion m;
            m.class_name = d.class_name;
            m.x = static_cast<long>(d.origin_x);
            m.y = static_cast<long>(d.origin_y);
            m.width = d.patch_size;
            m.height = d.patch_size;
            m.score = d.normalized_score;
            regions.push_back(m);
        } else {
            MergedRegion& m = regions[static_cast<std::size_t>(root_of[r])];
            const long x0 = std::min(m.x, static_cast<long>(d.origin_x));
            const long y0 = std::min(m.y, static_cast<long>(d.origin_y));
            const long x1 = std::max(m.x + static_cast<long>(m.width),
                                     static_cast<long>(d.origin_x + d.patch_size));
            const long y1 = std::max(m.y + static_cast<long>(m.height),
                                     static_cast<long>(d.origin_y + d.patch_size));
            m.x = x0;
            m.y = y0;
            m.width = static_cast<std::size_t>(x1 - x0);
            m.height = static_cast<std::size_t>(y1 - y0);
            m.score = std::max(m.score, d.normalized_score);
        }
    }
    std::sort(regions.begin(), regions.end(), [](const MergedRegion& a, const MergedRegion& b) {
        if (a.class_name != b.class_name) return a.class_name < b.class_name;
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    return regions;
}

struct DetectionEval {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    std::optional<double> precision;
    std::optional<double> recall;
};

/// Greedy matching: a region is a true positive when it covers at least
/// `min_truth_overlap` of a same-class ground-truth box's area; each truth
/// matches at most once.
inline DetectionEval evaluate_detection(const std::vector<MergedRegion>& regions,
                                        const std::vector<GroundTruthBox>& truth,
                                        double min_truth_overlap = 0.25) {
    std::vector<bool> matched(truth.size(), false);
    DetectionEval eval;
    for (const MergedRegion& region : regions) {
        bool hit = false;
        for (std::size_t t = 0; t < truth.size(); ++t) {
            if (matched[t] || truth[t].class_name != region.class_name) continue;
            const long ix0 = std::max(region.x, truth[t].x);
            const long iy0 = std::max(region.y, truth[t].y);
            const long ix1 = std::min(region.x + static_cast<long>(region.width),
                                      truth[t].x + static_cast<long>(truth[t].width));
            const long iy1 = std::min(region.y + static_cast<long>(region.height),
                                      truth[t].y + static_cast<long>(truth[t].height));
            const double inter = ix1 > ix0 && iy1 > iy0
                                     ? static_cast<double>(ix1 - ix0) *
                                           static_cast<double>(iy1 - iy0)
                                     : 0.0;
            const double truth_area = static_cast<double>(truth[t].width) *
                                      static_cast<double>(truth[t].height);
            if (inter >= min_truth_overlap * truth_area) {
                matched[t] = true;
                hit = true;
                break;
            }
        }
        if (hit) {
            eval.true_positives++;
        } else {
            eval.false_positives++;
        }
    }
    for (bool m : matched) {
        if (!m) eval.false_negatives++;
    }
    if (eval.true_positives + eval.false_positives > 0) {
        eval.precision = static_cast<double>(eval.true_positives) /
                         static_cast<double>(eval.true_positives + eval.false_positives);
    }
    if (eval.true_positives + eval.false_negatives > 0) {
        eval.recall = static_cast<double>(eval.true_positives) /
                      static_cast<double>(eval.true_positives + eval.false_negatives);
    }
    return eval;
}

/// Copy of the scene with every flagged patch brightened by 1.5x (clipped
/// downstream when rendered to 8 bits).
inline Tensor overlay_detections(const Tensor& scene, const DetectionReport& report) {
    Tensor out = scene;
    for (const Detection& d : report.detections) {
        for (std::size_t r = 0; r < d.patch_size; ++r) {
            double* row = out.raw() + (d.origin_y + r) * out.dim(2) + d.origin_x;
            for (std::size_t c = 0; c < d.patch_size; ++c) row[c] *= 1.5;
        }
    }
    return out;
}

}  // namespace satr
