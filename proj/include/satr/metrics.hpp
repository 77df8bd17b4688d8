#pragma once

#include <optional>
#include <string>
#include <vector>

#include "satr/error.hpp"

namespace satr {

/// K x K counts indexed [true][predicted].
struct ConfusionMatrix {
    std::vector<std::string> class_names;
    std::vector<std::vector<std::size_t>> counts;

    explicit ConfusionMatrix(std::vector<std::string> names)
        : class_names(std::move(names)),
          counts(class_names.size(), std::vector<std::size_t>(class_names.size(), 0)) {}

    std::size_t num_classes() const { return class_names.size(); }

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& row : counts) {
            for (std::size_t v : row) n += v;
        }
        return n;
    }

    std::size_t class_index(const std::string& name) const {
        for (std::size_t i = 0; i < class_names.size(); ++i) {
            if (class_names[i] == name) return i;
        }
        throw ArgumentError("unknown class name '" + name + "'");
    }

    void add(std::size_t true_class, std::size_t predicted_class, std::size_t n = 1) {
        if (true_class >= num_classes() || predicted_class >= num_classes()) {
            throw ArgumentError("class index out of range");
        }
        counts[true_class][predicted_class] += n;
    }
};

/// Counts the (true, predicted) pairs; order independent.
inline ConfusionMatrix accumulate(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::vector<std::string>& class_names) {
    ConfusionMatrix cm(class_names);
    for (const auto& [truth, predicted] : pairs) {
        cm.add(cm.class_index(truth), cm.class_index(predicted));
    }
    return cm;
}

/// Per-class precision/recall; absent optional marks an undefined value
/// (class never predicted, or class absent from the truth), which is
/// excluded from the macro means.
struct ClassPR {
    std::optional<double> precision;
    std::optional<double> recall;
};

struct PRReport {
    std::vector<std::string> class_names;
    std::vector<ClassPR> per_class;
    std::optional<double> mean_precision;
    std::optional<double> mean_recall;
    bool any_undefined = false;
};

inline PRReport precision_recall(const ConfusionMatrix& cm) {
    PRReport report;
    report.class_names = cm.class_names;
    const std::size_t k = cm.num_classes();
    double sum_p = 0.0, sum_r = 0.0;
    std::size_t n_p = 0, n_r = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double tp = static_cast<double>(cm.counts[c][c]);
        double fp = 0.0, fn = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == c) continue;
            fp += static_cast<double>(cm.counts[j][c]);
            fn += static_cast<double>(cm.counts[c][j]);
        }
        ClassPR pr;
        if (tp + fp > 0.0) {
            pr.precision = tp / (tp + fp);
            sum_p += *pr.precision;
            ++n_p;
        } else {
            report.any_undefined = true;
        }
        if (tp + fn > 0.0) {
            pr.recall = tp / (tp + fn);
            sum_r += *pr.recall;
            ++n_r;
        } else {
            report.any_undefined = true;
        }
        report.per_class.push_back(pr);
    }
    if (n_p > 0) report.mean_precision = sum_p / static_cast<double>(n_p);
    if (n_r > 0) report.mean_recall = sum_r / static_cast<double>(n_r);
    return report;
}

}  // namespace satr
