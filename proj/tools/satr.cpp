// satr - sonar automatic target recognition toolkit CLI.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "satr/satr.hpp"

namespace fs = std::filesystem;
using namespace satr;

namespace {

std::string six(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Manifest rows are (path,label) with paths relative to the manifest file.
LabeledChipSet load_chipset(const std::string& manifest_path,
                            const std::vector<std::string>& class_order = {}) {
    const auto rows = parse_csv(read_file(manifest_path));
    if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "path") {
        throw FormatError(manifest_path + ": expected a manifest CSV with header path,label");
    }
    const fs::path base = fs::path(manifest_path).parent_path();
    LabeledChipSet set;
    set.class_names = class_order;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() < 2) {
            throw FormatError(manifest_path + ": row " + std::to_string(r) +
                              " needs path,label");
        }
        const std::string& label = rows[r][1];
        std::size_t idx = set.class_names.size();
        for (std::size_t k = 0; k < set.class_names.size(); ++k) {
            if (set.class_names[k] == label) {
                idx = k;
                break;
            }
        }
        if (idx == set.class_names.size()) {
            if (!class_order.empty()) {
                throw TrainingDataError(manifest_path + ": label '" + label +
                                        "' is not a class of the model");
            }
            set.class_names.push_back(label);
        }
        fs::path p(rows[r][0]);
        if (p.is_relative()) p = base / p;
        set.chips.push_back(read_sasr(p.string()));
        set.labels.push_back(idx);
    }
    return set;
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) {
                out.push_back(static_cast<std::size_t>(std::stoul(cur)));
                cur.clear();
            }
        } else if (c >= '0' && c <= '9') {
            cur += c;
        } else {
            throw ArgumentError("bad index list: " + text);
        }
    }
    return out;
}

// --- gen-data ---------------------------------------------------------------

struct GenDataArgs {
    std::string out_dir;
    std::size_t per_class = 60;
    std::uint64_t seed = 0;
    std::size_t chip_size = 64;
    double scale = 1.0;
    double jitter = 5.0;
    double orient_jitter = 15.0;
    double scale_jitter = 0.1;
    double speckle = 0.35;
    double clutter = 1.0;
};

int run_gen_data(const GenDataArgs& a) {
    DatasetConfig cfg;
    cfg.per_class = a.per_class;
    cfg.seed = a.seed;
    cfg.chip_size = a.chip_size;
    cfg.scale = a.scale;
    cfg.jitter_px = a.jitter;
    cfg.orientation_jitter_deg = a.orient_jitter;
    cfg.scale_jitter = a.scale_jitter;
    cfg.speckle_sigma = a.speckle;
    cfg.clutter_density = a.clutter;
    const LabeledChipSet set = generate_dataset(cfg);

    fs::create_directories(a.out_dir);
    std::vector<std::vector<CsvValue>> rows;
    for (std::size_t i = 0; i < set.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "chip_%04zu.sasr", i);
        write_sasr(set.chips[i], (fs::path(a.out_dir) / name).string());
        rows.push_back({std::string(name), set.class_names[set.labels[i]]});
    }
    write_results_csv((fs::path(a.out_dir) / "manifest.csv").string(), {"path", "label"},
                      rows);
    std::cout << "wrote " << set.size() << " chips to " << a.out_dir << "\n";
    return 0;
}

// --- gen-scene --------------------------------------------------------------

struct GenSceneArgs {
    std::string out_path;
    std::string truth_path;
    std::size_t width = 256;
    std::size_t height = 192;
    std::vector<std::string> targets;
    double clutter = 1.0;
    double speckle = 0.35;
    std::uint64_t seed = 0;
};

ScenePlacement parse_placement(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text + ":") {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (parts.size() < 3 || parts.size() > 4) {
        throw ArgumentError("--target must be class:cx:cy[:orientation], got '" + text + "'");
    }
    ScenePlacement p;
    p.class_name = parts[0];
    p.center_x = std::stod(parts[1]);
    p.center_y = std::stod(parts[2]);
    if (parts.size() == 4) p.orientation_deg = std::stod(parts[3]);
    return p;
}

int run_gen_scene(const GenSceneArgs& a) {
    SceneSpec spec;
    spec.width = a.width;
    spec.height = a.height;
    spec.clutter_density = a.clutter;
    spec.speckle_sigma = a.speckle;
    spec.seed = a.seed;
    for (const std::string& t : a.targets) spec.targets.push_back(parse_placement(t));
    const Scene scene = generate_scene(spec);
    write_sasr(scene.image, a.out_path);
    if (!a.truth_path.empty()) {
        std::vector<std::vector<CsvValue>> rows;
        for (const GroundTruthBox& b : scene.truth) {
            rows.push_back({b.class_name, static_cast<long long>(b.x),
                            static_cast<long long>(b.y), static_cast<long long>(b.width),
                            static_cast<long long>(b.height)});
        }
        write_results_csv(a.truth_path, {"class", "x", "y", "width", "height"}, rows);
    }
    std::cout << "wrote scene " << a.out_path << " with " << scene.truth.size()
              << " targets\n";
    return 0;
}

std::vector<GroundTruthBox> load_truth(const std::string& path) {
    const auto rows = parse_csv(read_file(path));
    if (rows.empty() || rows[0].size() < 5 || rows[0][0] != "class") {
        throw FormatError(path + ": expected a truth CSV with header class,x,y,width,height");
    }
    std::vector<GroundTruthBox> truth;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        GroundTruthBox b;
        b.class_name = rows[r][0];
        b.x = std::stol(rows[r][1]);
        b.y = std::stol(rows[r][2]);
        b.width = static_cast<std::size_t>(std::stoul(rows[r][3]));
        b.height = static_cast<std::size_t>(std::stoul(rows[r][4]));
        truth.push_back(b);
    }
    return truth;
}

// --- fine-tune --------------------------------------------------------------

struct FineTuneArgs {
    std::string config_path;
    std::string model_path;
    std::string data_path;
    std::string out_path;
    std::string history_path;
    FineTuneConfig cfg;
    std::uint64_t init_seed = 0;
};

int run_fine_tune(const FineTuneArgs& a) {
    Model model;
    if (!a.config_path.empty()) {
        model = make_model(load_network_config(a.config_path), a.init_seed);
    } else {
        model = load_model(a.model_path);
    }
    const LabeledChipSet data = load_chipset(a.data_path, model.spec.class_names);
    const std::vector<double> history = fine_tune(model, data, a.cfg);
    save_model(model, a.out_path);
    for (std::size_t e = 0; e < history.size(); ++e) {
        std::cout << e << "," << six(history[e]) << "\n";
    }
    if (!a.history_path.empty()) {
        std::vector<std::vector<CsvValue>> rows;
        for (std::size_t e = 0; e < history.size(); ++e) {
            rows.push_back({static_cast<long long>(e), history[e]});
        }
        write_results_csv(a.history_path, {"epoch", "loss"}, rows);
    }
    return 0;
}

// --- extract-features -------------------------------------------------------

struct ExtractArgs {
    std::string model_path;
    std::string data_path;
    std::string out_path;
    bool raw = false;
    long long tap_layer = -1;
};

int run_extract(const ExtractArgs& a) {
    std::vector<std::vector<double>> features;
    std::vector<std::string> labels;
    if (a.raw) {
        const LabeledChipSet data = load_chipset(a.data_path);
        for (std::size_t i = 0; i < data.size(); ++i) {
            features.push_back(data.chips[i].data());
            labels.push_back(data.class_names[data.labels[i]]);
        }
    } else {
        const Model model = load_model(a.model_path);
        const LabeledChipSet data = load_chipset(a.data_path);
        std::optional<std::size_t> tap;
        if (a.tap_layer >= 0) tap = static_cast<std::size_t>(a.tap_layer);
        for (std::size_t i = 0; i < data.size(); ++i) {
            features.push_back(extract_features(model, data.chips[i], tap));
            labels.push_back(data.class_names[data.labels[i]]);
        }
    }
    write_feature_csv(a.out_path, features, labels);
    std::cout << "wrote " << features.size() << " feature vectors to " << a.out_path << "\n";
    return 0;
}

// --- train-svm --------------------------------------------------------------

struct TrainSvmArgs {
    std::string features_path;
    std::string out_path;
    double c = 1.0;
    std::uint64_t seed = 0;
};

int run_train_svm(const TrainSvmArgs& a) {
    std::vector<std::vector<double>> vectors;
    std::vector<std::string> labels;
    read_feature_csv(a.features_path, vectors, labels);
    FeatureSet fs_set;
    fs_set.vectors = std::move(vectors);
    for (const std::string& label : labels) {
        std::size_t idx = fs_set.class_names.size();
        for (std::size_t k = 0; k < fs_set.class_names.size(); ++k) {
            if (fs_set.class_names[k] == label) {
                idx = k;
                break;
            }
        }
        if (idx == fs_set.class_names.size()) fs_set.class_names.push_back(label);
        fs_set.labels.push_back(idx);
    }
    const SvmModel model = train_svm(fs_set, a.c, a.seed);
    save_svm(model, a.out_path);
    for (std::size_t dim : model.zero_variance_dims) {
        std::cerr << "warning: feature dimension " << dim
                  << " has zero variance, scale forced to 1\n";
    }
    std::cout << "trained " << model.num_classes() << "-class svm on "
              << fs_set.vectors.size() << " vectors\n";
    return 0;
}

// --- classify ---------------------------------------------------------------

struct ClassifyArgs {
    std::string chip_path;
    std::string model_path;
    std::string svm_path;
    long long tap_layer = -1;
};

int run_classify(const ClassifyArgs& a) {
    const Model model = load_model(a.model_path);
    const SvmModel svm = load_svm(a.svm_path);
    const Tensor chip = read_sasr(a.chip_path);
    std::optional<std::size_t> tap;
    if (a.tap_layer >= 0) tap = static_cast<std::size_t>(a.tap_layer);
    const Classification result = classify(svm, extract_features(model, chip, tap));
    std::cout << result.class_name << "," << six(result.normalized_score) << "\n";
    return 0;
}

// --- corrupt ----------------------------------------------------------------

struct CorruptArgs {
    std::string in_path;
    std::string out_path;
    double psnr_db = 0.0;
    double sigma = 0.0;
    bool have_psnr = false;
    bool have_sigma = false;
    std::uint64_t seed = 0;
};

int run_corrupt(const CorruptArgs& a) {
    NoiseConfig cfg;
    cfg.seed = a.seed;
    if (a.have_psnr) cfg.target_psnr_db = a.psnr_db;
    if (a.have_sigma) cfg.sigma = a.sigma;

    const std::string data = read_file(a.in_path);
    if (data.size() >= 2 && data[0] == 'P' && data[1] == '5') {
        const GrayImage img = parse_pgm(data, a.in_path);
        std::vector<double> values(img.pixels.begin(), img.pixels.end());
        const Tensor raster({1, img.height, img.width}, std::move(values));
        const CorruptResult result = corrupt_rayleigh(raster, cfg, 255.0, true);
        GrayImage out;
        out.width = img.width;
        out.height = img.height;
        for (double v : result.image.data()) {
            out.pixels.push_back(static_cast<std::uint8_t>(v));
        }
        write_pgm(out, a.out_path);
        std::cout << "psnr_db," << six(result.achieved_psnr_db) << "\n";
    } else {
        const Tensor raster = parse_sasr(data, a.in_path);
        const CorruptResult result = corrupt_rayleigh(raster, cfg);
        write_sasr(result.image, a.out_path);
        std::cout << "psnr_db," << six(result.achieved_psnr_db) << "\n";
    }
    return 0;
}

// --- detect -----------------------------------------------------------------

struct DetectArgs {
    std::string scene_path;
    std::string model_path;
    std::string svm_path;
    std::string out_path;
    std::string merge_path;
    std::string overlay_path;
    double tau = 0.9;
    std::size_t patch = 64;
    std::size_t stride = 32;
};

int run_detect(const DetectArgs& a) {
    const Tensor scene = read_sasr(a.scene_path);
    const Model model = load_model(a.model_path);
    const SvmModel svm = load_svm(a.svm_path);
    const PatchGrid grid = build_grid(scene.dim(2), scene.dim(1), a.patch, a.stride);
    const DetectionReport report = scan(scene, model, svm, grid, a.tau, a.scene_path);

    std::vector<std::vector<CsvValue>> rows;
    for (const Detection& d : report.detections) {
        rows.push_back({static_cast<long long>(d.origin_x),
                        static_cast<long long>(d.origin_y),
                        static_cast<long long>(d.patch_size), d.class_name,
                        d.normalized_score});
    }
    write_results_csv(a.out_path, {"origin_x", "origin_y", "size", "class", "score"}, rows);
    std::cout << report.detections.size() << " detections above tau=" << six(a.tau) << "\n";

    if (!a.merge_path.empty()) {
        std::vector<std::vector<CsvValue>> region_rows;
        for (const MergedRegion& m : merge_regions(report)) {
            region_rows.push_back({m.class_name, static_cast<long long>(m.x),
                                   static_cast<long long>(m.y),
                                   static_cast<long long>(m.width),
                                   static_cast<long long>(m.height), m.score});
        }
        write_results_csv(a.merge_path, {"class", "x", "y", "width", "height", "score"},
                          region_rows);
    }
    if (!a.overlay_path.empty()) {
        write_pgm(tensor_to_gray(overlay_detections(scene, report)), a.overlay_path);
    }
    return 0;
}

// --- calibrate --------------------------------------------------------------

struct CalibrateArgs {
    std::string scene_path;
    std::string truth_path;
    std::string model_path;
    std::string svm_path;
    std::string out_path;
    double tau_min = 0.05;
    double tau_max = 0.95;
    double tau_step = 0.05;
    std::size_t patch = 64;
    std::size_t stride = 32;
};

int run_calibrate(const CalibrateArgs& a) {
    const Tensor scene = read_sasr(a.scene_path);
    const std::vector<GroundTruthBox> truth = load_truth(a.truth_path);
    const Model model = load_model(a.model_path);
    const SvmModel svm = load_svm(a.svm_path);
    const PatchGrid grid = build_grid(scene.dim(2), scene.dim(1), a.patch, a.stride);

    std::vector<std::vector<CsvValue>> rows;
    double best_tau = a.tau_min;
    double best_recall = -1.0;
    double best_precision = -1.0;
    for (double tau = a.tau_min; tau <= a.tau_max + 1e-12; tau += a.tau_step) {
        const DetectionReport report = scan(scene, model, svm, grid, tau, a.scene_path);
        const DetectionEval eval = evaluate_detection(merge_regions(report), truth);
        const double recall = eval.recall.value_or(0.0);
        const double precision = eval.precision.value_or(0.0);
        rows.push_back({tau, eval.precision ? CsvValue(*eval.precision) : CsvValue(),
                        eval.recall ? CsvValue(*eval.recall) : CsvValue()});
        // favor recall (few false negatives), then precision, then the
        // lowest threshold
        if (recall > best_recall ||
            (recall == best_recall && precision > best_precision)) {
            best_recall = recall;
            best_precision = precision;
            best_tau = tau;
        }
    }
    if (!a.out_path.empty()) {
        write_results_csv(a.out_path, {"tau", "precision", "recall"}, rows);
    }
    std::cout << "tau," << six(best_tau) << "\n";
    return 0;
}

// --- benchmark --------------------------------------------------------------

struct BenchmarkArgs {
    std::string data_path;
    std::string model_path;
    std::string out_path;
    std::size_t trials = 4;
    std::size_t train_per_class = 20;
    std::size_t test_per_class = 10;
    std::string methods = "cnn_svm,raw_svm";
    double c = 1.0;
    std::uint64_t seed = 0;
    FineTuneConfig ft;
};

FeatureSet features_of(const Model* net, const LabeledChipSet& data,
                       const std::vector<std::size_t>& indices, bool raw) {
    FeatureSet fs_set;
    fs_set.class_names = data.class_names;
    for (std::size_t i : indices) {
        fs_set.vectors.push_back(raw ? data.chips[i].data()
                                     : extract_features(*net, data.chips[i]));
        fs_set.labels.push_back(data.labels[i]);
    }
    return fs_set;
}

int run_benchmark(const BenchmarkArgs& a) {
    std::vector<std::string> methods;
    {
        std::string cur;
        for (char c : a.methods + ",") {
            if (c == ',') {
                if (!cur.empty()) methods.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
    }
    for (const std::string& m : methods) {
        if (m != "cnn_svm" && m != "raw_svm" && m != "finetuned_cnn") {
            throw ArgumentError("unknown method '" + m +
                                "' (expected cnn_svm, raw_svm, finetuned_cnn)");
        }
    }
    if (a.trials < 1) throw ArgumentError("--trials must be >= 1");

    const Model base = load_model(a.model_path);
    const LabeledChipSet data = load_chipset(a.data_path, base.spec.class_names);
    const std::size_t k = data.class_names.size();

    // per method, per class: sums of defined per-trial values
    struct Sums {
        std::vector<double> precision_sum, recall_sum;
        std::vector<std::size_t> precision_n, recall_n;
    };
    std::map<std::string, Sums> sums;
    for (const std::string& m : methods) {
        sums[m] = Sums{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0),
                       std::vector<std::size_t>(k, 0), std::vector<std::size_t>(k, 0)};
    }

    std::vector<std::vector<CsvValue>> rows;
    for (std::size_t trial = 0; trial < a.trials; ++trial) {
        const std::uint64_t trial_seed = derive_seed(a.seed, trial);
        std::cout << "trial," << trial << ",seed," << trial_seed << "\n";
        const TrainTestSplit split =
            split_per_class(data, a.train_per_class, a.test_per_class, trial_seed);

        for (const std::string& method : methods) {
            ConfusionMatrix cm(data.class_names);
            if (method == "finetuned_cnn") {
                Model tuned = replace_head(base, data.class_names, derive_seed(trial_seed, 2));
                FineTuneConfig cfg = a.ft;
                cfg.seed = derive_seed(trial_seed, 3);
                fine_tune(tuned, subset(data, split.train_indices), cfg);
                for (std::size_t i : split.test_indices) {
                    const ForwardTrace trace = forward(tuned, data.chips[i]);
                    const Tensor& probs = trace.activations.back();
                    std::size_t best = 0;
                    for (std::size_t j = 1; j < probs.numel(); ++j) {
                        if (probs[j] > probs[best]) best = j;
                    }
                    cm.add(data.labels[i], best);
                }
            } else {
                const bool raw = method == "raw_svm";
                const FeatureSet train_fs =
                    features_of(&base, data, split.train_indices, raw);
                const SvmModel svm =
                    train_svm(train_fs, a.c, derive_seed(trial_seed, 1));
                for (std::size_t i : split.test_indices) {
                    const std::vector<double> f =
                        raw ? data.chips[i].data() : extract_features(base, data.chips[i]);
                    cm.add(data.labels[i], classify(svm, f).class_index);
                }
            }
            const PRReport pr = precision_recall(cm);
            Sums& s = sums[method];
            for (std::size_t c = 0; c < k; ++c) {
                rows.push_back(
                    {method, data.class_names[c],
                     pr.per_class[c].precision ? CsvValue(*pr.per_class[c].precision)
                                               : CsvValue(),
                     pr.per_class[c].recall ? CsvValue(*pr.per_class[c].recall) : CsvValue(),
                     static_cast<long long>(trial)});
                if (pr.per_class[c].precision) {
                    s.precision_sum[c] += *pr.per_class[c].precision;
                    s.precision_n[c]++;
                }
                if (pr.per_class[c].recall) {
                    s.recall_sum[c] += *pr.per_class[c].recall;
                    s.recall_n[c]++;
                }
            }
        }
    }

    // trial-averaged per-class rows plus the macro mean row per method
    for (const std::string& method : methods) {
        const Sums& s = sums.at(method);
        double macro_p = 0.0, macro_r = 0.0;
        std::size_t macro_pn = 0, macro_rn = 0;
        for (std::size_t c = 0; c < k; ++c) {
            CsvValue pv, rv;
            if (s.precision_n[c] > 0) {
                const double p = s.precision_sum[c] / static_cast<double>(s.precision_n[c]);
                pv = p;
                macro_p += p;
                macro_pn++;
            }
            if (s.recall_n[c] > 0) {
                const double r = s.recall_sum[c] / static_cast<double>(s.recall_n[c]);
                rv = r;
                macro_r += r;
                macro_rn++;
            }
            rows.push_back({method, data.class_names[c], pv, rv, std::string("mean")});
        }
        rows.push_back({method, std::string("macro"),
                        macro_pn ? CsvValue(macro_p / static_cast<double>(macro_pn))
                                 : CsvValue(),
                        macro_rn ? CsvValue(macro_r / static_cast<double>(macro_rn))
                                 : CsvValue(),
                        std::string("mean")});
    }
    write_results_csv(a.out_path, {"method", "class", "precision", "recall", "trial"}, rows);
    std::cout << "wrote " << a.out_path << "\n";
    return 0;
}

// --- dump-activations -------------------------------------------------------

struct DumpArgs {
    std::string model_path;
    std::string chip_path;
    std::string layers;
    std::string out_dir;
};

int run_dump(const DumpArgs& a) {
    const Model model = load_model(a.model_path);
    const Tensor chip = read_sasr(a.chip_path);
    const std::vector<std::size_t> layers = parse_index_list(a.layers);
    const std::vector<ActivationImage> images = dump_activations(model, chip, layers);
    fs::create_directories(a.out_dir);
    for (const ActivationImage& img : images) {
        char name[48];
        std::snprintf(name, sizeof(name), "layer%02zu_ch%03zu.pgm", img.layer_index,
                      img.channel);
        GrayImage g;
        g.width = img.width;
        g.height = img.height;
        g.pixels = img.pixels;
        write_pgm(g, (fs::path(a.out_dir) / name).string());
    }
    std::cout << "wrote " << images.size() << " channel images to " << a.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sonar ATR toolkit: CNN features, SVM classification, patch detection"};
    app.require_subcommand(1);

    GenDataArgs gd;
    auto* gen_data = app.add_subcommand("gen-data", "generate a synthetic labeled chip set");
    gen_data->add_option("--out", gd.out_dir, "output directory")->required();
    gen_data->add_option("--per-class", gd.per_class, "chips per class");
    gen_data->add_option("--seed", gd.seed, "master seed");
    gen_data->add_option("--chip-size", gd.chip_size, "chip side in pixels");
    gen_data->add_option("--scale", gd.scale, "base target scale");
    gen_data->add_option("--jitter", gd.jitter, "positional jitter amplitude (px)");
    gen_data->add_option("--orient-jitter", gd.orient_jitter, "orientation jitter (deg)");
    gen_data->add_option("--scale-jitter", gd.scale_jitter, "relative scale jitter");
    gen_data->add_option("--speckle", gd.speckle, "background speckle sigma");
    gen_data->add_option("--clutter", gd.clutter, "clutter blobs per 64x64 tile");

    GenSceneArgs gs;
    auto* gen_scene = app.add_subcommand("gen-scene", "generate a synthetic scene");
    gen_scene->add_option("--out", gs.out_path, "output SASR raster")->required();
    gen_scene->add_option("--truth", gs.truth_path, "ground-truth CSV path");
    gen_scene->add_option("--width", gs.width, "scene width");
    gen_scene->add_option("--height", gs.height, "scene height");
    gen_scene->add_option("--target", gs.targets,
                          "placement class:cx:cy[:orientation], repeatable");
    gen_scene->add_option("--clutter", gs.clutter, "clutter blobs per 64x64 tile");
    gen_scene->add_option("--speckle", gs.speckle, "speckle sigma");
    gen_scene->add_option("--seed", gs.seed, "seed");

    FineTuneArgs ft;
    auto* fine_tune_cmd = app.add_subcommand("fine-tune", "train or fine-tune a network");
    fine_tune_cmd->add_option("--config", ft.config_path, "network config JSON (fresh start)");
    fine_tune_cmd->add_option("--model", ft.model_path, "existing model to continue from");
    fine_tune_cmd->add_option("--data", ft.data_path, "training manifest CSV")->required();
    fine_tune_cmd->add_option("--out", ft.out_path, "output model path")->required();
    fine_tune_cmd->add_option("--lr", ft.cfg.learning_rate, "learning rate");
    fine_tune_cmd->add_option("--momentum", ft.cfg.momentum, "momentum");
    fine_tune_cmd->add_option("--epochs", ft.cfg.epochs, "epochs");
    fine_tune_cmd->add_option("--batch", ft.cfg.batch_size, "batch size");
    fine_tune_cmd->add_option("--freeze-depth", ft.cfg.freeze_depth,
                              "layers below this index stay frozen");
    fine_tune_cmd->add_option("--seed", ft.cfg.seed, "training seed");
    fine_tune_cmd->add_option("--init-seed", ft.init_seed, "fresh weight init seed");
    fine_tune_cmd->add_option("--history", ft.history_path, "loss history CSV path");

    ExtractArgs ex;
    auto* extract = app.add_subcommand("extract-features", "write feature vectors as CSV");
    extract->add_option("--model", ex.model_path, "model path");
    extract->add_option("--data", ex.data_path, "manifest CSV")->required();
    extract->add_option("--out", ex.out_path, "output feature CSV")->required();
    extract->add_flag("--raw", ex.raw, "use raw pixels instead of network features");
    extract->add_option("--layer", ex.tap_layer, "feature tap layer index");
    std::uint64_t extract_seed = 0;
    extract->add_option("--seed", extract_seed, "unused, accepted for uniformity");

    TrainSvmArgs ts;
    auto* train_svm_cmd = app.add_subcommand("train-svm", "train a one-vs-rest linear SVM");
    train_svm_cmd->add_option("--features", ts.features_path, "feature CSV")->required();
    train_svm_cmd->add_option("--out", ts.out_path, "output SSVM path")->required();
    train_svm_cmd->add_option("--C", ts.c, "regularization C");
    train_svm_cmd->add_option("--seed", ts.seed, "solver seed");

    ClassifyArgs cl;
    auto* classify_cmd = app.add_subcommand("classify", "classify one chip");
    classify_cmd->add_option("--chip", cl.chip_path, "chip SASR path")->required();
    classify_cmd->add_option("--model", cl.model_path, "model path")->required();
    classify_cmd->add_option("--svm", cl.svm_path, "SVM path")->required();
    classify_cmd->add_option("--layer", cl.tap_layer, "feature tap layer index");
    std::uint64_t classify_seed = 0;
    classify_cmd->add_option("--seed", classify_seed, "unused, accepted for uniformity");

    CorruptArgs co;
    auto* corrupt_cmd = app.add_subcommand("corrupt", "apply Rayleigh speckle");
    corrupt_cmd->add_option("--in", co.in_path, "input raster (PGM or SASR)")->required();
    corrupt_cmd->add_option("--out", co.out_path, "output raster")->required();
    auto* psnr_opt = corrupt_cmd->add_option("--psnr", co.psnr_db, "target PSNR (dB)");
    auto* sigma_opt = corrupt_cmd->add_option("--sigma", co.sigma, "raw speckle sigma");
    corrupt_cmd->add_option("--seed", co.seed, "noise seed");

    DetectArgs de;
    auto* detect_cmd = app.add_subcommand("detect", "scan a scene for targets");
    detect_cmd->add_option("--scene", de.scene_path, "scene SASR path")->required();
    detect_cmd->add_option("--model", de.model_path, "model path")->required();
    detect_cmd->add_option("--svm", de.svm_path, "SVM path")->required();
    detect_cmd->add_option("--tau", de.tau, "normalized score threshold");
    detect_cmd->add_option("--patch", de.patch, "patch size");
    detect_cmd->add_option("--stride", de.stride, "patch stride");
    detect_cmd->add_option("--out", de.out_path, "detection report CSV")->required();
    detect_cmd->add_option("--merge", de.merge_path, "merged region CSV path");
    detect_cmd->add_option("--overlay", de.overlay_path, "overlay PGM path");
    std::uint64_t detect_seed = 0;
    detect_cmd->add_option("--seed", detect_seed, "unused, accepted for uniformity");

    CalibrateArgs ca;
    auto* calibrate_cmd =
        app.add_subcommand("calibrate", "sweep tau on a validation scene");
    calibrate_cmd->add_option("--scene", ca.scene_path, "validation scene")->required();
    calibrate_cmd->add_option("--truth", ca.truth_path, "validation truth CSV")->required();
    calibrate_cmd->add_option("--model", ca.model_path, "model path")->required();
    calibrate_cmd->add_option("--svm", ca.svm_path, "SVM path")->required();
    calibrate_cmd->add_option("--out", ca.out_path, "sweep table CSV path");
    calibrate_cmd->add_option("--tau-min", ca.tau_min, "sweep start");
    calibrate_cmd->add_option("--tau-max", ca.tau_max, "sweep end");
    calibrate_cmd->add_option("--tau-step", ca.tau_step, "sweep step");
    calibrate_cmd->add_option("--patch", ca.patch, "patch size");
    calibrate_cmd->add_option("--stride", ca.stride, "patch stride");
    std::uint64_t calibrate_seed = 0;
    calibrate_cmd->add_option("--seed", calibrate_seed, "unused, accepted for uniformity");

    BenchmarkArgs be;
    auto* benchmark_cmd =
        app.add_subcommand("benchmark", "trial-based recognition benchmark");
    benchmark_cmd->add_option("--data", be.data_path, "dataset manifest CSV")->required();
    benchmark_cmd->add_option("--model", be.model_path, "pretrained model")->required();
    benchmark_cmd->add_option("--out", be.out_path, "results CSV")->required();
    benchmark_cmd->add_option("--trials", be.trials, "number of trials");
    benchmark_cmd->add_option("--train", be.train_per_class, "training chips per class");
    benchmark_cmd->add_option("--test", be.test_per_class, "test chips per class");
    benchmark_cmd->add_option("--methods", be.methods,
                              "comma list of cnn_svm,raw_svm,finetuned_cnn");
    benchmark_cmd->add_option("--C", be.c, "SVM regularization C");
    benchmark_cmd->add_option("--seed", be.seed, "master seed");
    benchmark_cmd->add_option("--ft-epochs", be.ft.epochs, "fine-tune epochs");
    benchmark_cmd->add_option("--ft-lr", be.ft.learning_rate, "fine-tune learning rate");

    DumpArgs du;
    auto* dump_cmd = app.add_subcommand("dump-activations", "render layer activations");
    dump_cmd->add_option("--model", du.model_path, "model path")->required();
    dump_cmd->add_option("--chip", du.chip_path, "input chip SASR")->required();
    dump_cmd->add_option("--layers", du.layers, "comma list of layer indices")->required();
    dump_cmd->add_option("--out", du.out_dir, "output directory")->required();
    std::uint64_t dump_seed = 0;
    dump_cmd->add_option("--seed", dump_seed, "unused, accepted for uniformity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << app.help() << "\n";
        return 1;
    }

    try {
        if (*gen_data) return run_gen_data(gd);
        if (*gen_scene) return run_gen_scene(gs);
        if (*fine_tune_cmd) {
            if (ft.config_path.empty() == ft.model_path.empty()) {
                throw ArgumentError("fine-tune needs exactly one of --config / --model");
            }
            return run_fine_tune(ft);
        }
        if (*extract) {
            if (!ex.raw && ex.model_path.empty()) {
                throw ArgumentError("extract-features needs --model (or --raw)");
            }
            return run_extract(ex);
        }
        if (*train_svm_cmd) return run_train_svm(ts);
        if (*classify_cmd) return run_classify(cl);
        if (*corrupt_cmd) {
            co.have_psnr = psnr_opt->count() > 0;
            co.have_sigma = sigma_opt->count() > 0;
            if (co.have_psnr == co.have_sigma) {
                throw ArgumentError("corrupt needs exactly one of --psnr / --sigma");
            }
            return run_corrupt(co);
        }
        if (*detect_cmd) return run_detect(de);
        if (*calibrate_cmd) return run_calibrate(ca);
        if (*benchmark_cmd) return run_benchmark(be);
        if (*dump_cmd) return run_dump(du);
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
