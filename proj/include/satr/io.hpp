#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "satr/error.hpp"
#include "satr/network.hpp"
#include "satr/tensor.hpp"

namespace satr {

// ---------------------------------------------------------------------------
// Little-endian byte stream primitives shared by all binary formats.
// ---------------------------------------------------------------------------

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v & 0xFF));
        u8(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
    }
    void bytes(const void* p, std::size_t n) {
        buf_.append(static_cast<const char*>(p), n);
    }
    void str(const std::string& s) { buf_.append(s); }

    const std::string& buffer() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(const std::string& data, std::string what)
        : data_(data), what_(std::move(what)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }
    std::uint16_t u16() {
        std::uint16_t lo = u8(), hi = u8();
        return static_cast<std::uint16_t>(lo | (hi << 8));
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(u8()) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool exhausted() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > data_.size()) {
            throw TruncatedFileError(what_ + ": truncated (need " + std::to_string(n) +
                                     " bytes at offset " + std::to_string(pos_) + ")");
        }
    }
    const std::string& data_;
    std::string what_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// NetworkSpec <-> JSON. Unknown or missing kind-specific keys are rejected.
// ---------------------------------------------------------------------------

inline nlohmann::json spec_to_json(const NetworkSpec& spec) {
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerSpec& l : spec.layers) {
        nlohmann::json j;
        j["kind"] = layer_kind_name(l.kind);
        switch (l.kind) {
            case LayerKind::conv:
                j["out_channels"] = l.out_channels;
                j["kernel"] = l.kernel;
                j["stride"] = l.stride;
                j["pad"] = l.pad;
                break;
            case LayerKind::maxpool:
                j["window"] = l.window;
                j["stride"] = l.stride;
                break;
            case LayerKind::dense:
                j["width"] = l.width;
                break;
            default:
                break;
        }
        layers.push_back(std::move(j));
    }
    return nlohmann::json{{"input_shape", spec.input_shape},
                          {"class_names", spec.class_names},
                          {"layers", layers}};
}

inline NetworkSpec spec_from_json(const nlohmann::json& j) {
    NetworkSpec spec;
    try {
        spec.input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
        spec.class_names = j.at("class_names").get<std::vector<std::string>>();
        for (const auto& lj : j.at("layers")) {
            const std::string kind = lj.at("kind").get<std::string>();
            LayerSpec l;
            std::size_t expected_keys = 1;
            if (kind == "conv") {
                l = LayerSpec::Conv(lj.at("out_channels").get<std::size_t>(),
                                    lj.at("kernel").get<std::size_t>(),
                                    lj.at("stride").get<std::size_t>(),
                                    lj.at("pad").get<std::size_t>());
                expected_keys = 5;
            } else if (kind == "relu") {
                l = LayerSpec::Relu();
            } else if (kind == "maxpool") {
                l = LayerSpec::MaxPool(lj.at("window").get<std::size_t>(),
                                       lj.at("stride").get<std::size_t>());
                expected_keys = 3;
            } else if (kind == "flatten") {
                l = LayerSpec::Flatten();
            } else if (kind == "dense") {
                l = LayerSpec::Dense(lj.at("width").get<std::size_t>());
                expected_keys = 2;
            } else if (kind == "softmax") {
                l = LayerSpec::Softmax();
            } else {
                throw FormatError("unknown layer kind '" + kind + "'");
            }
            if (lj.size() != expected_keys) {
                throw FormatError("layer of kind '" + kind +
                                  "' carries unexpected parameters");
            }
            spec.layers.push_back(l);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad network spec JSON: ") + e.what());
    }
    shape_chain(spec);  // validates chaining and the head rule
    return spec;
}

inline NetworkSpec load_network_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("cannot parse network config " + path + ": " + e.what());
    }
    return spec_from_json(j);
}

// ---------------------------------------------------------------------------
// Model file "SATR": magic, version u16, spec length u32, JSON spec,
// block count u32, then per block: layer_index u32, name (u8 length +
// bytes), rank u8, dims u32 each, values f32 little-endian.
// ---------------------------------------------------------------------------

constexpr std::uint16_t kModelFormatVersion = 1;

inline std::string serialize_model(const Model& model) {
    validate_weights(model.spec, model.weights);
    ByteWriter w;
    w.str("SATR");
    w.u16(kModelFormatVersion);
    const std::string spec_json = spec_to_json(model.spec).dump();
    w.u32(static_cast<std::uint32_t>(spec_json.size()));
    w.str(spec_json);
    w.u32(static_cast<std::uint32_t>(model.weights.blocks.size()));
    for (const ParamBlock& b : model.weights.blocks) {
        w.u32(static_cast<std::uint32_t>(b.layer_index));
        w.u8(static_cast<std::uint8_t>(b.name.size()));
        w.str(b.name);
        w.u8(static_cast<std::uint8_t>(b.shape.size()));
        for (std::size_t d : b.shape) w.u32(static_cast<std::uint32_t>(d));
        for (double v : b.values) w.f32(static_cast<float>(v));
    }
    return w.buffer();
}

inline Model deserialize_model(const std::string& data, const std::string& what) {
    ByteReader r(data, what);
    if (r.bytes(4) != "SATR") throw BadMagicError(what + ": bad magic, not a model file");
    const std::uint16_t version = r.u16();
    if (version != kModelFormatVersion) {
        throw VersionError(what + ": unsupported format version " + std::to_string(version));
    }
    const std::uint32_t spec_len = r.u32();
    const std::string spec_json = r.bytes(spec_len);
    NetworkSpec spec;
    try {
        spec = spec_from_json(nlohmann::json::parse(spec_json));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(what + ": embedded spec is not valid JSON: " + e.what());
    }
    WeightStore store;
    const std::uint32_t n_blocks = r.u32();
    for (std::uint32_t i = 0; i < n_blocks; ++i) {
        ParamBlock b;
        b.layer_index = r.u32();
        const std::uint8_t name_len = r.u8();
        b.name = r.bytes(name_len);
        const std::uint8_t rank = r.u8();
        for (std::uint8_t d = 0; d < rank; ++d) b.shape.push_back(r.u32());
        const std::size_t n = b.numel();
        b.values.reserve(n);
        for (std::size_t v = 0; v < n; ++v) b.values.push_back(static_cast<double>(r.f32()));
        store.blocks.push_back(std::move(b));
    }
    if (!r.exhausted()) throw FormatError(what + ": trailing bytes after last block");
    validate_weights(spec, store);
    return Model{std::move(spec), std::move(store)};
}

inline void save_model(const Model& model, const std::string& path) {
    write_file(path, serialize_model(model));
}

inline Model load_model(const std::string& path) {
    return deserialize_model(read_file(path), path);
}

// ---------------------------------------------------------------------------
// 8-bit grayscale rasters (binary PGM, P5, maxval 255) and real-valued
// rasters ("SASR": magic, u32 width, u32 height, f32 values row-major).
// ---------------------------------------------------------------------------

struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major
};

inline std::string serialize_pgm(const GrayImage& img) {
    if (img.pixels.size() != img.width * img.height) {
        throw DimensionError("pgm: pixel count does not match width*height");
    }
    std::string out = "P5\n" + std::to_string(img.width) + " " +
                      std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    return out;
}

inline void write_pgm(const GrayImage& img, const std::string& path) {
    write_file(path, serialize_pgm(img));
}

namespace detail {

inline std::size_t pgm_token(const std::string& data, std::size_t& pos,
                             const std::string& what) {
    // skip whitespace and '#' comments
    while (pos < data.size()) {
        const char c = data[pos];
        if (c == '#') {
            while (pos < data.size() && data[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++pos;
        } else {
            break;
        }
    }
    if (pos >= data.size() || data[pos] < '0' || data[pos] > '9') {
        throw FormatError(what + ": malformed PGM header");
    }
    std::size_t value = 0;
    while (pos < data.size() && data[pos] >= '0' && data[pos] <= '9') {
        value = value * 10 + static_cast<std::size_t>(data[pos] - '0');
        ++pos;
    }
    return value;
}

}  // namespace detail

inline GrayImage parse_pgm(const std::string& data, const std::string& what) {
    if (data.size() < 2 || data[0] != 'P' || data[1] != '5') {
        throw FormatError(what + ": not a binary PGM (P5) file");
    }
    std::size_t pos = 2;
    GrayImage img;
    img.width = detail::pgm_token(data, pos, what);
    img.height = detail::pgm_token(data, pos, what);
    const std::size_t maxval = detail::pgm_token(data, pos, what);
    if (maxval != 255) {
        throw FormatError(what + ": unsupported PGM depth (maxval " +
                          std::to_string(maxval) + ", only 255 supported)");
    }
    if (pos >= data.size()) throw TruncatedFileError(what + ": missing raster data");
    ++pos;  // single whitespace after maxval
    const std::size_t n = img.width * img.height;
    if (data.size() - pos < n) {
        throw TruncatedFileError(what + ": raster holds " + std::to_string(data.size() - pos) +
                                 " bytes, expected " + std::to_string(n));
    }
    img.pixels.resize(n);
    std::memcpy(img.pixels.data(), data.data() + pos, n);
    return img;
}

inline GrayImage read_pgm(const std::string& path) {
    return parse_pgm(read_file(path), path);
}

inline std::string serialize_sasr(const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 1) {
        throw DimensionError("sasr: image must be [1,H,W], got " + shape_str(image.shape()));
    }
    ByteWriter w;
    w.str("SASR");
    w.u32(static_cast<std::uint32_t>(image.dim(2)));
    w.u32(static_cast<std::uint32_t>(image.dim(1)));
    for (double v : image.data()) w.f32(static_cast<float>(v));
    return w.buffer();
}

inline void write_sasr(const Tensor& image, const std::string& path) {
    write_file(path, serialize_sasr(image));
}

inline Tensor parse_sasr(const std::string& data, const std::string& what) {
    ByteReader r(data, what);
    if (r.bytes(4) != "SASR") throw BadMagicError(what + ": bad magic, not a SASR raster");
    const std::size_t width = r.u32();
    const std::size_t height = r.u32();
    if (width < 1 || height < 1) throw FormatError(what + ": zero-sized raster");
    std::vector<double> values;
    values.reserve(width * height);
    for (std::size_t i = 0; i < width * height; ++i) {
        const float v = r.f32();
        if (!std::isfinite(v) || v < 0.0f) {
            throw FormatError(what + ": raster value at index " + std::to_string(i) +
                              " is not finite nonnegative");
        }
        values.push_back(static_cast<double>(v));
    }
    if (!r.exhausted()) throw FormatError(what + ": trailing bytes after raster");
    return Tensor({1, height, width}, std::move(values));
}

inline Tensor read_sasr(const std::string& path) {
    return parse_sasr(read_file(path), path);
}

/// [1,H,W] tensor on [0,1] mapped to 8-bit gray (clipped, rounded).
inline GrayImage tensor_to_gray(const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 1) {
        throw DimensionError("tensor_to_gray: image must be [1,H,W]");
    }
    GrayImage img;
    img.height = image.dim(1);
    img.width = image.dim(2);
    img.pixels.reserve(image.numel());
    for (double v : image.data()) {
        const double clipped = std::min(1.0, std::max(0.0, v));
        img.pixels.push_back(static_cast<std::uint8_t>(std::lround(clipped * 255.0)));
    }
    return img;
}

inline Tensor gray_to_tensor(const GrayImage& img) {
    std::vector<double> values;
    values.reserve(img.pixels.size());
    for (std::uint8_t p : img.pixels) values.push_back(static_cast<double>(p) / 255.0);
    return Tensor({1, img.height, img.width}, std::move(values));
}

// ---------------------------------------------------------------------------
// Results CSV: UTF-8, header row, LF endings, reals fixed to 6 decimals.
// An empty cell stands for an undefined metric.
// ---------------------------------------------------------------------------

using CsvValue = std::variant<std::monostate, std::string, long long, double>;

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    return out + "\"";
}

inline std::string format_csv_value(const CsvValue& v) {
    if (std::holds_alternative<std::monostate>(v)) return "";
    if (std::holds_alternative<std::string>(v)) return csv_escape(std::get<std::string>(v));
    if (std::holds_alternative<long long>(v)) return std::to_string(std::get<long long>(v));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", std::get<double>(v));
    return buf;
}

inline std::string render_results_csv(const std::vector<std::string>& header,
                                      const std::vector<std::vector<CsvValue>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ",";
        out += csv_escape(header[i]);
    }
    out += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += format_csv_value(row[i]);
        }
        out += "\n";
    }
    return out;
}

inline void write_results_csv(const std::string& path, const std::vector<std::string>& header,
                              const std::vector<std::vector<CsvValue>>& rows) {
    write_file(path, render_results_csv(header, rows));
}

/// Minimal CSV reader for the toolkit's own files (quoted fields allowed).
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    if (!field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Feature vectors as CSV. Values use %.17g so doubles round-trip exactly;
// the 6-decimal rule applies to results tables only.
// ---------------------------------------------------------------------------

inline void write_feature_csv(const std::string& path,
                              const std::vector<std::vector<double>>& features,
                              const std::vector<std::string>& labels) {
    if (features.size() != labels.size()) {
        throw ArgumentError("feature/label count mismatch");
    }
    std::string out = "label";
    const std::size_t dim = features.empty() ? 0 : features[0].size();
    for (std::size_t i = 0; i < dim; ++i) out += ",f" + std::to_string(i);
    out += "\n";
    char buf[40];
    for (std::size_t r = 0; r < features.size(); ++r) {
        out += csv_escape(labels[r]);
        for (double v : features[r]) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out += ",";
            out += buf;
        }
        out += "\n";
    }
    write_file(path, out);
}

inline void read_feature_csv(const std::string& path,
                             std::vector<std::vector<double>>& features,
                             std::vector<std::string>& labels) {
    const auto rows = parse_csv(read_file(path));
    if (rows.empty()) throw FormatError(path + ": empty feature file");
    features.clear();
    labels.clear();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) {
            throw FormatError(path + ": row " + std::to_string(r) +
                              " has inconsistent column count");
        }
        labels.push_back(rows[r][0]);
        std::vector<double> f;
        for (std::size_t c = 1; c < rows[r].size(); ++c) {
            try {
                f.push_back(std::stod(rows[r][c]));
            } catch (const std::exception&) {
                throw FormatError(path + ": row " + std::to_string(r) +
                                  " holds a non-numeric feature value");
            }
        }
        features.push_back(std::move(f));
    }
}

}  // namespace satr
