#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "snnkit/encoding.hpp"
#include "snnkit/hwmodel.hpp"
#include "snnkit/network.hpp"
#include "snnkit/trainer.hpp"

namespace snnkit {

// Data/format error carrying the byte offset where parsing failed.
struct ParseError : std::runtime_error {
    size_t offset;
    ParseError(const std::string& msg, size_t at)
        : std::runtime_error(msg + " (byte offset " + std::to_string(at) + ")"), offset(at) {}
};

namespace detail {

inline std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open file for writing: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("short write: " + path);
    }
}

inline void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

inline void put_i16(std::vector<uint8_t>& out, int16_t v) {
    put_u16(out, static_cast<uint16_t>(v));
}

struct ByteReader {
    const std::vector<uint8_t>& bytes;
    size_t pos = 0;

    void need(size_t n, const char* what) const {
        if (pos + n > bytes.size()) {
            throw ParseError(std::string("unexpected end of file reading ") + what, pos);
        }
    }
    uint16_t u16(const char* what) {
        need(2, what);
        uint16_t v = static_cast<uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    int16_t i16(const char* what) { return static_cast<int16_t>(u16(what)); }
};

}  // namespace detail

// --- PGM (P5, maxval 255) ----------------------------------------------------

inline GrayImage load_pgm(const std::string& path) {
    const std::vector<uint8_t> bytes = detail::read_file(path);
    size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&](const char* what) -> int {
        skip_space();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
            throw ParseError(std::string("expected integer for ") + what, pos);
        }
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 20) throw ParseError(std::string("value too large for ") + what, pos);
            ++pos;
        }
        return static_cast<int>(v);
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw ParseError("not a binary PGM (missing P5 magic)", 0);
    }
    pos = 2;
    const int width = read_int("width");
    const int height = read_int("height");
    const int maxval = read_int("maxval");
    if (width <= 0 || height <= 0) {
        throw ParseError("non-positive image dimensions", pos);
    }
    if (maxval != 255) {
        throw ParseError("unsupported maxval " + std::to_string(maxval) + " (want 255)", pos);
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        throw ParseError("expected single whitespace after maxval", pos);
    }
    ++pos;
    const size_t expected = static_cast<size_t>(width) * height;
    if (bytes.size() - pos < expected) {
        throw ParseError("pixel data truncated: expected " + std::to_string(expected) +
                             " bytes, have " + std::to_string(bytes.size() - pos),
                         pos);
    }
    GrayImage img{width, height, {}};
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + expected));
    return img;
}

inline void save_pgm(const std::string& path, const GrayImage& img) {
    std::vector<uint8_t> out;
    const std::string header =
        "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.insert(out.end(), header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    detail::write_file(path, out);
}

// --- SPKT spike-train file ----------------------------------------------------
//
// 16-byte header: magic "SPKT", version u16, reserved u16 (zero), T u32,
// N u32, all little-endian; then ceil(T*N/8) bytes with bit (t, i) at
// linear index t*N + i, LSB-first within each byte.

inline constexpr uint16_t kSpktVersion = 1;

inline std::vector<uint8_t> pack_spike_train(const SpikeTrain& train) {
    std::vector<uint8_t> out;
    out.reserve(16 + (static_cast<size_t>(train.timesteps) * train.neurons + 7) / 8);
    out.insert(out.end(), {'S', 'P', 'K', 'T'});
    detail::put_u16(out, kSpktVersion);
    detail::put_u16(out, 0);
    detail::put_u32(out, train.timesteps);
    detail::put_u32(out, train.neurons);
    const size_t nbits = static_cast<size_t>(train.timesteps) * train.neurons;
    out.resize(16 + (nbits + 7) / 8, 0);
    for (size_t idx = 0; idx < nbits; ++idx) {
        if (train.bits[idx]) {
            out[16 + idx / 8] |= static_cast<uint8_t>(1u << (idx % 8));
        }
    }
    return out;
}

inline void save_spike_train(const std::string& path, const SpikeTrain& train) {
    detail::write_file(path, pack_spike_train(train));
}

inline SpikeTrain unpack_spike_train(const std::vector<uint8_t>& bytes) {
    detail::ByteReader r{bytes};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), "SPKT", 4) != 0) {
        throw ParseError("bad SPKT magic", 0);
    }
    r.pos = 4;
    const uint16_t version = r.u16("version");
    if (version != kSpktVersion) {
        throw ParseError("unsupported SPKT version " + std::to_string(version), 4);
    }
    r.u16("reserved");
    SpikeTrain train;
    train.timesteps = r.u32("timesteps");
    train.neurons = r.u32("neurons");
    if (train.timesteps == 0 || train.neurons == 0) {
        throw ParseError("SPKT with zero dimension", 8);
    }
    const size_t nbits = static_cast<size_t>(train.timesteps) * train.neurons;
    r.need((nbits + 7) / 8, "spike bits");
    train.bits.resize(nbits);
    for (size_t idx = 0; idx < nbits; ++idx) {
        train.bits[idx] = (bytes[r.pos + idx / 8] >> (idx % 8)) & 1;
    }
    return train;
}

inline SpikeTrain load_spike_train(const std::string& path) {
    return unpack_spike_train(detail::read_file(path));
}

// --- SNNW quantized-weight file -------------------------------------------------
//
// Header: magic "SNNW", version u16, layer count u16; per layer rows u32,
// cols u32, then rows*cols Q1.15 raw weights as signed 16-bit little-endian
// (row-major) followed by the rows bias values.

inline constexpr uint16_t kSnnwVersion = 1;

inline std::vector<uint8_t> pack_layers(const std::vector<QuantizedLayer>& layers) {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'S', 'N', 'N', 'W'});
    detail::put_u16(out, kSnnwVersion);
    detail::put_u16(out, static_cast<uint16_t>(layers.size()));
    for (const QuantizedLayer& layer : layers) {
        detail::put_u32(out, static_cast<uint32_t>(layer.out_size));
        detail::put_u32(out, static_cast<uint32_t>(layer.in_size));
        for (int16_t w : layer.weights) detail::put_i16(out, w);
        for (int16_t b : layer.bias) detail::put_i16(out, b);
    }
    return out;
}

inline std::vector<QuantizedLayer> unpack_layers(const std::vector<uint8_t>& bytes) {
    detail::ByteReader r{bytes};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), "SNNW", 4) != 0) {
        throw ParseError("bad SNNW magic", 0);
    }
    r.pos = 4;
    const uint16_t version = r.u16("version");
    if (version != kSnnwVersion) {
        throw ParseError("unsupported SNNW version " + std::to_string(version), 4);
    }
    const uint16_t count = r.u16("layer count");
    std::vector<QuantizedLayer> layers;
    layers.reserve(count);
    for (uint16_t l = 0; l < count; ++l) {
        QuantizedLayer layer;
        layer.out_size = r.u32("rows");
        layer.in_size = r.u32("cols");
        if (layer.out_size == 0 || layer.in_size == 0) {
            throw ParseError("SNNW layer with zero dimension", r.pos);
        }
        layer.weights.resize(layer.out_size * layer.in_size);
        for (int16_t& w : layer.weights) w = r.i16("weight");
        layer.bias.resize(layer.out_size);
        for (int16_t& b : layer.bias) b = r.i16("bias");
        layers.push_back(std::move(layer));
    }
    return layers;
}

inline void save_weights(const std::string& path, const QuantizedNetwork& qnet) {
    detail::write_file(path, pack_layers({qnet.w1, qnet.w2}));
}

// Rebuild a QuantizedNetwork from an SNNW file plus a config (topology in
// the file wins; neuron parameters come from the config).
inline QuantizedNetwork load_weights(const std::string& path, NetworkConfig cfg) {
    std::vector<QuantizedLayer> layers = unpack_layers(detail::read_file(path));
    if (layers.size() != 2) {
        throw ParseError("expected 2 layers, found " + std::to_string(layers.size()), 8);
    }
    if (layers[0].out_size != layers[1].in_size) {
        throw ParseError("layer shape mismatch: hidden " + std::to_string(layers[0].out_size) +
                             " vs " + std::to_string(layers[1].in_size),
                         8);
    }
    cfg.input_size = layers[0].in_size;
    cfg.hidden_size = layers[0].out_size;
    cfg.output_size = layers[1].out_size;

    QuantizedNetwork qnet;
    qnet.config = cfg;
    qnet.w1 = std::move(layers[0]);
    qnet.w2 = std::move(layers[1]);
    auto pack_params = [](const NeuronParams& p) {
        HwNeuronParams h;
        h.beta = quantize(p.beta, q1_15);
        h.threshold = quantize(p.threshold, q1_15);
        h.u_rest = quantize(p.u_rest, q1_15);
        h.refractory_steps = p.refractory_steps;
        return h;
    };
    qnet.hidden = pack_params(cfg.hidden);
    qnet.output = pack_params(cfg.output);
    return qnet;
}

// --- network config JSON --------------------------------------------------------

inline nlohmann::json config_to_json(const NetworkConfig& cfg) {
    return nlohmann::json{
        {"input_size", cfg.input_size},
        {"hidden_size", cfg.hidden_size},
        {"output_size", cfg.output_size},
        {"timesteps", cfg.timesteps},
        {"dropout_rate", cfg.dropout_rate},
        {"refractory_steps", cfg.refractory_steps},
        {"hidden", {{"beta", cfg.hidden.beta}, {"threshold", cfg.hidden.threshold}}},
        {"output", {{"beta", cfg.output.beta}, {"threshold", cfg.output.threshold}}},
        {"u_rest", cfg.hidden.u_rest},
    };
}

inline NetworkConfig config_from_json(const nlohmann::json& j) {
    NetworkConfig cfg;
    cfg.hidden.threshold = 0.5;  // fixed-point-representable default
    cfg.output.threshold = 0.5;
    cfg.input_size = j.value("input_size", cfg.input_size);
    cfg.hidden_size = j.value("hidden_size", cfg.hidden_size);
    cfg.output_size = j.value("output_size", cfg.output_size);
    cfg.timesteps = j.value("timesteps", cfg.timesteps);
    cfg.dropout_rate = j.value("dropout_rate", cfg.dropout_rate);
    cfg.refractory_steps = j.value("refractory_steps", cfg.refractory_steps);
    if (j.contains("hidden")) {
        cfg.hidden.beta = j["hidden"].value("beta", cfg.hidden.beta);
        cfg.hidden.threshold = j["hidden"].value("threshold", cfg.hidden.threshold);
    }
    if (j.contains("output")) {
        cfg.output.beta = j["output"].value("beta", cfg.output.beta);
        cfg.output.threshold = j["output"].value("threshold", cfg.output.threshold);
    }
    const double u_rest = j.value("u_rest", 0.0);
    cfg.hidden.u_rest = u_rest;
    cfg.output.u_rest = u_rest;
    cfg.hidden.refractory_steps = cfg.refractory_steps;
    cfg.output.refractory_steps = cfg.refractory_steps;
    cfg.validate();
    return cfg;
}

inline NetworkConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("config JSON parse error: " + std::string(e.what()), e.byte);
    }
    return config_from_json(j);
}

inline void save_config(const std::string& path, const NetworkConfig& cfg) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open config for writing: " + path);
    }
    out << config_to_json(cfg).dump(2) << "\n";
}

// --- float network JSON ("pre-quantization" interchange) -------------------------

inline nlohmann::json network_to_json(const Network& net) {
    auto layer_json = [](const LayerWeights& layer) {
        nlohmann::json rows = nlohmann::json::array();
        for (size_t o = 0; o < layer.out_size; ++o) {
            nlohmann::json row = nlohmann::json::array();
            for (size_t i = 0; i < layer.in_size; ++i) row.push_back(layer.w(o, i));
            rows.push_back(std::move(row));
        }
        return nlohmann::json{{"weights", std::move(rows)}, {"bias", layer.bias}};
    };
    return nlohmann::json{{"config", config_to_json(net.config)},
                          {"layers", {layer_json(net.w1), layer_json(net.w2)}}};
}

inline Network network_from_json(const nlohmann::json& j) {
    if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].size() != 2) {
        throw std::runtime_error("float network JSON must carry exactly 2 layers");
    }
    NetworkConfig cfg =
        j.contains("config") ? config_from_json(j["config"]) : NetworkConfig{};
    auto parse_layer = [](const nlohmann::json& lj) {
        const auto& rows = lj.at("weights");
        const size_t out = rows.size();
        if (out == 0) throw std::runtime_error("float network layer has no rows");
        const size_t in = rows[0].size();
        LayerWeights layer(out, in);
        for (size_t o = 0; o < out; ++o) {
            if (rows[o].size() != in) {
                throw std::runtime_error("ragged weight matrix in float network JSON");
            }
            for (size_t i = 0; i < in; ++i) layer.w(o, i) = rows[o][i].get<double>();
        }
        const auto& bias = lj.at("bias");
        if (bias.size() != out) {
            throw std::runtime_error("bias length mismatch in float network JSON");
        }
        for (size_t o = 0; o < out; ++o) layer.bias[o] = bias[o].get<double>();
        return layer;
    };
    Network net{cfg, parse_layer(j["layers"][0]), parse_layer(j["layers"][1])};
    net.config.input_size = net.w1.in_size;
    net.config.hidden_size = net.w1.out_size;
    net.config.output_size = net.w2.out_size;
    if (net.w2.in_size != net.w1.out_size) {
        throw std::runtime_error("float network layer shapes do not chain");
    }
    return net;
}

inline Network load_float_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open network: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("network JSON parse error: " + std::string(e.what()), e.byte);
    }
    return network_from_json(j);
}

inline void save_float_network(const std::string& path, const Network& net) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open network for writing: " + path);
    }
    out << network_to_json(net).dump() << "\n";
}

// --- cycle report / metrics emission ------------------------------------------

inline nlohmann::json cycle_report_to_json(const CycleReport& r) {
    return nlohmann::json{{"cycles_per_inference", r.cycles_per_inference},
                          {"ops_total", r.ops_total},
                          {"phases",
                           {{"load", r.phases.load},
                            {"accumulate", r.phases.accumulate},
                            {"neuron_update", r.phases.neuron_update},
                            {"readout", r.phases.readout}}}};
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
    return nlohmann::json{{"frequency_hz", m.frequency_hz},
                          {"power_w", m.power_w},
                          {"gops", m.gops},
                          {"gops_per_watt", m.gops_per_watt},
                          {"latency_s", m.latency_s}};
}

namespace detail {

inline std::string format_number(double v) {
    const double r = std::round(v);
    if (std::abs(v - r) < 5e-3 && std::abs(r) < 1e15) {
        return std::to_string(static_cast<long long>(r));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace detail

// Aligned plain-text table with the standard comparison row labels.
// freq_mhz < 0 prints "-" (direct GOPS/power mode has no frequency).
inline std::string metrics_table(double power_mw, double gops, double freq_mhz,
                                 double gops_per_watt) {
    auto row = [](const std::string& label, const std::string& value) {
        std::string line = label;
        line.resize(28, ' ');
        return line + value + "\n";
    };
    std::string out;
    out += row("Metric", "Value");
    out += row("Power (mW)", detail::format_number(power_mw));
    out += row("Performance (GOPS)", detail::format_number(gops));
    out += row("Frequency (MHz)", freq_mhz < 0 ? "-" : detail::format_number(freq_mhz));
    out += row("Energy Efficiency (GOPS/W)",
               std::to_string(static_cast<long long>(std::llround(gops_per_watt))));
    return out;
}

// --- training curve CSV -----------------------------------------------------------

inline void save_curve_csv(const std::string& path, const std::vector<EpochStats>& curve) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open CSV for writing: " + path);
    }
    out << "epoch,loss,train_acc,test_acc\n";
    for (const EpochStats& e : curve) {
        out << e.epoch << "," << e.loss << "," << e.train_accuracy << "," << e.test_accuracy
            << "\n";
    }
}

}  // namespace snnkit
