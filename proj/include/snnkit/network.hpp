#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "snnkit/encoding.hpp"
#include "snnkit/fixedpoint.hpp"
#include "snnkit/neuron.hpp"
#include "snnkit/rng.hpp"

namespace snnkit {

// Fully connected topology: flatten -> linear -> LIF hidden -> linear ->
// LIF output, run over `timesteps` steps with spike-count readout.
struct NetworkConfig {
    size_t input_size = 4096;  // 64x64 pixels
    size_t hidden_size = 512;
    size_t output_size = 2;
    int timesteps = 25;
    double dropout_rate = 0.25;  // hidden spikes, training only
    int refractory_steps = 0;    // applied to both LIF layers when > 0
    NeuronParams hidden{};
    NeuronParams output{};

    void validate() const {
        if (input_size < 1 || hidden_size < 1 || output_size < 1) {
            throw std::invalid_argument("NetworkConfig: layer sizes must be >= 1");
        }
        if (timesteps < 1) {
            throw std::invalid_argument("NetworkConfig: timesteps must be >= 1");
        }
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
            throw std::invalid_argument("NetworkConfig: dropout_rate must be in [0, 1)");
        }
        if (refractory_steps < 0) {
            throw std::invalid_argument("NetworkConfig: refractory_steps must be >= 0");
        }
    }
};

// Dense layer, weights row-major [out][in].
struct LayerWeights {
    size_t out_size = 0;
    size_t in_size = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    LayerWeights() = default;
    LayerWeights(size_t out, size_t in)
        : out_size(out), in_size(in), weights(out * in, 0.0), bias(out, 0.0) {}

    double& w(size_t o, size_t i) { return weights[o * in_size + i]; }
    double w(size_t o, size_t i) const { return weights[o * in_size + i]; }
};

struct Network {
    NetworkConfig config;
    LayerWeights w1;  // input -> hidden
    LayerWeights w2;  // hidden -> output
};

// Uniform init in +-1/sqrt(fan_in), deterministic per seed.
inline Network random_network(const NetworkConfig& cfg, uint64_t seed) {
    cfg.validate();
    Network net{cfg, LayerWeights(cfg.hidden_size, cfg.input_size),
                LayerWeights(cfg.output_size, cfg.hidden_size)};
    auto fill = [&](LayerWeights& layer, uint64_t stream) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_size));
        for (size_t k = 0; k < layer.weights.size(); ++k) {
            layer.weights[k] = bound * (2.0 * uniform01(seed, stream, k) - 1.0);
        }
        for (size_t k = 0; k < layer.bias.size(); ++k) {
            layer.bias[k] = bound * (2.0 * uniform01(seed, stream + 1, k) - 1.0);
        }
    };
    fill(net.w1, 0x10);
    fill(net.w2, 0x20);
    return net;
}

struct StepTrace {
    std::vector<double> hidden_u;  // pre-reset candidates
    std::vector<double> output_u;
    std::vector<uint8_t> hidden_spikes;
    std::vector<uint8_t> output_spikes;
};

struct ForwardResult {
    std::vector<int> spike_counts;
    int prediction = 0;
    std::vector<StepTrace> trace;  // filled only when requested
};

inline int argmax_lowest(const std::vector<int>& counts) {
    int best = 0;
    for (size_t i = 1; i < counts.size(); ++i) {
        if (counts[i] > counts[best]) best = static_cast<int>(i);
    }
    return best;
}

// Reference forward pass.  Spikes drive the first linear layer directly
// (binary rows select weight columns); both LIF layers honor the
// network-level refractory setting.  Ties in the readout go to the lowest
// class index.
inline ForwardResult forward(const Network& net, const SpikeTrain& spikes,
                             bool record_trace = false) {
    const NetworkConfig& cfg = net.config;
    cfg.validate();
    if (spikes.neurons != cfg.input_size) {
        throw std::invalid_argument(
            "forward: spike train has " + std::to_string(spikes.neurons) +
            " neurons, network expects " + std::to_string(cfg.input_size));
    }
    if (static_cast<int>(spikes.timesteps) != cfg.timesteps) {
        throw std::invalid_argument(
            "forward: spike train has " + std::to_string(spikes.timesteps) +
            " timesteps, network expects " + std::to_string(cfg.timesteps));
    }

    NeuronParams hidden_params = cfg.hidden;
    NeuronParams output_params = cfg.output;
    hidden_params.refractory_steps = cfg.refractory_steps;
    output_params.refractory_steps = cfg.refractory_steps;

    std::vector<NeuronState> hidden_state(cfg.hidden_size);
    std::vector<NeuronState> output_state(cfg.output_size);
    std::vector<uint8_t> hidden_spikes(cfg.hidden_size, 0);
    std::vector<double> current(std::max(cfg.hidden_size, cfg.output_size), 0.0);

    ForwardResult result;
    result.spike_counts.assign(cfg.output_size, 0);
    if (record_trace) result.trace.reserve(spikes.timesteps);

    for (uint32_t t = 0; t < spikes.timesteps; ++t) {
        const uint8_t* in_row = spikes.row(t);
        StepTrace step;
        if (record_trace) {
            step.hidden_u.resize(cfg.hidden_size);
            step.hidden_spikes.resize(cfg.hidden_size);
            step.output_u.resize(cfg.output_size);
            step.output_spikes.resize(cfg.output_size);
        }

        for (size_t o = 0; o < cfg.hidden_size; ++o) {
            double acc = net.w1.bias[o];
            const double* wrow = net.w1.weights.data() + o * cfg.input_size;
            for (size_t i = 0; i < cfg.input_size; ++i) {
                if (in_row[i]) acc += wrow[i];
            }
            StepResult r = apply_refractory(lif_step, hidden_state[o], acc, hidden_params);
            hidden_state[o] = r.state;
            hidden_spikes[o] = r.spike ? 1 : 0;
            if (record_trace) {
                step.hidden_u[o] = r.candidate;
                step.hidden_spikes[o] = hidden_spikes[o];
            }
        }

        for (size_t o = 0; o < cfg.output_size; ++o) {
            double acc = net.w2.bias[o];
            const double* wrow = net.w2.weights.data() + o * cfg.hidden_size;
            for (size_t i = 0; i < cfg.hidden_size; ++i) {
                if (hidden_spikes[i]) acc += wrow[i];
            }
            StepResult r = apply_refractory(lif_step, output_state[o], acc, output_params);
            output_state[o] = r.state;
            if (r.spike) ++result.spike_counts[o];
            if (record_trace) {
                step.output_u[o] = r.candidate;
                step.output_spikes[o] = r.spike ? 1 : 0;
            }
        }
        if (record_trace) result.trace.push_back(std::move(step));
    }

    result.prediction = argmax_lowest(result.spike_counts);
    return result;
}

// Fixed-point mirror of a layer: Q1.15 raw weights/biases, row-major.
struct QuantizedLayer {
    size_t out_size = 0;
    size_t in_size = 0;
    std::vector<int16_t> weights;
    std::vector<int16_t> bias;
};

struct HwNeuronParams {
    QValue beta{};
    QValue threshold{};
    QValue u_rest{};
    int refractory_steps = 0;
};

struct QuantizedNetwork {
    NetworkConfig config;
    QuantizedLayer w1;
    QuantizedLayer w2;
    HwNeuronParams hidden{};
    HwNeuronParams output{};
};

struct QuantizeReport {
    size_t saturated = 0;  // values outside [-1, 1 - 2^-15]
    size_t total = 0;
};

namespace detail {

inline int16_t quantize_q15(double v, QuantizeReport& report) {
    bool sat = false;
    QValue q = quantize(v, q1_15, &sat);
    ++report.total;
    if (sat) ++report.saturated;
    return static_cast<int16_t>(q.raw);
}

inline QuantizedLayer quantize_layer(const LayerWeights& layer, QuantizeReport& report) {
    QuantizedLayer q{layer.out_size, layer.in_size, {}, {}};
    q.weights.reserve(layer.weights.size());
    q.bias.reserve(layer.bias.size());
    for (double v : layer.weights) q.weights.push_back(quantize_q15(v, report));
    for (double v : layer.bias) q.bias.push_back(quantize_q15(v, report));
    return q;
}

}  // namespace detail

// Q1.15 conversion of every weight, bias, and neuron parameter.  Values
// outside the representable range saturate; the report carries the count.
inline QuantizedNetwork quantize_network(const Network& net, QuantizeReport* report = nullptr) {
    QuantizeReport local{};
    QuantizedNetwork q;
    q.config = net.config;
    q.w1 = detail::quantize_layer(net.w1, local);
    q.w2 = detail::quantize_layer(net.w2, local);
    auto quantize_params = [&](const NeuronParams& p) {
        HwNeuronParams h;
        h.beta = quantize(p.beta, q1_15);
        h.threshold = quantize(p.threshold, q1_15);
        h.u_rest = quantize(p.u_rest, q1_15);
        h.refractory_steps = p.refractory_steps;
        return h;
    };
    q.hidden = quantize_params(net.config.hidden);
    q.output = quantize_params(net.config.output);
    if (report) *report = local;
    return q;
}

// Convert back to a float network carrying the dequantized values; used by
// the float-vs-hardware comparisons.
inline Network dequantize_network(const QuantizedNetwork& qnet) {
    Network net{qnet.config, LayerWeights(qnet.w1.out_size, qnet.w1.in_size),
                LayerWeights(qnet.w2.out_size, qnet.w2.in_size)};
    auto fill = [](const QuantizedLayer& q, LayerWeights& layer) {
        for (size_t k = 0; k < q.weights.size(); ++k) {
            layer.weights[k] = dequantize(QValue{q.weights[k], q1_15});
        }
        for (size_t k = 0; k < q.bias.size(); ++k) {
            layer.bias[k] = dequantize(QValue{q.bias[k], q1_15});
        }
    };
    fill(qnet.w1, net.w1);
    fill(qnet.w2, net.w2);
    net.config.hidden.beta = dequantize(qnet.hidden.beta);
    net.config.hidden.threshold = dequantize(qnet.hidden.threshold);
    net.config.hidden.u_rest = dequantize(qnet.hidden.u_rest);
    net.config.output.beta = dequantize(qnet.output.beta);
    net.config.output.threshold = dequantize(qnet.output.threshold);
    net.config.output.u_rest = dequantize(qnet.output.u_rest);
    return net;
}

// Operation counts under the documented convention: one synaptic
// accumulate = 1 op, one neuron update = 1 op.
struct OpCounts {
    uint64_t synaptic_per_step = 0;
    uint64_t neuron_per_step = 0;
    uint64_t synaptic_total = 0;
    uint64_t neuron_total = 0;
    uint64_t total = 0;
};

inline OpCounts count_ops(const NetworkConfig& cfg) {
    OpCounts c;
    c.synaptic_per_step = static_cast<uint64_t>(cfg.input_size) * cfg.hidden_size +
                          static_cast<uint64_t>(cfg.hidden_size) * cfg.output_size;
    c.neuron_per_step = cfg.hidden_size + cfg.output_size;
    c.synaptic_total = c.synaptic_per_step * cfg.timesteps;
    c.neuron_total = c.neuron_per_step * cfg.timesteps;
    c.total = c.synaptic_total + c.neuron_total;
    return c;
}

}  // namespace snnkit
