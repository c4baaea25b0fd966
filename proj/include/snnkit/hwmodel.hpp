#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "snnkit/encoding.hpp"
#include "snnkit/fixedpoint.hpp"
#include "snnkit/network.hpp"

namespace snnkit {

// --- cascaded adder -------------------------------------------------------

// Exact pairwise reduction result in the accumulator format.
struct AdderTreeResult {
    QValue acc{};
    int depth = 0;
};

// Operation counts by category, used to show the synaptic path is
// multiplier-free (the only multiply is beta*u, one per neuron per step).
struct OpCategoryCounts {
    uint64_t additions = 0;
    uint64_t multiplications = 0;
    uint64_t comparisons = 0;
};

struct HwDiagnostics {
    OpCategoryCounts ops{};
    uint64_t narrow_saturations = 0;  // accumulator clamped entering the neuron
    uint64_t arith_saturations = 0;   // saturating add/sub/mul clamped
};

inline int ceil_log2(uint64_t n) {
    if (n <= 1) return 0;
    return 64 - std::countl_zero(n - 1);
}

// Sum of the weights selected by binary spikes, computed as a pairwise
// adder tree in accumulator-width arithmetic.  Every tree node is checked
// against the accumulator range; with Q1.15 weights and fan-in <= 4096 the
// 28-bit Q12.15 accumulator can never overflow, so the result equals the
// integer dot product exactly.
inline AdderTreeResult adder_tree(std::span<const uint8_t> spikes,
                                  std::span<const int16_t> weights,
                                  QFormat weight_fmt = q1_15, QFormat acc_fmt = q12_15,
                                  OpCategoryCounts* ops = nullptr) {
    if (spikes.size() != weights.size()) {
        throw std::invalid_argument("adder_tree: " + std::to_string(spikes.size()) +
                                    " spikes vs " + std::to_string(weights.size()) +
                                    " weights");
    }
    if (spikes.empty()) {
        throw std::invalid_argument("adder_tree: empty input");
    }
    detail::check_format(weight_fmt);
    detail::check_format(acc_fmt);
    if (acc_fmt.frac_bits != weight_fmt.frac_bits || acc_fmt.width() < weight_fmt.width()) {
        throw std::invalid_argument(
            "adder_tree: accumulator format must widen the weight format");
    }

    std::vector<int64_t> nodes(spikes.size());
    for (size_t i = 0; i < spikes.size(); ++i) {
        nodes[i] = spikes[i] ? weights[i] : 0;
    }

    const int64_t lo = acc_fmt.min_raw();
    const int64_t hi = acc_fmt.max_raw();
    int depth = 0;
    while (nodes.size() > 1) {
        size_t out = 0;
        for (size_t i = 0; i + 1 < nodes.size(); i += 2) {
            const int64_t sum = nodes[i] + nodes[i + 1];
            if (sum < lo || sum > hi) {
                throw std::overflow_error("adder_tree: node " + std::to_string(sum) +
                                          " leaves the accumulator range at depth " +
                                          std::to_string(depth + 1));
            }
            if (ops) ++ops->additions;
            nodes[out++] = sum;
        }
        if (nodes.size() % 2 == 1) {
            nodes[out++] = nodes.back();  // odd tail carries up unchanged
        }
        nodes.resize(out);
        ++depth;
    }
    return {QValue{nodes[0], acc_fmt}, depth};
}

// --- neuron hardware unit ---------------------------------------------------

struct HwNeuronState {
    QValue u{0, q1_15};
    int refractory_remaining = 0;
};

struct HwStepResult {
    HwNeuronState state;
    bool spike = false;
    QValue candidate{0, q1_15};
};

// Bias joins after the adder tree in accumulator width; the sum is then
// clamped into the neuron format.  The recurrence is
// u' = beta*u + i - u_rest in saturating Q1.15 arithmetic, with a
// threshold/reset gate and the same refractory semantics as the reference
// neuron (the membrane keeps integrating while firing is suppressed).
inline HwStepResult nhu_step(const AdderTreeResult& acc, QValue bias, HwNeuronState state,
                             const HwNeuronParams& params, HwDiagnostics* diag = nullptr) {
    bool narrow_sat = false;
    bool arith_sat = false;

    const QValue acc_with_bias = sat_add(acc.acc, widen(bias, acc.acc.fmt), &arith_sat);
    const QValue input = narrow_saturating(acc_with_bias, bias.fmt, &narrow_sat);

    const QValue decayed = sat_mul(params.beta, state.u, &arith_sat);
    QValue candidate = sat_add(decayed, input, &arith_sat);
    candidate = sat_sub(candidate, params.u_rest, &arith_sat);

    if (diag) {
        diag->ops.additions += 3;  // bias add, integrate, rest subtract
        diag->ops.multiplications += 1;
        diag->ops.comparisons += 1;
        if (narrow_sat) ++diag->narrow_saturations;
        if (arith_sat) ++diag->arith_saturations;
    }

    HwStepResult r;
    r.candidate = candidate;
    if (state.refractory_remaining > 0) {
        r.spike = false;
        r.state.u = candidate;
        r.state.refractory_remaining = state.refractory_remaining - 1;
        return r;
    }
    r.spike = candidate.raw >= params.threshold.raw;
    if (r.spike) {
        r.state.u = QValue{0, candidate.fmt};
        r.state.refractory_remaining = params.refractory_steps;
    } else {
        r.state.u = candidate;
        r.state.refractory_remaining = 0;
    }
    return r;
}

// --- output memory ----------------------------------------------------------

// Behavioral model of the shift-register output memory: an append-only bit
// queue per output neuron, readout counts ones.
struct ShiftRegisterMemory {
    std::vector<std::vector<uint8_t>> lanes;

    explicit ShiftRegisterMemory(size_t n_lanes = 0) : lanes(n_lanes) {}

    void push(size_t lane, uint8_t bit) { lanes[lane].push_back(bit ? 1 : 0); }

    int count_ones(size_t lane) const {
        int n = 0;
        for (uint8_t b : lanes[lane]) n += b;
        return n;
    }
};

// --- cycle and energy accounting ---------------------------------------------

struct PhaseCycles {
    uint64_t load = 0;
    uint64_t accumulate = 0;
    uint64_t neuron_update = 0;
    uint64_t readout = 0;

    uint64_t total() const { return load + accumulate + neuron_update + readout; }
};

struct CycleReport {
    uint64_t cycles_per_inference = 0;
    uint64_t ops_total = 0;
    PhaseCycles phases{};
};

// Parametric phase model (an estimate, not a device measurement).  Per
// timestep: 1 load cycle; per layer, ceil(out/P) neuron groups each taking
// max(1, ceil(log2 fan_in)) accumulate cycles (the adder-tree depth) plus
// 1 update cycle; 1 readout cycle.
inline CycleReport cycle_model(const NetworkConfig& cfg, int parallel_groups = 1) {
    cfg.validate();
    if (parallel_groups < 1) {
        throw std::invalid_argument("cycle_model: parallel_groups must be >= 1");
    }
    const uint64_t p = static_cast<uint64_t>(parallel_groups);
    auto groups = [p](uint64_t neurons) { return (neurons + p - 1) / p; };
    auto depth_cycles = [](uint64_t fan_in) {
        return static_cast<uint64_t>(std::max(1, ceil_log2(fan_in)));
    };

    const uint64_t hidden_groups = groups(cfg.hidden_size);
    const uint64_t output_groups = groups(cfg.output_size);

    PhaseCycles per_step;
    per_step.load = 1;
    per_step.accumulate = hidden_groups * depth_cycles(cfg.input_size) +
                          output_groups * depth_cycles(cfg.hidden_size);
    per_step.neuron_update = hidden_groups + output_groups;
    per_step.readout = 1;

    const uint64_t t = static_cast<uint64_t>(cfg.timesteps);
    CycleReport report;
    report.phases = {per_step.load * t, per_step.accumulate * t, per_step.neuron_update * t,
                     per_step.readout * t};
    report.cycles_per_inference = report.phases.total();
    report.ops_total = count_ops(cfg).total;
    return report;
}

struct Metrics {
    double frequency_hz = 0.0;
    double power_w = 0.0;
    double gops = 0.0;
    double gops_per_watt = 0.0;
    double latency_s = 0.0;
};

inline Metrics compute_metrics(const CycleReport& report, double frequency_hz, double power_w) {
    if (!(frequency_hz > 0.0)) {
        throw std::invalid_argument("compute_metrics: frequency must be positive");
    }
    if (!(power_w > 0.0)) {
        throw std::invalid_argument("compute_metrics: power must be positive");
    }
    Metrics m;
    m.frequency_hz = frequency_hz;
    m.power_w = power_w;
    m.latency_s = static_cast<double>(report.cycles_per_inference) / frequency_hz;
    m.gops = static_cast<double>(report.ops_total) / m.latency_s / 1e9;
    m.gops_per_watt = m.gops / power_w;
    return m;
}

// --- full datapath ----------------------------------------------------------

struct HwStepTrace {
    std::vector<int64_t> hidden_u;  // raw Q1.15 candidates
    std::vector<int64_t> output_u;
    std::vector<uint8_t> hidden_spikes;
    std::vector<uint8_t> output_spikes;
};

struct HwForwardResult {
    std::vector<int> spike_counts;
    int prediction = 0;
    CycleReport report{};
    HwDiagnostics diagnostics{};
    std::vector<HwStepTrace> trace;
};

// Bit-accurate emulation of the datapath: per timestep, every hidden
// neuron's current comes from an adder tree over the binary input row, the
// neuron unit updates in Q1.15, hidden spikes feed the output layer's adder
// trees, and output spikes append to the shift-register memory.  The final
// comparator is spike-count argmax with ties to the lowest class.
inline HwForwardResult hw_forward(const QuantizedNetwork& qnet, const SpikeTrain& spikes,
                                  bool record_trace = false) {
    const NetworkConfig& cfg = qnet.config;
    cfg.validate();
    if (spikes.neurons != cfg.input_size) {
        throw std::invalid_argument(
            "hw_forward: spike train has " + std::to_string(spikes.neurons) +
            " neurons, network expects " + std::to_string(cfg.input_size));
    }
    if (static_cast<int>(spikes.timesteps) != cfg.timesteps) {
        throw std::invalid_argument(
            "hw_forward: spike train has " + std::to_string(spikes.timesteps) +
            " timesteps, network expects " + std::to_string(cfg.timesteps));
    }

    HwNeuronParams hidden_params = qnet.hidden;
    HwNeuronParams output_params = qnet.output;
    hidden_params.refractory_steps = cfg.refractory_steps;
    output_params.refractory_steps = cfg.refractory_steps;

    HwForwardResult result;
    result.spike_counts.assign(cfg.output_size, 0);

    std::vector<HwNeuronState> hidden_state(cfg.hidden_size);
    std::vector<HwNeuronState> output_state(cfg.output_size);
    std::vector<uint8_t> hidden_spikes(cfg.hidden_size, 0);
    ShiftRegisterMemory output_memory(cfg.output_size);

    for (uint32_t t = 0; t < spikes.timesteps; ++t) {
        HwStepTrace step;
        if (record_trace) {
            step.hidden_u.resize(cfg.hidden_size);
            step.hidden_spikes.resize(cfg.hidden_size);
            step.output_u.resize(cfg.output_size);
            step.output_spikes.resize(cfg.output_size);
        }

        std::span<const uint8_t> in_row{spikes.row(t), cfg.input_size};
        for (size_t o = 0; o < cfg.hidden_size; ++o) {
            std::span<const int16_t> wrow{qnet.w1.weights.data() + o * cfg.input_size,
                                          cfg.input_size};
            AdderTreeResult acc =
                adder_tree(in_row, wrow, q1_15, q12_15, &result.diagnostics.ops);
            HwStepResult r = nhu_step(acc, QValue{qnet.w1.bias[o], q1_15}, hidden_state[o],
                                      hidden_params, &result.diagnostics);
            hidden_state[o] = r.state;
            hidden_spikes[o] = r.spike ? 1 : 0;
            if (record_trace) {
                step.hidden_u[o] = r.candidate.raw;
                step.hidden_spikes[o] = hidden_spikes[o];
            }
        }

        std::span<const uint8_t> hidden_row{hidden_spikes.data(), cfg.hidden_size};
        for (size_t o = 0; o < cfg.output_size; ++o) {
            std::span<const int16_t> wrow{qnet.w2.weights.data() + o * cfg.hidden_size,
                                          cfg.hidden_size};
            AdderTreeResult acc =
                adder_tree(hidden_row, wrow, q1_15, q12_15, &result.diagnostics.ops);
            HwStepResult r = nhu_step(acc, QValue{qnet.w2.bias[o], q1_15}, output_state[o],
                                      output_params, &result.diagnostics);
            output_state[o] = r.state;
            output_memory.push(o, r.spike ? 1 : 0);
            if (record_trace) {
                step.output_u[o] = r.candidate.raw;
                step.output_spikes[o] = r.spike ? 1 : 0;
            }
        }
        if (record_trace) result.trace.push_back(std::move(step));
    }

    for (size_t o = 0; o < cfg.output_size; ++o) {
        result.spike_counts[o] = output_memory.count_ones(o);
    }
    result.prediction = argmax_lowest(result.spike_counts);
    result.report = cycle_model(cfg);
    return result;
}

}  // namespace snnkit
