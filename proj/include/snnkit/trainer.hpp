#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "snnkit/encoding.hpp"
#include "snnkit/network.hpp"
#include "snnkit/rng.hpp"

namespace snnkit {

struct TrainConfig {
    double learning_rate = 5e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 200;
    int batch_size = 32;
    int timesteps = 25;
    double surrogate_slope = 25.0;  // k in 1/(k|x|+1)^2
    uint64_t seed = 1;

    void validate() const {
        if (!(learning_rate >= 0.0)) {
            throw std::invalid_argument("TrainConfig: learning_rate must be non-negative");
        }
        if (epochs < 1) {
            throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        }
        if (batch_size < 1 || timesteps < 1 || !(surrogate_slope > 0.0)) {
            throw std::invalid_argument("TrainConfig: invalid batch/timestep/slope");
        }
    }
};

struct TrainingDiverged : std::runtime_error {
    int epoch;
    explicit TrainingDiverged(int at_epoch)
        : std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(at_epoch)),
          epoch(at_epoch) {}
};

// RNG stream tags so every random draw in the trainer has its own
// counter-based stream derived from the run seed.
namespace streams {
inline constexpr uint64_t labels = 101;
inline constexpr uint64_t shuffle = 202;
inline constexpr uint64_t encode = 303;
inline constexpr uint64_t dropout = 404;
inline constexpr uint64_t eval = 505;
inline constexpr uint64_t images = 606;
}  // namespace streams

// Fast-sigmoid derivative 1/(k|x|+1)^2: even, peaks at 1 for x = 0, decays
// to 0.  Stands in for the spike threshold's derivative during BPTT.
inline double surrogate_grad(double x, double k) {
    if (!(k > 0.0)) {
        throw std::invalid_argument("surrogate_grad: slope must be positive");
    }
    const double d = k * std::abs(x) + 1.0;
    return 1.0 / (d * d);
}

// Primitive whose exact derivative is surrogate_grad; the soft spike mode
// below uses it so gradient checks can compare BPTT against finite
// differences on a genuinely differentiable graph.
inline double surrogate_primal(double x, double k) {
    return x / (k * std::abs(x) + 1.0);
}

// Cross-entropy of softmax(membrane_t) against the label, summed over all
// timesteps.
inline double sequence_loss(const std::vector<std::vector<double>>& membrane_trace, int label) {
    if (membrane_trace.empty()) {
        throw std::invalid_argument("sequence_loss: empty trace");
    }
    double total = 0.0;
    for (const auto& m : membrane_trace) {
        if (label < 0 || static_cast<size_t>(label) >= m.size()) {
            throw std::invalid_argument("sequence_loss: label out of range");
        }
        const double mx = *std::max_element(m.begin(), m.end());
        double z = 0.0;
        for (double v : m) z += std::exp(v - mx);
        total += std::log(z) - (m[label] - mx);
    }
    return total;
}

// Spike nonlinearity used in the unrolled forward: `hard` is the production
// threshold; `soft` swaps in the differentiable fast-sigmoid relaxation and
// exists for gradient verification.
enum class SpikeMode { hard, soft };

struct LossGrad {
    double loss = 0.0;
    LayerWeights g1;  // same shapes as the network layers
    LayerWeights g2;
    std::vector<std::vector<double>> membrane_trace;  // T x output candidates
};

// Unrolled forward + backward through the LIF recurrence.
//
// Forward per step: cand_h = beta*u_h + W1 x + b1, spike via the mode's
// nonlinearity, reset-to-zero gated on the hard threshold; same for the
// output layer.  Loss is cross-entropy over the output candidates.
// Backward treats the reset gate as stop-gradient and routes spike
// gradients through surrogate_grad.  `dropout_scale`, when given, holds a
// T x hidden factor (0 or 1/(1-rate)) applied to hidden spikes.
inline LossGrad loss_and_gradients(const Network& net, const SpikeTrain& input, int label,
                                   double surrogate_slope, SpikeMode mode = SpikeMode::hard,
                                   const std::vector<double>* dropout_scale = nullptr) {
    const NetworkConfig& cfg = net.config;
    if (input.neurons != cfg.input_size) {
        throw std::invalid_argument("loss_and_gradients: input size mismatch");
    }
    const size_t T = input.timesteps;
    const size_t H = cfg.hidden_size;
    const size_t C = cfg.output_size;
    const double beta_h = cfg.hidden.beta;
    const double beta_o = cfg.output.beta;
    const double thr_h = cfg.hidden.threshold;
    const double thr_o = cfg.output.threshold;
    const double k = surrogate_slope;

    // forward storage
    std::vector<double> cand_h(T * H), spike_h(T * H), cand_o(T * C);
    std::vector<uint8_t> reset_h(T * H), reset_o(T * C);

    std::vector<double> u_h(H, 0.0), u_o(C, 0.0);
    LossGrad out;
    out.g1 = LayerWeights(H, cfg.input_size);
    out.g2 = LayerWeights(C, H);
    out.membrane_trace.assign(T, std::vector<double>(C, 0.0));

    for (size_t t = 0; t < T; ++t) {
        const uint8_t* x = input.row(static_cast<uint32_t>(t));
        for (size_t j = 0; j < H; ++j) {
            double acc = net.w1.bias[j];
            const double* wrow = net.w1.weights.data() + j * cfg.input_size;
            for (size_t i = 0; i < cfg.input_size; ++i) {
                if (x[i]) acc += wrow[i];
            }
            const double cand = beta_h * u_h[j] + acc;
            const bool crossed = cand >= thr_h;
            double s = mode == SpikeMode::hard ? (crossed ? 1.0 : 0.0)
                                               : surrogate_primal(cand - thr_h, k);
            if (dropout_scale) s *= (*dropout_scale)[t * H + j];
            cand_h[t * H + j] = cand;
            spike_h[t * H + j] = s;
            reset_h[t * H + j] = crossed ? 1 : 0;
            u_h[j] = crossed ? 0.0 : cand;  // reset gate, stop-gradient
        }
        for (size_t c = 0; c < C; ++c) {
            double acc = net.w2.bias[c];
            const double* wrow = net.w2.weights.data() + c * H;
            for (size_t j = 0; j < H; ++j) acc += wrow[j] * spike_h[t * H + j];
            const double cand = beta_o * u_o[c] + acc;
            const bool crossed = cand >= thr_o;
            cand_o[t * C + c] = cand;
            reset_o[t * C + c] = crossed ? 1 : 0;
            u_o[c] = crossed ? 0.0 : cand;
            out.membrane_trace[t][c] = cand;
        }
    }

    out.loss = sequence_loss(out.membrane_trace, label);

    // backward, t = T-1 .. 0
    std::vector<double> dcand_h_next(H, 0.0), dcand_o_next(C, 0.0);
    std::vector<double> dcand_h(H), dcand_o(C), dspike(H);
    for (size_t t = T; t-- > 0;) {
        const auto& m = out.membrane_trace[t];
        const double mx = *std::max_element(m.begin(), m.end());
        double z = 0.0;
        for (double v : m) z += std::exp(v - mx);
        for (size_t c = 0; c < C; ++c) {
            const double p = std::exp(m[c] - mx) / z;
            dcand_o[c] = p - (static_cast<int>(c) == label ? 1.0 : 0.0);
            if (t + 1 < T) {
                dcand_o[c] += dcand_o_next[c] * beta_o * (reset_o[t * C + c] ? 0.0 : 1.0);
            }
        }
        for (size_t c = 0; c < C; ++c) {
            double* grow = out.g2.weights.data() + c * H;
            for (size_t j = 0; j < H; ++j) grow[j] += dcand_o[c] * spike_h[t * H + j];
            out.g2.bias[c] += dcand_o[c];
        }
        std::fill(dspike.begin(), dspike.end(), 0.0);
        for (size_t c = 0; c < C; ++c) {
            const double* wrow = net.w2.weights.data() + c * H;
            for (size_t j = 0; j < H; ++j) dspike[j] += wrow[j] * dcand_o[c];
        }
        for (size_t j = 0; j < H; ++j) {
            const double drop = dropout_scale ? (*dropout_scale)[t * H + j] : 1.0;
            double d = dspike[j] * drop * surrogate_grad(cand_h[t * H + j] - thr_h, k);
            if (t + 1 < T) {
                d += dcand_h_next[j] * beta_h * (reset_h[t * H + j] ? 0.0 : 1.0);
            }
            dcand_h[j] = d;
        }
        const uint8_t* x = input.row(static_cast<uint32_t>(t));
        for (size_t j = 0; j < H; ++j) {
            double* grow = out.g1.weights.data() + j * cfg.input_size;
            for (size_t i = 0; i < cfg.input_size; ++i) {
                if (x[i]) grow[i] += dcand_h[j];
            }
            out.g1.bias[j] += dcand_h[j];
        }
        dcand_h_next = dcand_h;
        dcand_o_next = dcand_o;
    }
    return out;
}

// --- toy dataset -------------------------------------------------------------

// Two-class 8x8 synthetic set: class 0 puts its intensity mass on the left
// half, class 1 on the right, plus per-pixel noise.  Labels are an exactly
// balanced pool in seeded random order.  First `train_count` samples are
// the training split.
struct ToyDataset {
    std::vector<IntensityGrid> images;
    std::vector<int> labels;
    size_t train_count = 0;

    size_t test_count() const { return images.size() - train_count; }
};

inline ToyDataset make_toy_dataset(uint64_t seed, size_t n_samples) {
    if (n_samples < 2) {
        throw std::invalid_argument("make_toy_dataset: need at least 2 samples");
    }
    constexpr int kSide = 8;
    ToyDataset ds;
    ds.images.reserve(n_samples);
    ds.labels.resize(n_samples);

    // balanced label pool, Fisher-Yates order from the counter generator
    for (size_t s = 0; s < n_samples; ++s) ds.labels[s] = static_cast<int>(s % 2);
    for (size_t s = n_samples - 1; s > 0; --s) {
        const size_t j = counter_hash(seed, streams::labels, s) % (s + 1);
        std::swap(ds.labels[s], ds.labels[j]);
    }

    for (size_t s = 0; s < n_samples; ++s) {
        IntensityGrid g{kSide, kSide, std::vector<double>(kSide * kSide, 0.0)};
        const int label = ds.labels[s];
        const uint64_t image_seed = counter_hash(seed, streams::images, s);
        for (int r = 0; r < kSide; ++r) {
            for (int c = 0; c < kSide; ++c) {
                const bool bright_half = label == 0 ? c < kSide / 2 : c >= kSide / 2;
                const double base = bright_half ? 0.80 : 0.15;
                const double noise =
                    0.30 * (uniform01(image_seed, r, c) - 0.5);
                g.values[static_cast<size_t>(r) * kSide + c] =
                    std::clamp(base + noise, 0.0, 1.0);
            }
        }
        ds.images.push_back(std::move(g));
    }
    ds.train_count = n_samples - n_samples / 5;  // 80/20 split
    return ds;
}

// --- training loop -----------------------------------------------------------

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

struct TrainResult {
    Network net;
    std::vector<EpochStats> curve;
};

namespace detail {

struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_update(std::vector<double>& params, const std::vector<double>& grad,
                        AdamState& state, const TrainConfig& cfg, int step) {
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
    for (size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.adam_beta1 * state.m[i] + (1.0 - cfg.adam_beta1) * grad[i];
        state.v[i] = cfg.adam_beta2 * state.v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
}

// Spike-count readout accuracy on a slice of the dataset, with a fixed
// per-sample encoding seed so the measurement is stable across epochs.
inline double accuracy(const Network& net, const ToyDataset& ds, size_t begin, size_t end,
                       uint64_t eval_seed) {
    if (begin >= end) return 0.0;
    size_t correct = 0;
    for (size_t s = begin; s < end; ++s) {
        const SpikeTrain spikes =
            rate_encode(ds.images[s], static_cast<uint32_t>(net.config.timesteps),
                        counter_hash(eval_seed, streams::eval, s));
        if (forward(net, spikes).prediction == ds.labels[s]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(end - begin);
}

}  // namespace detail

// Surrogate-gradient training with Adam.  Spike trains are re-sampled each
// epoch from the encoder's seed stream; dropout masks (rate from the
// network config) are drawn per sample and timestep.  Single-threaded and
// bit-deterministic for a fixed config.
inline TrainResult train(Network net, const ToyDataset& data, const TrainConfig& cfg) {
    cfg.validate();
    net.config.validate();
    if (data.train_count == 0) {
        throw std::invalid_argument("train: dataset has no training split");
    }
    net.config.timesteps = cfg.timesteps;

    const size_t n_train = data.train_count;
    const double drop_rate = net.config.dropout_rate;
    const size_t H = net.config.hidden_size;

    detail::AdamState mw1(net.w1.weights.size()), mb1(net.w1.bias.size());
    detail::AdamState mw2(net.w2.weights.size()), mb2(net.w2.bias.size());
    int adam_step = 0;

    TrainResult result;
    result.curve.reserve(cfg.epochs);

    std::vector<size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const uint64_t ep = static_cast<uint64_t>(epoch);
        for (size_t s = n_train - 1; s > 0; --s) {
            const size_t j =
                counter_hash(counter_hash(cfg.seed, streams::shuffle, ep), s, 0) % (s + 1);
            std::swap(order[s], order[j]);
        }

        double epoch_loss = 0.0;
        size_t processed = 0;
        while (processed < n_train) {
            const size_t batch_end =
                std::min(processed + static_cast<size_t>(cfg.batch_size), n_train);
            LayerWeights g1(H, net.config.input_size), g2(net.config.output_size, H);
            const double inv_batch = 1.0 / static_cast<double>(batch_end - processed);

            for (size_t b = processed; b < batch_end; ++b) {
                const size_t s = order[b];
                const SpikeTrain spikes = rate_encode(
                    data.images[s], static_cast<uint32_t>(cfg.timesteps),
                    counter_hash(counter_hash(cfg.seed, streams::encode, ep), s, 0));

                std::vector<double> drop;
                const std::vector<double>* drop_ptr = nullptr;
                if (drop_rate > 0.0) {
                    drop.resize(static_cast<size_t>(cfg.timesteps) * H);
                    const double keep_scale = 1.0 / (1.0 - drop_rate);
                    const uint64_t drop_seed =
                        counter_hash(counter_hash(cfg.seed, streams::dropout, ep), s, 0);
                    for (size_t k = 0; k < drop.size(); ++k) {
                        drop[k] = uniform01(drop_seed, k, 0) < drop_rate ? 0.0 : keep_scale;
                    }
                    drop_ptr = &drop;
                }

                LossGrad lg = loss_and_gradients(net, spikes, data.labels[s],
                                                 cfg.surrogate_slope, SpikeMode::hard, drop_ptr);
                if (!std::isfinite(lg.loss)) {
                    throw TrainingDiverged(epoch);
                }
                epoch_loss += lg.loss;
                for (size_t k = 0; k < g1.weights.size(); ++k) {
                    g1.weights[k] += lg.g1.weights[k] * inv_batch;
                }
                for (size_t k = 0; k < g1.bias.size(); ++k) {
                    g1.bias[k] += lg.g1.bias[k] * inv_batch;
                }
                for (size_t k = 0; k < g2.weights.size(); ++k) {
                    g2.weights[k] += lg.g2.weights[k] * inv_batch;
                }
                for (size_t k = 0; k < g2.bias.size(); ++k) {
                    g2.bias[k] += lg.g2.bias[k] * inv_batch;
                }
            }

            ++adam_step;
            detail::adam_update(net.w1.weights, g1.weights, mw1, cfg, adam_step);
            detail::adam_update(net.w1.bias, g1.bias, mb1, cfg, adam_step);
            detail::adam_update(net.w2.weights, g2.weights, mw2, cfg, adam_step);
            detail::adam_update(net.w2.bias, g2.bias, mb2, cfg, adam_step);
            processed = batch_end;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = epoch_loss / static_cast<double>(n_train);
        stats.train_accuracy = detail::accuracy(net, data, 0, n_train, cfg.seed);
        stats.test_accuracy =
            detail::accuracy(net, data, n_train, data.images.size(), cfg.seed);
        result.curve.push_back(stats);
    }

    result.net = std::move(net);
    return result;
}

}  // namespace snnkit
