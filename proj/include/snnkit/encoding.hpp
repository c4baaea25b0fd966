#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "snnkit/rng.hpp"

namespace snnkit {

// Row-major 8-bit grayscale image.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;

    uint8_t at(int row, int col) const { return pixels[static_cast<size_t>(row) * width + col]; }
};

// Per-pixel intensities in [0, 1], row-major.
struct IntensityGrid {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    size_t size() const { return values.size(); }
};

// T x N binary spike tensor.  Bit (t, i) lives at linear index t*neurons + i,
// i.e. neuron index = row*width + col of the source grid.
struct SpikeTrain {
    uint32_t timesteps = 0;
    uint32_t neurons = 0;
    std::vector<uint8_t> bits;  // 0/1 per entry
    uint64_t seed = 0;

    uint8_t at(uint32_t t, uint32_t i) const {
        return bits[static_cast<size_t>(t) * neurons + i];
    }
    uint8_t& at(uint32_t t, uint32_t i) {
        return bits[static_cast<size_t>(t) * neurons + i];
    }
    const uint8_t* row(uint32_t t) const {
        return bits.data() + static_cast<size_t>(t) * neurons;
    }
};

inline IntensityGrid normalize_image(const GrayImage& img) {
    if (img.width <= 0 || img.height <= 0 || img.pixels.empty()) {
        throw std::invalid_argument("normalize_image: empty image");
    }
    IntensityGrid grid{img.width, img.height, {}};
    grid.values.reserve(img.pixels.size());
    for (uint8_t p : img.pixels) {
        grid.values.push_back(static_cast<double>(p) / 255.0);
    }
    return grid;
}

// Bernoulli rate coding: each (timestep, pixel) entry is an independent draw
// with success probability equal to the pixel intensity.  Bits come from the
// counter generator keyed (seed, pixel, timestep), so the result is
// bit-identical regardless of evaluation order.
inline SpikeTrain rate_encode(const IntensityGrid& grid, uint32_t timesteps, uint64_t seed) {
    if (timesteps == 0) {
        throw std::invalid_argument("rate_encode: timesteps must be >= 1");
    }
    const size_t n = grid.size();
    if (n == 0) {
        throw std::invalid_argument("rate_encode: empty intensity grid");
    }
    for (double v : grid.values) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("rate_encode: intensity " + std::to_string(v) +
                                        " outside [0, 1]");
        }
    }
    SpikeTrain train{timesteps, static_cast<uint32_t>(n), {}, seed};
    train.bits.resize(static_cast<size_t>(timesteps) * n);
    for (uint32_t t = 0; t < timesteps; ++t) {
        for (size_t i = 0; i < n; ++i) {
            const double u = uniform01(seed, i, t);
            train.bits[static_cast<size_t>(t) * n + i] = u < grid.values[i] ? 1 : 0;
        }
    }
    return train;
}

// Empirical firing rate per neuron: ones in the column divided by T.
inline std::vector<double> spike_rate(const SpikeTrain& train) {
    std::vector<double> rates(train.neurons, 0.0);
    if (train.timesteps == 0) return rates;
    for (uint32_t t = 0; t < train.timesteps; ++t) {
        for (uint32_t i = 0; i < train.neurons; ++i) {
            rates[i] += train.at(t, i);
        }
    }
    for (double& r : rates) r /= train.timesteps;
    return rates;
}

// Nearest-neighbor downscale/upscale used by the CLI for inputs that do not
// match the network's input grid.
inline GrayImage resize_nearest(const GrayImage& img, int new_width, int new_height) {
    if (img.width <= 0 || img.height <= 0) {
        throw std::invalid_argument("resize_nearest: empty image");
    }
    if (new_width <= 0 || new_height <= 0) {
        throw std::invalid_argument("resize_nearest: target size must be positive");
    }
    GrayImage out{new_width, new_height, {}};
    out.pixels.resize(static_cast<size_t>(new_width) * new_height);
    for (int r = 0; r < new_height; ++r) {
        const int src_r = static_cast<int>((static_cast<int64_t>(r) * img.height) / new_height);
        for (int c = 0; c < new_width; ++c) {
            const int src_c = static_cast<int>((static_cast<int64_t>(c) * img.width) / new_width);
            out.pixels[static_cast<size_t>(r) * new_width + c] = img.at(src_r, src_c);
        }
    }
    return out;
}

}  // namespace snnkit
