#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "snnkit/fixedpoint.hpp"

using namespace snnkit;

TEST_CASE("quantize basics in Q1.15") {
    CHECK(quantize(0.0, q1_15).raw == 0);
    CHECK(quantize(0.5, q1_15).raw == 16384);
    CHECK(quantize(2.0, q1_15).raw == 32767);   // saturates, never wraps
    CHECK(quantize(-2.0, q1_15).raw == -32768);
    CHECK(quantize(1.0, q1_15).raw == 32767);   // +1.0 unrepresentable
    CHECK(quantize(-1.0, q1_15).raw == -32768);
}

TEST_CASE("quantize in Q1.7") {
    CHECK(quantize(0.9921875, q1_7).raw == 127);  // top of the Q1.7 range
    CHECK(quantize(-1.0, q1_7).raw == -128);
    CHECK(quantize(0.5, q1_7).raw == 64);
}

TEST_CASE("quantize rejects non-finite input") {
    CHECK_THROWS_AS(quantize(std::nan(""), q1_15), std::invalid_argument);
    CHECK_THROWS_AS(quantize(INFINITY, q1_15), std::invalid_argument);
}

TEST_CASE("quantize rounds to nearest, ties away from zero") {
    // 1.5 ulp of Q1.7: 1.5/128
    CHECK(quantize(1.5 / 128.0, q1_7).raw == 2);
    CHECK(quantize(-1.5 / 128.0, q1_7).raw == -2);
    CHECK(quantize(0.4 / 128.0, q1_7).raw == 0);
    CHECK(quantize(0.6 / 128.0, q1_7).raw == 1);
}

TEST_CASE("quantize saturation flag engages only past the rounding boundary") {
    bool sat = false;
    quantize(0.99996, q1_15, &sat);  // rounds to 32767 in range
    CHECK_FALSE(sat);
    quantize(1.2, q1_15, &sat);
    CHECK(sat);
}

TEST_CASE("invalid formats are rejected") {
    CHECK_THROWS_AS(quantize(0.0, QFormat{0, 0}), std::invalid_argument);   // width 1
    CHECK_THROWS_AS(quantize(0.0, QFormat{64, 15}), std::invalid_argument); // width > 64
    CHECK_NOTHROW(quantize(0.0, QFormat{0, 1}));                            // width 2 ok
}

TEST_CASE("dequantize") {
    CHECK(dequantize({16384, q1_15}) == 0.5);
    CHECK(dequantize({-32768, q1_15}) == -1.0);
    CHECK(dequantize({1, q1_15}) == std::ldexp(1.0, -15));
}

TEST_CASE("round trip is exact on the grid") {
    for (int64_t raw : {-32768L, -12345L, -1L, 0L, 1L, 16384L, 32767L}) {
        const double v = dequantize({raw, q1_15});
        CHECK(quantize(v, q1_15).raw == raw);
    }
}

TEST_CASE("sat_add") {
    const QValue a = quantize(0.25, q1_15);
    CHECK(dequantize(sat_add(a, a)) == 0.5);
    CHECK(sat_add(quantize(0.9, q1_15), quantize(0.9, q1_15)).raw == 32767);
    CHECK(sat_add(quantize(-0.9, q1_15), quantize(-0.9, q1_15)).raw == -32768);
    CHECK(sat_add(a, quantize(0.0, q1_15)).raw == a.raw);
    CHECK_THROWS_AS(sat_add(a, quantize(0.25, q1_7)), std::invalid_argument);
}

TEST_CASE("sat_mul") {
    CHECK(dequantize(sat_mul(quantize(0.5, q1_15), quantize(0.5, q1_15))) == 0.25);
    CHECK(sat_mul(quantize(0.7, q1_15), quantize(0.0, q1_15)).raw == 0);
    // -1 * -1 = +1 is unrepresentable: saturates to the max
    bool sat = false;
    CHECK(sat_mul(quantize(-1.0, q1_15), quantize(-1.0, q1_15), &sat).raw == 32767);
    CHECK(sat);
    CHECK_THROWS_AS(sat_mul(quantize(0.5, q1_15), quantize(0.5, q1_7)),
                    std::invalid_argument);
}

TEST_CASE("sat_mul rounds the discarded bits ties-away") {
    // raw 3 * raw 16384 = 49152 -> product >> 15 = 1.5 -> ties away -> 2
    const QValue r = sat_mul({3, q1_15}, {16384, q1_15});
    CHECK(r.raw == 2);
    const QValue rn = sat_mul({-3, q1_15}, {16384, q1_15});
    CHECK(rn.raw == -2);
}

TEST_CASE("sat_sub mirrors sat_add") {
    CHECK(dequantize(sat_sub(quantize(0.5, q1_15), quantize(0.25, q1_15))) == 0.25);
    CHECK(sat_sub(quantize(-0.9, q1_15), quantize(0.9, q1_15)).raw == -32768);
}

TEST_CASE("widen preserves value") {
    const QValue q = quantize(0.5, q1_15);
    const QValue w = widen(q, q12_15);
    CHECK(w.raw == 16384);
    CHECK(w.fmt == q12_15);
    CHECK(dequantize(w) == dequantize(q));
    CHECK(widen({-32768, q1_15}, q12_15).raw == -32768);
    CHECK_THROWS_AS(widen({0, q12_15}, q1_15), std::invalid_argument);  // narrower target
    CHECK_THROWS_AS(widen({0, q1_15}, QFormat{12, 8}), std::invalid_argument);  // frac mismatch
}

TEST_CASE("narrow_saturating") {
    CHECK(narrow_saturating(quantize(3.75, q12_15), q1_15).raw == 32767);
    CHECK(narrow_saturating(quantize(-7.0, q12_15), q1_15).raw == -32768);
    CHECK(dequantize(narrow_saturating(quantize(0.25, q12_15), q1_15)) == 0.25);
    CHECK_THROWS_AS(narrow_saturating({0, q12_15}, QFormat{0, 8}), std::invalid_argument);
}

TEST_CASE("quantization error is at most half an ulp inside the range") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const double half_ulp = std::ldexp(1.0, -16);
    for (int i = 0; i < 20000; ++i) {
        const double x = dist(rng);
        const double clamped =
            std::clamp(x, dequantize({q1_15.min_raw(), q1_15}), dequantize({q1_15.max_raw(), q1_15}));
        CHECK(std::abs(dequantize(quantize(x, q1_15)) - clamped) <= half_ulp);
    }
}

TEST_CASE("sat_add is commutative and monotone") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int64_t> raws(q1_15.min_raw(), q1_15.max_raw());
    for (int i = 0; i < 20000; ++i) {
        const QValue a{raws(rng), q1_15}, b{raws(rng), q1_15}, c{raws(rng), q1_15};
        CHECK(sat_add(a, b).raw == sat_add(b, a).raw);
        if (b.raw <= c.raw) {
            CHECK(sat_add(a, b).raw <= sat_add(a, c).raw);
        }
    }
}

TEST_CASE("multiplying a non-negative value by the largest sub-one constant never grows it") {
    const QValue near_one{q1_15.max_raw(), q1_15};  // 1 - 2^-15
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int64_t> raws(0, q1_15.max_raw());
    for (int i = 0; i < 20000; ++i) {
        const QValue x{raws(rng), q1_15};
        CHECK(sat_mul(x, near_one).raw <= x.raw);
    }
}

TEST_CASE("no operation escapes the format range: exhaustive narrow formats") {
    for (QFormat fmt : {QFormat{0, 4}, QFormat{2, 2}, QFormat{4, 0}, QFormat{1, 6}, QFormat{0, 7}}) {
        for (int64_t a = fmt.min_raw(); a <= fmt.max_raw(); ++a) {
            for (int64_t b = fmt.min_raw(); b <= fmt.max_raw(); ++b) {
                const QValue qa{a, fmt}, qb{b, fmt};
                for (const QValue r : {sat_add(qa, qb), sat_sub(qa, qb), sat_mul(qa, qb)}) {
                    REQUIRE(r.raw >= fmt.min_raw());
                    REQUIRE(r.raw <= fmt.max_raw());
                }
            }
        }
    }
}

TEST_CASE("no operation escapes the format range: randomized wide formats") {
    std::mt19937_64 rng(13);
    for (QFormat fmt : {QFormat{12, 15}, QFormat{0, 31}, QFormat{30, 30}, QFormat{0, 63}}) {
        std::uniform_int_distribution<int64_t> raws(fmt.min_raw(), fmt.max_raw());
        for (int i = 0; i < 5000; ++i) {
            const QValue qa{raws(rng), fmt}, qb{raws(rng), fmt};
            for (const QValue r : {sat_add(qa, qb), sat_sub(qa, qb), sat_mul(qa, qb)}) {
                REQUIRE(r.raw >= fmt.min_raw());
                REQUIRE(r.raw <= fmt.max_raw());
            }
        }
    }
}
