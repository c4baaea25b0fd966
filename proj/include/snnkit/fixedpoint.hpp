#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace snnkit {

// Signed fixed-point format: 1 sign bit + int_bits + frac_bits, two's
// complement, total width in [2, 64].  Q1.15 (int_bits 0, frac_bits 15)
// is the network number format; Q12.15 (width 28) is the accumulator
// format sized so that 4096 Q1.15 terms sum without overflow.
struct QFormat {
    int int_bits = 0;
    int frac_bits = 0;

    constexpr int width() const { return 1 + int_bits + frac_bits; }

    constexpr int64_t max_raw() const {
        return static_cast<int64_t>((uint64_t{1} << (width() - 1)) - 1);
    }
    constexpr int64_t min_raw() const { return -max_raw() - 1; }

    constexpr bool valid() const {
        return int_bits >= 0 && frac_bits >= 0 && width() >= 2 && width() <= 64;
    }

    constexpr bool operator==(const QFormat&) const = default;
};

inline constexpr QFormat q1_15{0, 15};
inline constexpr QFormat q12_15{12, 15};
inline constexpr QFormat q1_7{0, 7};

// Raw two's-complement integer plus its format.  Real value is
// raw * 2^-frac_bits.  Immutable value type; all operations below are
// pure and saturating, never wrapping.
struct QValue {
    int64_t raw = 0;
    QFormat fmt{};
};

namespace detail {

inline void check_format(QFormat fmt) {
    if (!fmt.valid()) {
        throw std::invalid_argument("QFormat out of range: width " +
                                    std::to_string(fmt.width()) +
                                    " not in [2, 64]");
    }
}

inline void check_same_format(QFormat a, QFormat b, const char* op) {
    if (!(a == b)) {
        throw std::invalid_argument(std::string(op) + ": format mismatch Q" +
                                    std::to_string(a.int_bits) + "." +
                                    std::to_string(a.frac_bits) + " vs Q" +
                                    std::to_string(b.int_bits) + "." +
                                    std::to_string(b.frac_bits));
    }
}

inline int64_t clamp_raw(__int128 v, QFormat fmt, bool* saturated = nullptr) {
    const __int128 lo = fmt.min_raw();
    const __int128 hi = fmt.max_raw();
    if (v > hi) {
        if (saturated) *saturated = true;
        return fmt.max_raw();
    }
    if (v < lo) {
        if (saturated) *saturated = true;
        return fmt.min_raw();
    }
    return static_cast<int64_t>(v);
}

// Arithmetic shift right with round-to-nearest, ties away from zero.
inline __int128 shift_round_ties_away(__int128 v, int shift) {
    if (shift == 0) return v;
    const __int128 half = __int128{1} << (shift - 1);
    if (v >= 0) return (v + half) >> shift;
    return -((-v + half) >> shift);
}

}  // namespace detail

// Nearest representable value, ties away from zero; out-of-range input
// saturates to the format limits.  Saturation engages only when the
// rounded raw value would leave the range.
inline QValue quantize(double x, QFormat fmt, bool* saturated = nullptr) {
    detail::check_format(fmt);
    if (!std::isfinite(x)) {
        throw std::invalid_argument("quantize: input must be finite");
    }
    const long double scaled =
        static_cast<long double>(x) * std::exp2l(static_cast<long double>(fmt.frac_bits));
    if (scaled >= static_cast<long double>(fmt.max_raw()) + 0.5L) {
        if (saturated) *saturated = true;
        return {fmt.max_raw(), fmt};
    }
    if (scaled <= static_cast<long double>(fmt.min_raw()) - 0.5L) {
        if (saturated) *saturated = true;
        return {fmt.min_raw(), fmt};
    }
    return {static_cast<int64_t>(llroundl(scaled)), fmt};
}

inline double dequantize(QValue q) {
    return std::ldexp(static_cast<double>(q.raw), -q.fmt.frac_bits);
}

inline QValue sat_add(QValue a, QValue b, bool* saturated = nullptr) {
    detail::check_same_format(a.fmt, b.fmt, "sat_add");
    const __int128 sum = static_cast<__int128>(a.raw) + b.raw;
    return {detail::clamp_raw(sum, a.fmt, saturated), a.fmt};
}

inline QValue sat_sub(QValue a, QValue b, bool* saturated = nullptr) {
    detail::check_same_format(a.fmt, b.fmt, "sat_sub");
    const __int128 diff = static_cast<__int128>(a.raw) - b.raw;
    return {detail::clamp_raw(diff, a.fmt, saturated), a.fmt};
}

// Product rescaled back into the shared format: (a.raw * b.raw) >> frac_bits
// with round-to-nearest ties away on the dropped bits, then clamp.
inline QValue sat_mul(QValue a, QValue b, bool* saturated = nullptr) {
    detail::check_same_format(a.fmt, b.fmt, "sat_mul");
    const __int128 prod = static_cast<__int128>(a.raw) * b.raw;
    const __int128 scaled = detail::shift_round_ties_away(prod, a.fmt.frac_bits);
    return {detail::clamp_raw(scaled, a.fmt, saturated), a.fmt};
}

// Sign-extend into a wider format with the same fractional resolution.
// Value-preserving by construction.
inline QValue widen(QValue q, QFormat acc_fmt) {
    detail::check_format(acc_fmt);
    if (acc_fmt.frac_bits != q.fmt.frac_bits) {
        throw std::invalid_argument("widen: fractional bit count must match");
    }
    if (acc_fmt.width() < q.fmt.width()) {
        throw std::invalid_argument("widen: target narrower than source");
    }
    return {q.raw, acc_fmt};
}

// Clamp an accumulator value into a narrower format with the same
// fractional resolution.
inline QValue narrow_saturating(QValue acc, QFormat fmt, bool* saturated = nullptr) {
    detail::check_format(fmt);
    if (fmt.frac_bits != acc.fmt.frac_bits) {
        throw std::invalid_argument("narrow_saturating: fractional bit count must match");
    }
    return {detail::clamp_raw(acc.raw, fmt, saturated), fmt};
}

}  // namespace snnkit
