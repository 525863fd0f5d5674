#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>

namespace fixq {

/// Power-of-two scaling factor sf = 2^exponent. Scaling a value multiplies
/// by sf; dequantizing divides by it.
struct ScaleFactor {
    int exponent = 0;

    double value() const noexcept { return std::ldexp(1.0, exponent); }
    double scale(double x) const noexcept { return std::ldexp(x, exponent); }
    double unscale(double x) const noexcept { return std::ldexp(x, -exponent); }

    /// Audit storage holds the exponent in 4 signed bits.
    bool fits_audit_range() const noexcept { return exponent >= -8 && exponent <= 7; }

    friend bool operator==(const ScaleFactor&, const ScaleFactor&) = default;
};

/// floor(log2(x)) for finite x > 0, computed exactly from the binary exponent.
int floor_log2(double x);

/// ceil(log2(x)) for finite x > 0, exact.
int ceil_log2(double x);

/// log2(alpha); alpha must be an exact power of two.
int exponent_of_power_of_two(double alpha);

/// Scale factor for a group whose largest magnitude is max_abs:
/// sf = 2^(-floor(log2 max_abs) - 1) * alpha, so max_abs * sf lies in
/// [alpha/2, alpha). A zero maximum yields exponent 0.
ScaleFactor scale_factor_for_max(double max_abs, double alpha);

template <std::floating_point T>
double max_abs(std::span<const T> values) {
    double m = 0.0;
    for (T v : values) m = std::max(m, std::fabs(static_cast<double>(v)));
    return m;
}

/// Throws NumericError on the first non-finite value.
template <std::floating_point T>
void require_finite(std::span<const T> values, const char* what);

template <std::floating_point T>
ScaleFactor scale_factor(std::span<const T> group, double alpha) {
    require_finite(group, "scale_factor");
    return scale_factor_for_max(max_abs(group), alpha);
}

/// round() with ties away from zero, the rounding rule of every quantizer here.
inline double round_half_away(double x) noexcept { return std::round(x); }

}  // namespace fixq
