#include "fixq/scale.hpp"

#include <string>

#include "fixq/errors.hpp"

namespace fixq {

int floor_log2(double x) {
    if (!std::isfinite(x) || x <= 0.0)
        throw ContractError("floor_log2 needs a finite positive value");
    int e = 0;
    std::frexp(x, &e);  // x = m * 2^e, m in [0.5, 1)
    return e - 1;
}

int ceil_log2(double x) {
    if (!std::isfinite(x) || x <= 0.0)
        throw ContractError("ceil_log2 needs a finite positive value");
    int e = 0;
    const double m = std::frexp(x, &e);
    return m == 0.5 ? e - 1 : e;
}

int exponent_of_power_of_two(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw ContractError("alpha must be a finite positive power of two");
    int e = 0;
    if (std::frexp(alpha, &e) != 0.5)
        throw ContractError("alpha must be a power of two, got " + std::to_string(alpha));
    return e - 1;
}

ScaleFactor scale_factor_for_max(double max_abs, double alpha) {
    const int alpha_exp = exponent_of_power_of_two(alpha);
    if (!std::isfinite(max_abs)) throw NumericError("scale_factor: non-finite group maximum");
    if (max_abs == 0.0) return ScaleFactor{0};
    return ScaleFactor{-floor_log2(max_abs) - 1 + alpha_exp};
}

template <std::floating_point T>
void require_finite(std::span<const T> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw NumericError(std::string(what) + ": non-finite value at index " +
                               std::to_string(i));
}

template void require_finite<float>(std::span<const float>, const char*);
template void require_finite<double>(std::span<const double>, const char*);

}  // namespace fixq
