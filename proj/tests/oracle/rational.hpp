#pragma once

// Exact-rational reference for quantized layers: decoded operands are
// converted to rationals and the textbook convolution formulas are evaluated
// without rounding.

#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "fixq/act_quant.hpp"

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational exact(double v) {
    if (v == 0.0) return Rational(0);
    int e = 0;
    const double m = std::frexp(v, &e);
    const auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
    e -= 53;
    Rational r{BigInt(mant)};
    if (e >= 0) return r * Rational(BigInt(1) << e);
    return r / Rational(BigInt(1) << -e);
}

inline std::vector<Rational> exact(const std::vector<double>& v) {
    std::vector<Rational> out;
    out.reserve(v.size());
    for (double x : v) out.push_back(exact(x));
    return out;
}

struct Dims {
    std::int64_t H, W, C;       // input
    std::int64_t KH, KW, O;     // kernel
    std::int64_t stride, pad;
    std::int64_t output_padding;  // transposed only
};

// out[oy][ox][o] = sum x[oy*s - p + kh][ox*s - p + kw][c] * w[c][kh][kw][o]
inline std::vector<Rational> conv(const std::vector<Rational>& x, const std::vector<Rational>& w, const Dims& d,
                                  std::int64_t& OH, std::int64_t& OW) {
    OH = (d.H + 2 * d.pad - d.KH) / d.stride + 1;
    OW = (d.W + 2 * d.pad - d.KW) / d.stride + 1;
    std::vector<Rational> out(static_cast<std::size_t>(OH * OW * d.O));
    for (std::int64_t oy = 0; oy < OH; ++oy)
        for (std::int64_t ox = 0; ox < OW; ++ox)
            for (std::int64_t o = 0; o < d.O; ++o) {
                Rational acc = 0;
                for (std::int64_t c = 0; c < d.C; ++c)
                    for (std::int64_t kh = 0; kh < d.KH; ++kh)
                        for (std::int64_t kw = 0; kw < d.KW; ++kw) {
                            const std::int64_t iy = oy * d.stride - d.pad + kh, ix = ox * d.stride - d.pad + kw;
                            if (iy < 0 || iy >= d.H || ix < 0 || ix >= d.W) continue;
                            const auto& xv = x[static_cast<std::size_t>((iy * d.W + ix) * d.C + c)];
                            if (xv == 0) continue;
                            acc += xv * w[static_cast<std::size_t>(((c * d.KH + kh) * d.KW + kw) * d.O + o)];
                        }
                out[static_cast<std::size_t>((oy * OW + ox) * d.O + o)] = acc;
            }
    return out;
}

// Scatter form: every input pixel adds its kernel footprint at
// (iy*s - p + kh, ix*s - p + kw).
inline std::vector<Rational> conv_transpose(const std::vector<Rational>& x, const std::vector<Rational>& w,
                                            const Dims& d, std::int64_t& OH, std::int64_t& OW) {
    OH = (d.H - 1) * d.stride - 2 * d.pad + d.KH + d.output_padding;
    OW = (d.W - 1) * d.stride - 2 * d.pad + d.KW + d.output_padding;
    std::vector<Rational> out(static_cast<std::size_t>(OH * OW * d.O));
    for (std::int64_t iy = 0; iy < d.H; ++iy)
        for (std::int64_t ix = 0; ix < d.W; ++ix)
            for (std::int64_t c = 0; c < d.C; ++c) {
                const auto& xv = x[static_cast<std::size_t>((iy * d.W + ix) * d.C + c)];
                if (xv == 0) continue;
                for (std::int64_t kh = 0; kh < d.KH; ++kh)
                    for (std::int64_t kw = 0; kw < d.KW; ++kw) {
                        const std::int64_t oy = iy * d.stride - d.pad + kh, ox = ix * d.stride - d.pad + kw;
                        if (oy < 0 || oy >= OH || ox < 0 || ox >= OW) continue;
                        for (std::int64_t o = 0; o < d.O; ++o)
                            out[static_cast<std::size_t>((oy * OW + ox) * d.O + o)] +=
                                xv * w[static_cast<std::size_t>(((c * d.KH + kh) * d.KW + kw) * d.O + o)];
                    }
            }
    return out;
}

inline void activate(std::vector<Rational>& v, fixq::ActivationKind k) {
    for (auto& x : v) {
        if (x >= 0) continue;
        if (k == fixq::ActivationKind::ReLU) x = 0;
        if (k == fixq::ActivationKind::LeakyReLU) x /= 8;
    }
}

inline double to_double(const Rational& r) { return static_cast<double>(r); }

}  // namespace oracle
