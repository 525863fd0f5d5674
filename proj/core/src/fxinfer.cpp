#include "fixq/fxinfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "fixq/catalog.hpp"
#include "fixq/errors.hpp"
#include "fixq/parallel.hpp"
#include "fixq/scale.hpp"

namespace fixq {

std::string_view to_string(LayerKind k) { return k == LayerKind::Conv ? "conv" : "conv_transpose"; }

LayerKind layer_kind_from_string(std::string_view s) {
    if (s == "conv") return LayerKind::Conv;
    if (s == "conv_transpose" || s == "deconv") return LayerKind::ConvTranspose;
    throw ContractError("unknown layer kind '" + std::string(s) + "'");
}

void LayerSpec::validate() const {
    if (stride < 1) throw ContractError("stride must be >= 1");
    if (padding < 0) throw ContractError("padding must be >= 0");
    if (kind == LayerKind::ConvTranspose && effective_output_padding() >= stride)
        throw ContractError("output padding must be smaller than the stride");
}

std::int64_t output_extent(std::int64_t in, std::int64_t kernel, const LayerSpec& spec) {
    if (spec.kind == LayerKind::Conv) {
        const std::int64_t span = in + 2 * spec.padding - kernel;
        if (span < 0) throw ContractError("kernel larger than padded input");
        return span / spec.stride + 1;
    }
    const std::int64_t out = (in - 1) * spec.stride - 2 * spec.padding + kernel + spec.effective_output_padding();
    if (out < 1) throw ContractError("transposed convolution yields an empty output");
    return out;
}

double FixedOutput::value(std::size_t flat) const {
    return std::ldexp(static_cast<double>(acc[flat]), exponent[flat % exponent.size()]);
}

std::vector<double> FixedOutput::values() const {
    std::vector<double> v(acc.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = value(i);
    return v;
}

Tensor FixedOutput::to_tensor() const {
    std::vector<float> data(acc.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(value(i));
    return Tensor(shape, {Axis::OH, Axis::OW, Axis::O}, std::move(data));
}

FixedOperand fixed_operand(const QuantizedTensor& q) {
    q.validate();
    if (q.codebook_id == codebook_ids::kLloydLut)
        throw ContractError("lookup-table tensors have no fixed-point grid");
    if (q.mean) throw ContractError("mean-coded tensors cannot feed a fixed-point layer");
    FixedOperand op;
    op.mantissa.resize(q.size());
    op.exponent.resize(q.group_count());
    std::vector<int> precision(q.group_count());
    for (std::size_t g = 0; g < q.group_count(); ++g) {
        precision[g] = codebook_for_group(q, g).finest_precision();
        op.exponent[g] = -(precision[g] + q.sf(g).exponent);
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
        const std::size_t g = q.group_index(i);
        op.mantissa[i] = static_cast<std::int32_t>(std::ldexp(codebook_for_group(q, g).decode(q.levels[i]), precision[g]));
    }
    return op;
}

namespace {

std::string position(std::int64_t y, std::int64_t x, std::int64_t o) {
    return "(" + std::to_string(y) + ", " + std::to_string(x) + ", " + std::to_string(o) + ")";
}

std::int32_t checked_shift(std::int32_t v, int shift, const char* what) {
    if (v == 0) return 0;
    if (shift > 31) throw NumericError(std::string("overflow aligning ") + what);
    const std::int64_t r = static_cast<std::int64_t>(v) * (std::int64_t{1} << shift);
    if (r > std::numeric_limits<std::int32_t>::max() || r < std::numeric_limits<std::int32_t>::min())
        throw NumericError(std::string("overflow aligning ") + what);
    return static_cast<std::int32_t>(r);
}

// Stride-1 or strided convolution over an integer grid with explicit
// asymmetric padding; `flip` reverses the kernel's spatial axes.
struct IntConv {
    std::int64_t H, W, C, KH, KW, O, OH, OW;
    std::int64_t stride, pad_top, pad_left;
    bool flip;
};

}  // namespace

FixedOutput forward_quantized(const QuantizedTensor& xq, const QuantizedTensor& wq, const LayerSpec& spec,
                              std::span<const double> bias) {
    spec.validate();
    if (xq.roles != std::vector<Axis>{Axis::OH, Axis::OW, Axis::O})
        throw ContractError("layer input must be an (OH,OW,O) tensor");
    if (wq.roles != std::vector<Axis>{Axis::I, Axis::H, Axis::W, Axis::O})
        throw ContractError("layer weights must be an (I,H,W,O) tensor");
    if (xq.shape[2] != wq.shape[0])
        throw ContractError("input has " + std::to_string(xq.shape[2]) + " channels, weights expect " +
                            std::to_string(wq.shape[0]));
    if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != wq.shape[3])
        throw ContractError("bias length does not match output channels");

    const FixedOperand x = fixed_operand(xq);
    const FixedOperand w = fixed_operand(wq);

    const std::int64_t H = xq.shape[0], W = xq.shape[1], C = xq.shape[2];
    const std::int64_t KH = wq.shape[1], KW = wq.shape[2], O = wq.shape[3];
    const std::int64_t OH = output_extent(H, KH, spec), OW = output_extent(W, KW, spec);

    // Align every input channel onto the finest input exponent.
    const int emin = x.exponent.size() == 1 ? x.exponent[0] : *std::min_element(x.exponent.begin(), x.exponent.end());
    auto x_exp = [&](std::int64_t c) { return x.exponent[x.exponent.size() == 1 ? 0 : static_cast<std::size_t>(c)]; };

    // Materialize the (possibly zero-inserted) integer input.
    IntConv g{};
    std::int64_t GH = H, GW = W;
    if (spec.kind == LayerKind::Conv) {
        g = {H, W, C, KH, KW, O, OH, OW, spec.stride, spec.padding, spec.padding, false};
    } else {
        if (spec.padding > KH - 1 || spec.padding > KW - 1)
            throw ContractError("transposed convolution padding must be < kernel size");
        GH = (H - 1) * spec.stride + 1;
        GW = (W - 1) * spec.stride + 1;
        g = {GH, GW, C, KH, KW, O, OH, OW, 1, KH - 1 - spec.padding, KW - 1 - spec.padding, true};
    }
    std::vector<std::int32_t> grid(static_cast<std::size_t>(GH * GW * C), 0);
    const std::int64_t step = spec.kind == LayerKind::Conv ? 1 : spec.stride;
    for (std::int64_t y = 0; y < H; ++y)
        for (std::int64_t xx = 0; xx < W; ++xx)
            for (std::int64_t c = 0; c < C; ++c) {
                const auto src = static_cast<std::size_t>((y * W + xx) * C + c);
                const auto dst = static_cast<std::size_t>(((y * step) * GW + xx * step) * C + c);
                grid[dst] = checked_shift(x.mantissa[src], x_exp(c) - emin, "input channels");
            }

    FixedOutput out;
    out.shape = {OH, OW, O};
    out.acc.assign(static_cast<std::size_t>(OH * OW * O), 0);
    out.exponent.resize(static_cast<std::size_t>(O));
    std::vector<std::int64_t> peak(static_cast<std::size_t>(O), 0);
    std::vector<std::optional<std::string>> failure(static_cast<std::size_t>(O));

    parallel_for(static_cast<std::size_t>(O), [&](std::size_t oi) {
        const auto o = static_cast<std::int64_t>(oi);
        const int w_exp = w.exponent[w.exponent.size() == 1 ? 0 : oi];
        int e_out = emin + w_exp;
        std::int32_t b = 0;
        if (!bias.empty()) {
            const double scaled = round_half_away(std::ldexp(bias[oi], -e_out));
            if (!(std::fabs(scaled) <= std::numeric_limits<std::int32_t>::max())) {
                failure[oi] = "bias of channel " + std::to_string(o) + " overflows the accumulator grid";
                return;
            }
            b = static_cast<std::int32_t>(scaled);
        }
        if (spec.activation == ActivationKind::LeakyReLU) e_out -= 3;
        out.exponent[oi] = e_out;
        for (std::int64_t oy = 0; oy < OH; ++oy)
            for (std::int64_t ox = 0; ox < OW; ++ox) {
                std::int32_t acc = b;
                bool overflow = false;
                for (std::int64_t kh = 0; kh < KH && !overflow; ++kh) {
                    const std::int64_t iy = oy * g.stride - g.pad_top + kh;
                    if (iy < 0 || iy >= g.H) continue;
                    const std::int64_t wkh = g.flip ? KH - 1 - kh : kh;
                    for (std::int64_t kw = 0; kw < KW && !overflow; ++kw) {
                        const std::int64_t ix = ox * g.stride - g.pad_left + kw;
                        if (ix < 0 || ix >= g.W) continue;
                        const std::int64_t wkw = g.flip ? KW - 1 - kw : kw;
                        for (std::int64_t c = 0; c < C; ++c) {
                            const std::int32_t xv = grid[static_cast<std::size_t>((iy * g.W + ix) * C + c)];
                            const std::int32_t wv = w.mantissa[static_cast<std::size_t>(((c * KH + wkh) * KW + wkw) * O + o)];
                            std::int32_t prod;
                            if (__builtin_mul_overflow(xv, wv, &prod) || __builtin_add_overflow(acc, prod, &acc)) {
                                overflow = true;
                                break;
                            }
                        }
                    }
                }
                if (overflow) {
                    failure[oi] = "accumulator overflow at output " + position(oy, ox, o);
                    return;
                }
                peak[oi] = std::max<std::int64_t>(peak[oi], std::abs(static_cast<std::int64_t>(acc)));
                if (spec.activation == ActivationKind::ReLU && acc < 0) acc = 0;
                if (spec.activation == ActivationKind::LeakyReLU && acc > 0) {
                    if (acc > (std::numeric_limits<std::int32_t>::max() >> 3)) {
                        failure[oi] = "accumulator overflow in activation at output " + position(oy, ox, o);
                        return;
                    }
                    acc <<= 3;
                }
                out.acc[static_cast<std::size_t>((oy * OW + ox) * O + o)] = acc;
            }
    });

    for (const auto& f : failure)
        if (f) throw NumericError(*f);
    out.peak = *std::max_element(peak.begin(), peak.end());
    return out;
}

}  // namespace fixq
