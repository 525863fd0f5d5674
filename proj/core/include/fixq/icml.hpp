#pragma once

#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "fixq/quantized_tensor.hpp"
#include "fixq/tensor.hpp"

namespace fixq {

/// Fractional-bit baseline: n = -ceil(log2(alpha_mult * sigma * Stepsize(bits))).
struct IcmlParams {
    double alpha_mult = 3.0;
    int bits = 8;
    std::map<int, double> stepsize_table{{8, 0.0308}};

    double stepsize() const;
    void validate() const;
};

enum class IcmlVariant { LQ, NLQ };

std::string_view to_string(IcmlVariant v);
IcmlVariant icml_variant_from_string(std::string_view s);

/// Default parameters per variant (alpha_mult 3 for LQ, 1.5 for NLQ).
IcmlParams icml_default_params(IcmlVariant v);

/// Sample standard deviation (n - 1 denominator).
double sample_stddev(std::span<const float> group);

int icml_fractional_bits(std::span<const float> group, const IcmlParams& p);

/// Scale exponent that maps the fractional-bit grid onto the stored codebook:
/// n - 8 for LQ (weight-lq-n8), n - 10 for NLQ (icml-nlq).
int icml_sf_exponent(int n, IcmlVariant v);

/// LQ: step 2^-n on [-128, 127] * 2^-n. NLQ: step 2^-n on [0, 64/2^n),
/// 2^-(n-2) on [64/2^n, 128/2^n), 2^-(n-3) on [128/2^n, 512/2^n); both
/// saturate outside their range.
std::vector<double> icml_quantize(std::span<const float> group, int n, IcmlVariant v);

/// Channel-wise quantization of a weight tensor with per-channel n.
QuantizedTensor icml_quantize_weights(const Tensor& t, IcmlVariant v, const IcmlParams& p);

}  // namespace fixq
