#pragma once

#include <string_view>
#include <vector>

#include "fixq/quantized_tensor.hpp"
#include "fixq/tensor.hpp"

namespace fixq {

enum class QuantMethod { LQ, NLQ, Lloyd };

std::string_view to_string(QuantMethod m);
QuantMethod method_from_string(std::string_view s);

/// Scales each group by its power-of-two sf, quantizes the scaled values
/// with the chosen method and stores the 8-bit levels. Lloyd's method keeps
/// one lookup table per tensor and is only allowed with layer-wise groups.
QuantizedTensor quantize_weights(const Tensor& t, GroupScheme scheme, QuantMethod method, int bits = 8,
                                 double alpha = 0.5);

/// Sum over elements of (sw - Q(sw))^2 * sf^-1, kept per group.
struct QuantError {
    std::vector<double> per_group;
    double total = 0.0;
};

QuantError quant_error(const Tensor& t, const QuantizedTensor& q);

}  // namespace fixq
