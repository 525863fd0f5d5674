#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fixq/act_quant.hpp"
#include "fixq/quantized_tensor.hpp"
#include "fixq/tensor.hpp"

namespace fixq {

enum class LayerKind { Conv, ConvTranspose };

std::string_view to_string(LayerKind k);
LayerKind layer_kind_from_string(std::string_view s);

struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    int stride = 1;
    int padding = 0;
    int output_padding = -1;  // transposed only; -1 means stride - 1
    ActivationKind activation = ActivationKind::None;

    void validate() const;
    int effective_output_padding() const noexcept { return output_padding < 0 ? stride - 1 : output_padding; }
};

/// Output spatial size along one axis.
std::int64_t output_extent(std::int64_t in, std::int64_t kernel, const LayerSpec& spec);

/// Layer output held exactly: value(y, x, o) = acc * 2^exponent[o].
struct FixedOutput {
    std::vector<std::int64_t> shape;  // (OH, OW, O)
    std::vector<std::int32_t> acc;
    std::vector<int> exponent;        // per output channel
    std::int64_t peak = 0;            // largest |acc| seen, before the activation

    double value(std::size_t flat) const;
    std::vector<double> values() const;
    /// Values rounded to float32.
    Tensor to_tensor() const;
};

/// Integer (or integer-grid) operands derived from a quantized tensor:
/// value = mantissa * 2^exponent[group].
struct FixedOperand {
    std::vector<std::int32_t> mantissa;
    std::vector<int> exponent;  // per group
};

/// Throws ContractError for lookup-table or mean-coded tensors.
FixedOperand fixed_operand(const QuantizedTensor& q);

/// Convolution (or transposed convolution) of decoded activations with
/// decoded weights using 32-bit integer accumulation and power-of-two
/// rescaling, followed by the activation. Bias values are rounded onto the
/// accumulator grid. Accumulator overflow throws NumericError naming the
/// output position.
FixedOutput forward_quantized(const QuantizedTensor& x, const QuantizedTensor& w, const LayerSpec& spec,
                              std::span<const double> bias = {});

}  // namespace fixq
