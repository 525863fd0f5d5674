#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fixq/codebook.hpp"
#include "fixq/scale.hpp"
#include "fixq/tensor.hpp"

namespace fixq {

/// Mean prediction attached to one channel of an integer-coded tensor:
/// the channel stores offsets from `predicted` = round(a * x_mean + b).
struct MeanCoding {
    std::int64_t channel = 0;
    double a = 0.0;
    double b = 0.0;
    double r2 = 0.0;
    std::int32_t predicted = 0;

    friend bool operator==(const MeanCoding&, const MeanCoding&) = default;
};

/// 8-bit level indices plus per-group power-of-two scale exponents.
struct QuantizedTensor {
    std::vector<std::int64_t> shape;
    std::vector<Axis> roles;
    GroupScheme scheme = GroupScheme::ChannelWise;
    std::string codebook_id;
    std::vector<std::uint8_t> levels;
    std::vector<std::int8_t> sf_exponents;  // one per group
    std::vector<std::uint8_t> mux;          // per channel range selection; mux families only
    std::vector<float> lut;                 // Lloyd centroids in the scaled domain
    std::optional<MeanCoding> mean;

    std::size_t size() const noexcept { return levels.size(); }
    std::size_t channels() const noexcept { return static_cast<std::size_t>(shape.back()); }
    std::size_t group_count() const;
    std::size_t group_index(std::size_t flat) const noexcept;
    ScaleFactor sf(std::size_t group) const noexcept { return {sf_exponents[group]}; }

    /// Throws FormatError when fields are inconsistent with each other.
    void validate() const;

    friend bool operator==(const QuantizedTensor&, const QuantizedTensor&) = default;
};

/// Codebook governing a given group (resolves multiplexed families).
const Codebook& codebook_for_group(const QuantizedTensor& q, std::size_t group);

/// Decoded scaled value Q(sw) of one element (before dividing by sf).
double scaled_value(const QuantizedTensor& q, std::size_t flat);

/// Q(w) = Q(sw) * sf^-1 per element, with the predicted mean added back
/// to the mean-coded channel. Values are exact (dyadic) in double.
std::vector<double> dequantize_values(const QuantizedTensor& q);
Tensor dequantize(const QuantizedTensor& q);

/// Narrow an exponent into the signed 8-bit storage slot.
std::int8_t store_exponent(int exponent);

}  // namespace fixq
