#include "fixq/quantized_tensor.hpp"

#include <limits>

#include "fixq/catalog.hpp"
#include "fixq/errors.hpp"

namespace fixq {

std::size_t QuantizedTensor::group_count() const {
    return scheme == GroupScheme::LayerWise ? 1 : channels();
}

std::size_t QuantizedTensor::group_index(std::size_t flat) const noexcept {
    return group_of(flat, channels(), scheme);
}

void QuantizedTensor::validate() const {
    auto fail = [&](const std::string& what) { throw FormatError("quantized tensor: " + what); };
    if (shape.size() != roles.size()) fail("rank does not match axis roles");
    try {
        layout_of(roles);
    } catch (const ContractError& e) {
        fail(e.what());
    }
    for (auto d : shape)
        if (d < 1) fail("non-positive dimension");
    if (element_count(shape) != levels.size()) fail("level count does not match shape");
    if (codebook_id.empty()) fail("missing codebook id");
    if (sf_exponents.size() != group_count())
        fail("expected " + std::to_string(group_count()) + " scale factors, got " +
             std::to_string(sf_exponents.size()));
    const bool muxed = is_mux_family(codebook_id);
    if (muxed) {
        if (scheme != GroupScheme::ChannelWise) fail("multiplexed codebooks need channel-wise groups");
        if (mux.size() != channels()) fail("mux selection count does not match channels");
        for (auto s : mux)
            if (s > 3) fail("mux selection out of range");
    } else if (!mux.empty()) {
        fail("mux selections present for non-multiplexed codebook '" + codebook_id + "'");
    }
    if (codebook_id == codebook_ids::kLloydLut) {
        if (lut.empty() || lut.size() > 256) fail("Lloyd lookup table must hold 1..256 entries");
        for (auto l : levels)
            if (l >= lut.size()) fail("level outside Lloyd lookup table");
    } else if (!lut.empty()) {
        fail("lookup table present for codebook '" + codebook_id + "'");
    }
    if (mean && (mean->channel < 0 || static_cast<std::size_t>(mean->channel) >= channels()))
        fail("mean-coded channel out of range");
}

const Codebook& codebook_for_group(const QuantizedTensor& q, std::size_t group) {
    if (is_mux_family(q.codebook_id)) return codebook(mux_member_id(q.codebook_id, q.mux.at(group)));
    return codebook(q.codebook_id);
}

double scaled_value(const QuantizedTensor& q, std::size_t flat) {
    const std::size_t g = q.group_index(flat);
    if (q.codebook_id == codebook_ids::kLloydLut) return q.lut.at(q.levels[flat]);
    return codebook_for_group(q, g).decode(q.levels[flat]);
}

std::vector<double> dequantize_values(const QuantizedTensor& q) {
    q.validate();
    std::vector<double> out(q.size());
    const std::size_t channels = q.channels();
    const bool lut = q.codebook_id == codebook_ids::kLloydLut;
    for (std::size_t g = 0; g < q.group_count(); ++g) {
        const ScaleFactor sf = q.sf(g);
        const Codebook* cb = lut ? nullptr : &codebook_for_group(q, g);
        const std::size_t start = q.scheme == GroupScheme::LayerWise ? 0 : g;
        const std::size_t stride = q.scheme == GroupScheme::LayerWise ? 1 : channels;
        for (std::size_t i = start; i < q.size(); i += stride) {
            const double v = lut ? static_cast<double>(q.lut[q.levels[i]]) : cb->decode(q.levels[i]);
            out[i] = sf.unscale(v);
        }
    }
    if (q.mean) {
        const auto c = static_cast<std::size_t>(q.mean->channel);
        for (std::size_t i = c; i < q.size(); i += channels) out[i] += q.mean->predicted;
    }
    return out;
}

Tensor dequantize(const QuantizedTensor& q) {
    const auto values = dequantize_values(q);
    std::vector<float> data(values.begin(), values.end());
    return Tensor(q.shape, q.roles, std::move(data));
}

std::int8_t store_exponent(int exponent) {
    if (exponent < std::numeric_limits<std::int8_t>::min() ||
        exponent > std::numeric_limits<std::int8_t>::max())
        throw NumericError("scale exponent " + std::to_string(exponent) + " does not fit 8 bits");
    return static_cast<std::int8_t>(exponent);
}

}  // namespace fixq
