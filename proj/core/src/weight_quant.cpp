#include "fixq/weight_quant.hpp"

#include <algorithm>
#include <set>

#include "fixq/catalog.hpp"
#include "fixq/errors.hpp"
#include "fixq/lloyd.hpp"
#include "fixq/parallel.hpp"
#include "fixq/scale.hpp"

namespace fixq {

std::string_view to_string(QuantMethod m) {
    switch (m) {
        case QuantMethod::LQ: return "lq";
        case QuantMethod::NLQ: return "nlq";
        case QuantMethod::Lloyd: return "lloyd";
    }
    return "?";
}

QuantMethod method_from_string(std::string_view s) {
    if (s == "lq") return QuantMethod::LQ;
    if (s == "nlq") return QuantMethod::NLQ;
    if (s == "lloyd") return QuantMethod::Lloyd;
    throw ContractError("unknown quantization method '" + std::string(s) + "'");
}

QuantizedTensor quantize_weights(const Tensor& t, GroupScheme scheme, QuantMethod method, int bits,
                                 double alpha) {
    if (t.layout() != Layout::Weight) throw ContractError("quantize_weights needs a weight tensor (I,H,W,O)");
    if (method == QuantMethod::Lloyd && scheme == GroupScheme::ChannelWise)
        throw ContractError("Lloyd quantization needs layer-wise grouping; per-channel lookup tables are not supported");
    if (bits < 1 || bits > 8) throw ContractError("8-bit level storage holds at most 8 bits per element");
    require_finite(t.data(), "quantize_weights");

    QuantizedTensor q;
    q.shape = t.shape();
    q.roles = t.roles();
    q.scheme = scheme;
    q.levels.resize(t.size());
    const auto views = group(t, scheme);
    q.sf_exponents.resize(views.size());

    if (method == QuantMethod::Lloyd) {
        const GroupView& v = views.front();
        const ScaleFactor sf = scale_factor(t.data(), alpha);
        q.sf_exponents[0] = store_exponent(sf.exponent);
        std::vector<double> sw(t.size());
        for (std::size_t i = 0; i < sw.size(); ++i) sw[i] = sf.scale(t[v.index(i)]);
        const std::size_t distinct = std::set<double>(sw.begin(), sw.end()).size();
        const std::size_t levels = std::min<std::size_t>(std::size_t{1} << bits, distinct);
        const LloydResult lr = lloyd_quantize(sw, levels);
        q.codebook_id = std::string(codebook_ids::kLloydLut);
        q.lut.assign(lr.centroids.begin(), lr.centroids.end());
        for (std::size_t i = 0; i < sw.size(); ++i) q.levels[v.index(i)] = static_cast<std::uint8_t>(lr.assignment[i]);
        return q;
    }

    const std::string id = (method == QuantMethod::NLQ ? "weight-nlq-n" : "weight-lq-n") + std::to_string(bits);
    const Codebook& cb = codebook(id);
    if (cb.alpha() != alpha) throw ContractError("weight codebooks are defined for alpha = 0.5");
    q.codebook_id = id;
    parallel_for(views.size(), [&](std::size_t g) {
        const GroupView& v = views[g];
        double m = 0.0;
        for (std::size_t k = 0; k < v.count; ++k) m = std::max(m, std::fabs(static_cast<double>(t[v.index(k)])));
        const ScaleFactor sf = scale_factor_for_max(m, alpha);
        q.sf_exponents[g] = store_exponent(sf.exponent);
        for (std::size_t k = 0; k < v.count; ++k) {
            const std::size_t i = v.index(k);
            q.levels[i] = static_cast<std::uint8_t>(cb.encode(cb.quantize(sf.scale(t[i]))));
        }
    });
    return q;
}

QuantError quant_error(const Tensor& t, const QuantizedTensor& q) {
    if (t.shape() != q.shape || t.roles() != q.roles)
        throw ContractError("quant_error: tensor and quantized tensor shapes differ");
    if (q.sf_exponents.size() != q.group_count())
        throw ContractError("quant_error: " + std::to_string(q.sf_exponents.size()) + " scale factors for " +
                            std::to_string(q.group_count()) + " groups");
    QuantError err;
    err.per_group.assign(q.group_count(), 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const std::size_t g = q.group_index(i);
        const ScaleFactor sf = q.sf(g);
        const double d = sf.scale(t[i]) - scaled_value(q, i);
        err.per_group[g] += d * d;
    }
    for (std::size_t g = 0; g < err.per_group.size(); ++g) {
        err.per_group[g] = q.sf(g).unscale(err.per_group[g]);
        err.total += err.per_group[g];
    }
    return err;
}

}  // namespace fixq
