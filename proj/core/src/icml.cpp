#include "fixq/icml.hpp"

#include <cmath>

#include "fixq/catalog.hpp"
#include "fixq/errors.hpp"
#include "fixq/scale.hpp"

namespace fixq {

namespace {

constexpr int kMaxFractionalBits = 100;

const Codebook& icml_codebook(IcmlVariant v) {
    return codebook(v == IcmlVariant::LQ ? codebook_ids::kWeightLq : codebook_ids::kIcmlNlq);
}

void check_n(int n) {
    if (n < -kMaxFractionalBits || n > kMaxFractionalBits)
        throw ContractError("fractional bit count " + std::to_string(n) + " is out of range");
}

}  // namespace

double IcmlParams::stepsize() const {
    auto it = stepsize_table.find(bits);
    if (it == stepsize_table.end())
        throw ContractError("no optimal uniform step size known for " + std::to_string(bits) + " bits");
    return it->second;
}

void IcmlParams::validate() const {
    if (!(alpha_mult > 0.0) || !std::isfinite(alpha_mult)) throw ContractError("alpha_mult must be > 0");
    if (!(stepsize() > 0.0)) throw ContractError("step size must be > 0");
}

std::string_view to_string(IcmlVariant v) { return v == IcmlVariant::LQ ? "lq" : "nlq"; }

IcmlVariant icml_variant_from_string(std::string_view s) {
    if (s == "lq") return IcmlVariant::LQ;
    if (s == "nlq") return IcmlVariant::NLQ;
    throw ContractError("unknown baseline variant '" + std::string(s) + "'");
}

IcmlParams icml_default_params(IcmlVariant v) {
    IcmlParams p;
    p.alpha_mult = v == IcmlVariant::LQ ? 3.0 : 1.5;
    return p;
}

double sample_stddev(std::span<const float> group) {
    if (group.size() < 2) throw ContractError("standard deviation needs at least 2 values");
    double mean = 0.0;
    for (float v : group) mean += v;
    mean /= static_cast<double>(group.size());
    double ss = 0.0;
    for (float v : group) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(group.size() - 1));
}

int icml_fractional_bits(std::span<const float> group, const IcmlParams& p) {
    p.validate();
    require_finite(group, "icml_fractional_bits");
    const double sigma = sample_stddev(group);
    if (sigma == 0.0) throw ContractError("zero standard deviation: fractional bits undefined");
    const double s = p.alpha_mult * sigma * p.stepsize();
    const int n = -ceil_log2(s);
    check_n(n);
    return n;
}

int icml_sf_exponent(int n, IcmlVariant v) {
    check_n(n);
    return v == IcmlVariant::LQ ? n - 8 : n - 10;
}

std::vector<double> icml_quantize(std::span<const float> group, int n, IcmlVariant v) {
    const ScaleFactor sf{icml_sf_exponent(n, v)};
    const Codebook& cb = icml_codebook(v);
    std::vector<double> out(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) out[i] = sf.unscale(cb.quantize(sf.scale(group[i])));
    return out;
}

QuantizedTensor icml_quantize_weights(const Tensor& t, IcmlVariant v, const IcmlParams& p) {
    if (t.layout() != Layout::Weight) throw ContractError("icml_quantize_weights needs a weight tensor");
    const Codebook& cb = icml_codebook(v);
    QuantizedTensor q;
    q.shape = t.shape();
    q.roles = t.roles();
    q.scheme = GroupScheme::ChannelWise;
    q.codebook_id = cb.id();
    q.levels.resize(t.size());
    for (const GroupView& view : group(t, GroupScheme::ChannelWise)) {
        const auto values = view.gather(t.data());
        const ScaleFactor sf{icml_sf_exponent(icml_fractional_bits(values, p), v)};
        q.sf_exponents.push_back(store_exponent(sf.exponent));
        for (std::size_t k = 0; k < view.count; ++k)
            q.levels[view.index(k)] = static_cast<std::uint8_t>(cb.encode(cb.quantize(sf.scale(values[k]))));
    }
    return q;
}

}  // namespace fixq
