#include "fixq/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "fixq/catalog.hpp"
#include "fixq/errors.hpp"
#include "fixq/weight_quant.hpp"

namespace fixq {

namespace {

int int_attr(const BundleEntry& e, const char* key, int fallback) {
    auto it = e.attrs.find(key);
    if (it == e.attrs.end()) return fallback;
    int v = 0;
    const std::string& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw FormatError("entry '" + e.name + "': attribute " + key + "='" + s + "' is not an integer");
    return v;
}

std::string str_attr(const BundleEntry& e, const char* key, std::string fallback) {
    auto it = e.attrs.find(key);
    return it == e.attrs.end() ? fallback : it->second;
}

std::vector<std::int32_t> round_output(const FixedOutput& out) {
    std::vector<std::int32_t> y(out.acc.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<std::int32_t>(round_half_away(out.value(i)));
    return y;
}

Tensor int_tensor(const std::vector<std::int64_t>& shape, const std::vector<std::int32_t>& v) {
    return Tensor(shape, {Axis::OH, Axis::OW, Axis::O}, std::vector<float>(v.begin(), v.end()));
}

CalibrationProfile profile_for(const TensorBundle& profiles, const std::string& name) {
    const ProfileRecord* r = profiles.find_profile(name);
    if (!r) throw FormatError("profile bundle lacks '" + name + "'");
    return profile_from_record(*r);
}

FixedOutput run_layer(const NetworkLayer& l, const QuantizedTensor& x) {
    try {
        return forward_quantized(x, l.weights, l.spec);
    } catch (const NumericError& e) {
        throw NumericError("layer '" + l.name + "': " + e.what());
    } catch (const ContractError& e) {
        throw ContractError("layer '" + l.name + "': " + e.what());
    }
}

}  // namespace

std::vector<NetworkLayer> load_network(const TensorBundle& weights, int bits) {
    std::vector<std::pair<int, NetworkLayer>> layers;
    for (const BundleEntry& e : weights.entries) {
        if (str_attr(e, "role", "weight") != "weight") continue;
        NetworkLayer l;
        l.name = e.name;
        try {
            l.spec.kind = layer_kind_from_string(str_attr(e, "kind", "conv"));
            l.spec.activation = activation_from_string(str_attr(e, "activation", "none"));
        } catch (const ContractError& err) {
            throw FormatError("entry '" + e.name + "': " + err.what());
        }
        l.spec.stride = int_attr(e, "stride", 1);
        l.spec.padding = int_attr(e, "padding", 0);
        l.spec.output_padding = int_attr(e, "output_padding", -1);
        l.main_path = str_attr(e, "path", "main") != "hyper";
        l.weights = e.is_quantized() ? e.quantized()
                                     : quantize_weights(e.tensor(), GroupScheme::ChannelWise, QuantMethod::NLQ, bits);
        if (l.weights.roles != std::vector<Axis>{Axis::I, Axis::H, Axis::W, Axis::O})
            throw FormatError("entry '" + e.name + "' is not a weight tensor");
        layers.emplace_back(int_attr(e, "order", static_cast<int>(layers.size())), std::move(l));
    }
    std::stable_sort(layers.begin(), layers.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<NetworkLayer> out;
    for (auto& [order, l] : layers) out.push_back(std::move(l));
    if (out.empty()) throw ContractError("weight bundle holds no layers");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].weights.shape[0] != out[i - 1].weights.shape[3])
            throw ContractError("layer '" + out[i].name + "' expects " + std::to_string(out[i].weights.shape[0]) +
                                " input channels, previous layer yields " +
                                std::to_string(out[i - 1].weights.shape[3]));
    return out;
}

std::vector<std::array<std::int64_t, 3>> propagate_shapes(std::span<const NetworkLayer> net, std::int64_t h,
                                                          std::int64_t w) {
    std::vector<std::array<std::int64_t, 3>> shapes;
    for (const NetworkLayer& l : net) {
        h = output_extent(h, l.weights.shape[1], l.spec);
        w = output_extent(w, l.weights.shape[2], l.spec);
        shapes.push_back({h, w, l.weights.shape[3]});
    }
    return shapes;
}

TensorBundle calibrate_network(std::span<const NetworkLayer> net, std::span<const Tensor> images,
                               const CalibrationOptions& opt) {
    if (net.empty()) throw ContractError("network has no layers");
    TensorBundle out;
    CalibrationProfile prof = calibrate(images, ActivationKind::None, true, kInputProfile);
    out.profiles.push_back(to_record(prof));

    std::vector<QuantizedTensor> xs;
    for (const Tensor& img : images) xs.push_back(quantize_activations(img, prof));

    for (std::size_t li = 0; li < net.size(); ++li) {
        const NetworkLayer& l = net[li];
        std::vector<Tensor> outs;
        std::vector<std::vector<std::int32_t>> ints;
        for (const QuantizedTensor& x : xs) {
            const FixedOutput y = run_layer(l, x);
            if (li + 1 == net.size()) {
                ints.push_back(round_output(y));
                outs.push_back(int_tensor(y.shape, ints.back()));
            } else {
                outs.push_back(y.to_tensor());
            }
        }
        if (li + 1 < net.size()) {
            prof = calibrate(outs, l.spec.activation, l.main_path, l.name);
            out.profiles.push_back(to_record(prof));
            xs.clear();
            for (const Tensor& t : outs) xs.push_back(quantize_activations(t, prof));
            continue;
        }
        // Final layer: integer code, optionally with a mean-coded channel.
        ProfileRecord rec;
        rec.name = kOutputProfile;
        const auto channels = static_cast<std::size_t>(outs.front().channels());
        rec.sf_exponents.assign(channels, 0);
        rec.max_abs.assign(channels, 0.0);
        for (const Tensor& t : outs)
            for (std::size_t i = 0; i < t.size(); ++i)
                rec.max_abs[i % channels] = std::max(rec.max_abs[i % channels], std::fabs(double{t[i]}));
        rec.attrs["activation"] = std::string(to_string(l.spec.activation));
        rec.attrs["multiplexed"] = "false";
        if (opt.mean_removal && images.size() >= 2) {
            if (auto ch = detect_mean_channel(outs, opt.mean_threshold)) {
                const MeanParams mp = fit_mean_channel(images, outs, *ch);
                rec.mean = to_mean_coding(mp, 0);
            }
        }
        out.profiles.push_back(std::move(rec));
    }
    return out;
}

PipelineResult pipeline_demo(const Tensor& input, std::span<const NetworkLayer> net, const TensorBundle& profiles) {
    if (net.empty()) throw ContractError("network has no layers");
    PipelineResult r;
    CalibrationProfile prof = profile_for(profiles, kInputProfile);
    QuantizedTensor x = quantize_activations(input, prof);
    for (auto c : prof.clip_count) r.input_clip_count += c;
    r.activations.push_back(dequantize(x));

    for (std::size_t li = 0; li < net.size(); ++li) {
        const NetworkLayer& l = net[li];
        const FixedOutput y = run_layer(l, x);
        LayerReport rep;
        rep.name = l.name;
        rep.shape = {y.shape[0], y.shape[1], y.shape[2]};
        rep.accumulator_peak = y.peak;
        if (li + 1 < net.size()) {
            prof = profile_for(profiles, l.name);
            x = quantize_activations(y.to_tensor(), prof);
            rep.sf_exponents = prof.sf_exponents;
            for (auto c : prof.clip_count) rep.clip_count += c;
            r.activations.push_back(dequantize(x));
            r.layers.push_back(std::move(rep));
            continue;
        }
        r.y_hat = round_output(y);
        const ProfileRecord* outp = profiles.find_profile(kOutputProfile);
        const Codebook& cb = codebook(codebook_ids::kInt8);
        QuantizedTensor& q = r.y_q;
        q.shape = y.shape;
        q.roles = {Axis::OH, Axis::OW, Axis::O};
        q.scheme = GroupScheme::ChannelWise;
        q.codebook_id = cb.id();
        q.sf_exponents.assign(static_cast<std::size_t>(y.shape[2]), 0);
        std::vector<std::int32_t> stored = r.y_hat;
        const auto channels = static_cast<std::size_t>(y.shape[2]);
        if (outp && outp->mean) {
            const MeanCoding& mc = *outp->mean;
            if (mc.channel < 0 || static_cast<std::size_t>(mc.channel) >= channels)
                throw FormatError("output profile mean channel out of range");
            const MeanParams mp{mc.channel, mc.a, mc.b, mc.r2};
            std::vector<std::int32_t> ch;
            for (std::size_t i = static_cast<std::size_t>(mc.channel); i < stored.size(); i += channels)
                ch.push_back(stored[i]);
            MeanRemovedChannel m = mean_removed_quantize(ch, mp, tensor_mean(input));
            std::size_t k = 0;
            for (std::size_t i = static_cast<std::size_t>(mc.channel); i < stored.size(); i += channels)
                stored[i] = m.offsets[k++];
            q.mean = to_mean_coding(mp, m.mean);
            r.mean = std::move(m);
        }
        q.levels.resize(stored.size());
        for (std::size_t i = 0; i < stored.size(); ++i) {
            const double v = static_cast<double>(stored[i]);
            if (cb.out_of_range(v) && v != cb.min_value()) ++r.y_saturated;
            q.levels[i] = static_cast<std::uint8_t>(cb.encode(cb.quantize(v)));
        }
        rep.clip_count = r.y_saturated;
        r.layers.push_back(std::move(rep));
    }
    return r;
}

std::string PipelineResult::report() const {
    std::ostringstream os;
    os << "layer        shape            acc_peak    clips  sf_exponents\n";
    for (const LayerReport& l : layers) {
        std::ostringstream shape;
        shape << l.shape[0] << "x" << l.shape[1] << "x" << l.shape[2];
        os << l.name;
        for (std::size_t i = l.name.size(); i < 13; ++i) os << ' ';
        os << shape.str();
        for (std::size_t i = shape.str().size(); i < 17; ++i) os << ' ';
        os << l.accumulator_peak << "  " << l.clip_count << "  ";
        if (l.sf_exponents.empty()) {
            os << "-";
        } else {
            const auto [lo, hi] = std::minmax_element(l.sf_exponents.begin(), l.sf_exponents.end());
            os << "[" << *lo << ", " << *hi << "]";
        }
        os << '\n';
    }
    if (mean)
        os << "mean-coded channel: mean " << mean->mean << ", bits " << mean->bits_before << " -> "
           << mean->bits_after << '\n';
    os << "clipped input elements: " << input_clip_count << '\n';
    os << "saturated y_hat elements: " << y_saturated << '\n';
    return os.str();
}

}  // namespace fixq
