#include <cmath>
#include <cstdio>

#include "fixq/act_quant.hpp"
#include "fixq/errors.hpp"
#include "fixq/scale.hpp"

namespace fixq {

int range_select(double max_scaled, double alpha) {
    if (max_scaled == 0.0) return 3;
    const double r = max_scaled / alpha;
    if (r < 0.625) return 0;
    if (r < 0.75) return 1;
    if (r < 0.875) return 2;
    return 3;
}

namespace {

std::vector<double> channel_maxima(const Tensor& t) {
    const auto channels = static_cast<std::size_t>(t.channels());
    std::vector<double> m(channels, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) m[i % channels] = std::max(m[i % channels], std::fabs(double{t[i]}));
    return m;
}

void check_samples(std::span<const Tensor> samples) {
    if (samples.empty()) throw ContractError("calibration needs at least one sample");
    for (const Tensor& s : samples) {
        if (s.layout() != Layout::Activation) throw ContractError("calibration samples must be (OH,OW,O) tensors");
        if (s.channels() != samples.front().channels())
            throw ContractError("calibration samples disagree on channel count");
        require_finite(s.data(), "calibrate");
    }
}

}  // namespace

CalibrationProfile calibrate(std::span<const Tensor> samples, ActivationKind kind, bool multiplexed,
                             std::string name) {
    check_samples(samples);
    CalibrationProfile p;
    p.name = std::move(name);
    p.kind = kind;
    p.alpha = activation_alpha(kind);
    p.multiplexed = multiplexed;
    p.max_abs.assign(static_cast<std::size_t>(samples.front().channels()), 0.0);
    for (const Tensor& s : samples) {
        const auto m = channel_maxima(s);
        for (std::size_t c = 0; c < m.size(); ++c) p.max_abs[c] = std::max(p.max_abs[c], m[c]);
    }
    const std::size_t channels = p.max_abs.size();
    p.sf_exponents.resize(channels);
    p.max_scaled.resize(channels);
    p.range_sel.resize(channels);
    p.clip_count.assign(channels, 0);
    for (std::size_t c = 0; c < channels; ++c) {
        const ScaleFactor sf = scale_factor_for_max(p.max_abs[c], p.alpha);
        p.sf_exponents[c] = sf.exponent;
        p.max_scaled[c] = sf.scale(p.max_abs[c]);
        p.range_sel[c] = static_cast<std::uint8_t>(multiplexed ? range_select(p.max_scaled[c], p.alpha) : 3);
    }
    return p;
}

IntervalStats interval_stats(std::span<const Tensor> samples, ActivationKind kind, std::string layer) {
    check_samples(samples);
    IntervalStats st;
    st.layer = std::move(layer);
    const double alpha = activation_alpha(kind);
    std::array<std::size_t, 4> hits{};
    for (const Tensor& s : samples)
        for (double m : channel_maxima(s)) {
            if (m == 0.0) continue;
            ++hits[static_cast<std::size_t>(range_select(scale_factor_for_max(m, alpha).scale(m), alpha))];
            ++st.count;
        }
    for (std::size_t k = 0; k < 4; ++k)
        st.probability[k] = st.count ? static_cast<double>(hits[k]) / static_cast<double>(st.count) : 0.0;
    return st;
}

std::string format_interval_table(std::span<const IntervalStats> rows) {
    std::string out = "layer       [a/2,5a/8)  [5a/8,3a/4)  [3a/4,7a/8)  [7a/8,a)   n\n";
    char buf[160];
    for (const IntervalStats& r : rows) {
        std::snprintf(buf, sizeof buf, "%-10s  %9.2f%%  %10.2f%%  %10.2f%%  %8.2f%%  %zu\n", r.layer.c_str(),
                      100 * r.probability[0], 100 * r.probability[1], 100 * r.probability[2],
                      100 * r.probability[3], r.count);
        out += buf;
    }
    return out;
}

ProfileRecord to_record(const CalibrationProfile& p) {
    ProfileRecord r;
    r.name = p.name;
    for (int e : p.sf_exponents) r.sf_exponents.push_back(store_exponent(e));
    if (p.multiplexed) r.mux = p.range_sel;
    r.max_abs = p.max_abs;
    r.mean = p.mean;
    r.attrs["activation"] = std::string(to_string(p.kind));
    r.attrs["multiplexed"] = p.multiplexed ? "true" : "false";
    return r;
}

CalibrationProfile profile_from_record(const ProfileRecord& r) {
    CalibrationProfile p;
    p.name = r.name;
    auto attr = [&](const char* key) -> std::string {
        auto it = r.attrs.find(key);
        if (it == r.attrs.end()) throw FormatError("profile '" + r.name + "' lacks attribute '" + key + "'");
        return it->second;
    };
    try {
        p.kind = activation_from_string(attr("activation"));
    } catch (const ContractError& e) {
        throw FormatError("profile '" + r.name + "': " + e.what());
    }
    p.multiplexed = attr("multiplexed") == "true";
    p.alpha = activation_alpha(p.kind);
    const std::size_t channels = r.sf_exponents.size();
    if (r.max_abs.size() != channels) throw FormatError("profile '" + r.name + "': max_abs length mismatch");
    if (p.multiplexed && r.mux.size() != channels)
        throw FormatError("profile '" + r.name + "': mux length mismatch");
    p.sf_exponents.assign(r.sf_exponents.begin(), r.sf_exponents.end());
    p.max_abs = r.max_abs;
    p.range_sel = p.multiplexed ? r.mux : std::vector<std::uint8_t>(channels, 3);
    for (auto s : p.range_sel)
        if (s > 3) throw FormatError("profile '" + r.name + "': mux selection out of range");
    for (std::size_t c = 0; c < channels; ++c)
        p.max_scaled.push_back(ScaleFactor{p.sf_exponents[c]}.scale(p.max_abs[c]));
    p.clip_count.assign(channels, 0);
    p.mean = r.mean;
    return p;
}

}  // namespace fixq
