#include "fixq/clipping.hpp"

#include <cmath>
#include <string>

#include "fixq/errors.hpp"
#include "fixq/scale.hpp"

namespace fixq {

std::string_view to_string(ClipMode m) { return m == ClipMode::Magnitude ? "magnitude" : "upper"; }

ClipMode clip_mode_from_string(std::string_view s) {
    if (s == "magnitude") return ClipMode::Magnitude;
    if (s == "upper") return ClipMode::UpperOnly;
    throw ContractError("unknown clip mode '" + std::string(s) + "'");
}

double clip_epsilon(std::span<const float> group, int bits, double alpha) {
    require_finite(group, "clip_epsilon");
    const double m = max_abs(group);
    if (m == 0.0) throw ContractError("clip_epsilon: all-zero group");
    exponent_of_power_of_two(alpha);
    return std::ldexp(1.0, floor_log2(m) - (bits - 1)) / alpha;
}

double clip_threshold(std::span<const float> group, double beta, int bits, double alpha) {
    if (!(beta >= 1.0)) throw ContractError("clip factor beta must be >= 1");
    const double eps = clip_epsilon(group, bits, alpha);
    const double t = std::ldexp(beta, floor_log2(max_abs(group))) - eps;
    return static_cast<double>(static_cast<float>(t));
}

bool ste_passes(float w, double threshold, ClipMode mode) noexcept {
    const double v = mode == ClipMode::Magnitude ? std::fabs(static_cast<double>(w)) : static_cast<double>(w);
    return v <= threshold;
}

std::vector<float> apply_clip(std::span<const float> group, double threshold, ClipMode mode) {
    const auto t = static_cast<float>(threshold);
    std::vector<float> out(group.begin(), group.end());
    for (float& w : out) {
        if (ste_passes(w, threshold, mode)) continue;
        w = (mode == ClipMode::Magnitude && w < 0.0f) ? -t : t;
    }
    return out;
}

std::vector<float> clip_weights(std::span<const float> group, double beta, int bits, double alpha, ClipMode mode) {
    return apply_clip(group, clip_threshold(group, beta, bits, alpha), mode);
}

std::vector<double> ste_mask(std::span<const float> w, std::span<const double> grad, double threshold,
                             ClipMode mode) {
    if (w.size() != grad.size()) throw ContractError("ste_mask: weight and gradient sizes differ");
    std::vector<double> out(grad.begin(), grad.end());
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!ste_passes(w[i], threshold, mode)) out[i] = 0.0;
    return out;
}

}  // namespace fixq
