#include "fixq/mean_removal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "fixq/errors.hpp"
#include "fixq/scale.hpp"

namespace fixq {

MeanParams fit_mean_channel(std::span<const double> x, std::span<const double> y, std::int64_t channel) {
    if (x.size() != y.size()) throw ContractError("regression needs one channel mean per image");
    if (x.size() < 2) throw ContractError("regression needs at least 2 images");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw ContractError("degenerate regression: all image means are identical");
    MeanParams mp;
    mp.channel = channel;
    mp.a = sxy / sxx;
    mp.b = my - mp.a * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (mp.a * x[i] + mp.b);
        ss_res += r * r;
    }
    if (syy == 0.0)
        mp.r2 = 1.0;
    else
        mp.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    if (!std::isfinite(mp.a) || !std::isfinite(mp.b)) throw NumericError("regression produced non-finite coefficients");
    return mp;
}

double tensor_mean(const Tensor& t) {
    double s = 0.0;
    for (float v : t.data()) s += v;
    return t.size() ? s / static_cast<double>(t.size()) : 0.0;
}

double channel_mean(const Tensor& t, std::int64_t channel) {
    const auto c = static_cast<std::size_t>(t.channels());
    if (channel < 0 || static_cast<std::size_t>(channel) >= c) throw ContractError("channel index out of range");
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = static_cast<std::size_t>(channel); i < t.size(); i += c, ++n) s += t[i];
    return s / static_cast<double>(n);
}

MeanParams fit_mean_channel(std::span<const Tensor> images, std::span<const Tensor> outputs, std::int64_t channel) {
    if (images.size() != outputs.size()) throw ContractError("one output per image required");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < images.size(); ++i) {
        x.push_back(tensor_mean(images[i]));
        y.push_back(channel_mean(outputs[i], channel));
    }
    return fit_mean_channel(x, y, channel);
}

std::optional<std::int64_t> detect_mean_channel(std::span<const Tensor> outputs, double threshold) {
    if (outputs.empty()) return std::nullopt;
    const auto channels = static_cast<std::size_t>(outputs.front().channels());
    std::vector<double> sum(channels, 0.0), sq(channels, 0.0), count(channels, 0.0);
    for (const Tensor& t : outputs) {
        if (static_cast<std::size_t>(t.channels()) != channels) throw ContractError("outputs disagree on channels");
        for (std::size_t i = 0; i < t.size(); ++i) {
            sum[i % channels] += t[i];
            sq[i % channels] += double{t[i]} * t[i];
            count[i % channels] += 1.0;
        }
    }
    std::optional<std::int64_t> best;
    double best_ratio = threshold;
    for (std::size_t c = 0; c < channels; ++c) {
        const double mean = sum[c] / count[c];
        const double var = std::max(0.0, sq[c] / count[c] - mean * mean);
        const double sd = std::sqrt(var);
        const double ratio = sd > 0.0 ? std::fabs(mean) / sd
                                      : (mean != 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = static_cast<std::int64_t>(c);
        }
    }
    return best;
}

int bitwidth_of(std::uint64_t m) { return static_cast<int>(std::bit_width(m)) + 1; }

std::int32_t predict_mean(const MeanParams& mp, double x_mean) {
    const double mu = round_half_away(mp.a * x_mean + mp.b);
    if (!std::isfinite(mu) || std::fabs(mu) > std::numeric_limits<std::int32_t>::max())
        throw NumericError("predicted mean does not fit a 32-bit integer");
    return static_cast<std::int32_t>(mu);
}

namespace {

std::uint64_t max_magnitude(std::span<const std::int32_t> v) {
    std::uint64_t m = 0;
    for (auto x : v) m = std::max<std::uint64_t>(m, static_cast<std::uint64_t>(std::llabs(x)));
    return m;
}

}  // namespace

MeanRemovedChannel mean_removed_quantize(std::span<const std::int32_t> y_hat, const MeanParams& mp, double x_mean) {
    MeanRemovedChannel r;
    r.mean = predict_mean(mp, x_mean);
    r.mean_fits_int8 = r.mean >= -128 && r.mean <= 127;
    r.offsets.reserve(y_hat.size());
    for (auto v : y_hat) r.offsets.push_back(v - r.mean);
    r.bits_before = bitwidth_of(max_magnitude(y_hat));
    r.bits_after = bitwidth_of(max_magnitude(r.offsets));
    return r;
}

std::vector<std::int32_t> restore_channel(const MeanRemovedChannel& m) {
    std::vector<std::int32_t> out;
    out.reserve(m.offsets.size());
    for (auto v : m.offsets) out.push_back(v + m.mean);
    return out;
}

MeanCoding to_mean_coding(const MeanParams& mp, std::int32_t predicted) {
    return MeanCoding{mp.channel, mp.a, mp.b, mp.r2, predicted};
}

}  // namespace fixq
