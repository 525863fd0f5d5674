#include "fixq/wcft.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fixq/errors.hpp"
#include "fixq/scale.hpp"
#include "fixq/weight_quant.hpp"

namespace fixq {

namespace {

constexpr double kNoClip = std::numeric_limits<double>::infinity();

int scaled_iters(double preset_iters, double scale) {
    return static_cast<int>(std::lround(preset_iters * scale));
}

std::vector<int> group_sf(const Tensor& w, double alpha) {
    std::vector<int> out;
    for (const GroupView& v : group(w, GroupScheme::ChannelWise)) {
        double m = 0.0;
        for (std::size_t k = 0; k < v.count; ++k) m = std::max(m, std::fabs(static_cast<double>(w[v.index(k)])));
        out.push_back(scale_factor_for_max(m, alpha).exponent);
    }
    return out;
}

Tensor clipped(const Tensor& w, const std::vector<double>& thresholds, ClipMode mode) {
    Tensor out = w;
    const auto channels = static_cast<std::size_t>(w.channels());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double t = thresholds[i % channels];
        if (std::isinf(t) || ste_passes(out[i], t, mode)) continue;
        const auto tf = static_cast<float>(t);
        out[i] = (mode == ClipMode::Magnitude && out[i] < 0.0f) ? -tf : tf;
    }
    return out;
}

void check_loss(double loss, int iteration, const char* phase) {
    if (!std::isfinite(loss))
        throw NumericError(std::string("training diverged: non-finite loss at ") + phase + " iteration " +
                           std::to_string(iteration));
}

std::string join(const std::vector<int>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "]";
}

}  // namespace

void ClipSpec::validate() const {
    if (normal_iters < 0) throw ContractError("normal iteration count must be >= 0");
    if (betas.size() != finetune_iters.size())
        throw ContractError("clip schedule needs one fine-tuning count per round");
    for (double b : betas)
        if (!(b >= 1.0)) throw ContractError("clip factor beta must be >= 1");
    for (int n : finetune_iters)
        if (n < 0) throw ContractError("fine-tuning iteration count must be >= 0");
}

ClipSpec low_rate_preset(int normal_iters, double scale) {
    return ClipSpec{normal_iters, {1.0}, {scaled_iters(1.4e5, scale)}};
}

ClipSpec high_rate_preset(int normal_iters, double scale) {
    return ClipSpec{normal_iters,
                    {1.0, std::sqrt(2.0), 1.0},
                    {scaled_iters(8.6e4, scale), scaled_iters(8.6e4, scale), scaled_iters(1.4e5, scale)}};
}

ClipSpec preset_by_name(const std::string& name, int normal_iters, double scale) {
    if (name == "low-rate") return low_rate_preset(normal_iters, scale);
    if (name == "high-rate") return high_rate_preset(normal_iters, scale);
    if (name == "none") return ClipSpec{normal_iters, {}, {}};
    throw ContractError("unknown clip preset '" + name + "' (expected low-rate, high-rate or none)");
}

std::vector<double> group_thresholds(const Tensor& w, double beta, int bits, double alpha) {
    std::vector<double> out;
    for (const GroupView& v : group(w, GroupScheme::ChannelWise)) {
        const auto values = v.gather(w.data());
        out.push_back(max_abs(std::span<const float>(values)) == 0.0 ? kNoClip
                                                                      : clip_threshold(values, beta, bits, alpha));
    }
    return out;
}

WcftResult wcft_train(const LossGradFn& loss_grad, std::vector<Tensor> weights, const ClipSpec& spec,
                      const TrainOptions& opt) {
    spec.validate();
    WcftResult r;
    std::vector<std::vector<double>> grad;
    auto log_iter = [&](const char* phase, int it, double loss) {
        if (opt.log_every > 0 && it % opt.log_every == 0) {
            std::ostringstream os;
            os.precision(9);
            os << "phase=" << phase << " iter=" << it << " loss=" << loss;
            r.log.push_back(os.str());
        }
    };

    for (int it = 0; it < spec.normal_iters; ++it) {
        const double loss = loss_grad(weights, grad);
        check_loss(loss, it, "normal");
        log_iter("normal", it, loss);
        for (std::size_t t = 0; t < weights.size(); ++t)
            for (std::size_t i = 0; i < weights[t].size(); ++i)
                weights[t][i] = static_cast<float>(weights[t][i] - opt.learning_rate * grad[t][i]);
    }

    for (std::size_t round = 0; round < spec.rounds(); ++round) {
        RoundRecord rec;
        rec.beta = spec.betas[round];
        rec.finetune_iters = spec.finetune_iters[round];
        for (Tensor& w : weights) {
            rec.sf_before.push_back(group_sf(w, opt.alpha));
            rec.thresholds.push_back(group_thresholds(w, rec.beta, opt.bits, opt.alpha));
            w = clipped(w, rec.thresholds.back(), opt.mode);
            rec.sf_after.push_back(group_sf(w, opt.alpha));
        }
        {
            std::ostringstream os;
            os.precision(9);
            os << "round=" << round << " beta=" << rec.beta;
            for (std::size_t t = 0; t < weights.size(); ++t)
                os << " sf" << t << "=" << join(rec.sf_before[t]) << "->" << join(rec.sf_after[t]);
            r.log.push_back(os.str());
        }

        std::vector<Tensor> effective = weights;
        const std::string phase = "finetune" + std::to_string(round);
        for (int it = 0; it < rec.finetune_iters; ++it) {
            for (std::size_t t = 0; t < weights.size(); ++t) effective[t] = clipped(weights[t], rec.thresholds[t], opt.mode);
            const double loss = loss_grad(effective, grad);
            check_loss(loss, it, phase.c_str());
            log_iter(phase.c_str(), it, loss);
            for (std::size_t t = 0; t < weights.size(); ++t) {
                const auto channels = static_cast<std::size_t>(weights[t].channels());
                for (std::size_t i = 0; i < weights[t].size(); ++i) {
                    const double thr = rec.thresholds[t][i % channels];
                    if (!std::isinf(thr) && !ste_passes(weights[t][i], thr, opt.mode)) continue;
                    weights[t][i] = static_cast<float>(weights[t][i] - opt.learning_rate * grad[t][i]);
                }
            }
        }
        for (std::size_t t = 0; t < weights.size(); ++t) weights[t] = clipped(weights[t], rec.thresholds[t], opt.mode);
        r.rounds.push_back(std::move(rec));
    }

    r.final_loss = loss_grad(weights, grad);
    check_loss(r.final_loss, spec.normal_iters, "final");
    for (const Tensor& w : weights) {
        QuantizedTensor q = quantize_weights(w, GroupScheme::ChannelWise, QuantMethod::NLQ, opt.bits, opt.alpha);
        r.quant_error += quant_error(w, q).total;
        r.quantized.push_back(std::move(q));
    }
    {
        std::ostringstream os;
        os.precision(9);
        os << "final loss=" << r.final_loss << " quant_error=" << r.quant_error;
        r.log.push_back(os.str());
    }
    r.weights = std::move(weights);
    return r;
}

}  // namespace fixq
