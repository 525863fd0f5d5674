#include "fixq/toy_model.hpp"

#include <cmath>
#include <string>

#include "fixq/errors.hpp"
#include "fixq/random.hpp"

namespace fixq {

namespace {

constexpr double kLeakySlope = 0.125;

Tensor random_weight(Rng& rng, int in_ch, int kernel, int out_ch, bool laplace) {
    Tensor t = Tensor::weight(in_ch, 1, kernel, out_ch);
    const double spread = 0.5 / std::sqrt(static_cast<double>(in_ch * kernel));
    for (float& v : t.data())
        v = static_cast<float>(laplace ? rng.laplace(spread) : rng.normal(0.0, spread));
    return t;
}

}  // namespace

ToyConvRegression::ToyConvRegression(ToyConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg_.length < 1 || cfg_.in_channels < 1 || cfg_.hidden < 1 || cfg_.out_channels < 1 ||
        cfg_.kernel < 1 || cfg_.kernel % 2 == 0 || cfg_.samples < 1)
        throw ContractError("toy model needs positive sizes and an odd kernel");
    Rng rng(seed);
    teacher_.push_back(random_weight(rng, cfg_.in_channels, cfg_.kernel, cfg_.hidden, true));
    teacher_.push_back(random_weight(rng, cfg_.hidden, cfg_.kernel, cfg_.out_channels, true));
    init_.push_back(random_weight(rng, cfg_.in_channels, cfg_.kernel, cfg_.hidden, false));
    init_.push_back(random_weight(rng, cfg_.hidden, cfg_.kernel, cfg_.out_channels, false));

    const auto L = static_cast<std::size_t>(cfg_.length);
    std::vector<double> pre, hid, out;
    for (int s = 0; s < cfg_.samples; ++s) {
        std::vector<double> x(L * cfg_.in_channels);
        for (double& v : x) v = rng.normal();
        inputs_.push_back(std::move(x));
    }
    targets_.assign(cfg_.samples, {});
    for (std::size_t s = 0; s < inputs_.size(); ++s) {
        forward(teacher_, s, pre, hid, out);
        for (double& v : out) v += rng.normal(0.0, cfg_.target_noise);
        targets_[s] = out;
    }
}

void ToyConvRegression::forward(std::span<const Tensor> w, std::size_t s, std::vector<double>& hidden_pre,
                                std::vector<double>& hidden, std::vector<double>& out) const {
    const int L = cfg_.length, Ci = cfg_.in_channels, H = cfg_.hidden, Co = cfg_.out_channels, K = cfg_.kernel;
    const int pad = K / 2;
    const auto& x = inputs_[s];
    const auto w1 = w[0].data();
    const auto w2 = w[1].data();
    hidden_pre.assign(static_cast<std::size_t>(L) * H, 0.0);
    for (int t = 0; t < L; ++t)
        for (int k = 0; k < K; ++k) {
            const int src = t + k - pad;
            if (src < 0 || src >= L) continue;
            for (int c = 0; c < Ci; ++c) {
                const double xv = x[src * Ci + c];
                const float* wrow = &w1[(c * K + k) * H];
                double* hrow = &hidden_pre[t * H];
                for (int o = 0; o < H; ++o) hrow[o] += xv * wrow[o];
            }
        }
    hidden.resize(hidden_pre.size());
    for (std::size_t i = 0; i < hidden.size(); ++i)
        hidden[i] = hidden_pre[i] > 0.0 ? hidden_pre[i] : kLeakySlope * hidden_pre[i];
    out.assign(static_cast<std::size_t>(L) * Co, 0.0);
    for (int t = 0; t < L; ++t)
        for (int k = 0; k < K; ++k) {
            const int src = t + k - pad;
            if (src < 0 || src >= L) continue;
            for (int o = 0; o < H; ++o) {
                const double hv = hidden[src * H + o];
                const float* wrow = &w2[(o * K + k) * Co];
                double* orow = &out[t * Co];
                for (int o2 = 0; o2 < Co; ++o2) orow[o2] += hv * wrow[o2];
            }
        }
}

double ToyConvRegression::loss(std::span<const Tensor> weights) const {
    std::vector<double> pre, hid, out;
    double sum = 0.0;
    for (std::size_t s = 0; s < inputs_.size(); ++s) {
        forward(weights, s, pre, hid, out);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - targets_[s][i];
            sum += d * d;
        }
    }
    return sum / static_cast<double>(inputs_.size() * targets_[0].size());
}

double ToyConvRegression::loss_and_gradient(std::span<const Tensor> weights,
                                            std::vector<std::vector<double>>& grad) const {
    if (weights.size() != 2) throw ContractError("toy model has exactly two weight tensors");
    const int L = cfg_.length, Ci = cfg_.in_channels, H = cfg_.hidden, Co = cfg_.out_channels, K = cfg_.kernel;
    const int pad = K / 2;
    grad.assign(2, {});
    grad[0].assign(weights[0].size(), 0.0);
    grad[1].assign(weights[1].size(), 0.0);
    const auto w2 = weights[1].data();
    const double norm = static_cast<double>(inputs_.size() * targets_[0].size());

    std::vector<double> pre, hid, out, dout, dh;
    double sum = 0.0;
    for (std::size_t s = 0; s < inputs_.size(); ++s) {
        forward(weights, s, pre, hid, out);
        const auto& x = inputs_[s];
        dout.resize(out.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - targets_[s][i];
            sum += d * d;
            dout[i] = 2.0 * d / norm;
        }
        dh.assign(hid.size(), 0.0);
        for (int t = 0; t < L; ++t)
            for (int k = 0; k < K; ++k) {
                const int src = t + k - pad;
                if (src < 0 || src >= L) continue;
                for (int o = 0; o < H; ++o) {
                    const double hv = hid[src * H + o];
                    double acc = 0.0;
                    for (int o2 = 0; o2 < Co; ++o2) {
                        const double g = dout[t * Co + o2];
                        grad[1][(o * K + k) * Co + o2] += hv * g;
                        acc += g * w2[(o * K + k) * Co + o2];
                    }
                    dh[src * H + o] += acc;
                }
            }
        for (std::size_t i = 0; i < dh.size(); ++i)
            if (pre[i] <= 0.0) dh[i] *= kLeakySlope;
        for (int t = 0; t < L; ++t)
            for (int k = 0; k < K; ++k) {
                const int src = t + k - pad;
                if (src < 0 || src >= L) continue;
                for (int c = 0; c < Ci; ++c) {
                    const double xv = x[src * Ci + c];
                    double* grow = &grad[0][(c * K + k) * H];
                    for (int o = 0; o < H; ++o) grow[o] += xv * dh[t * H + o];
                }
            }
    }
    return sum / norm;
}

}  // namespace fixq
