#pragma once

#include <concepts>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fixq/clipping.hpp"
#include "fixq/quantized_tensor.hpp"
#include "fixq/tensor.hpp"

namespace fixq {

/// Weight clipping fine-tuning schedule: normal_iters plain SGD steps, then
/// one clipping round per beta, each followed by finetune_iters[r] steps.
struct ClipSpec {
    int normal_iters = 0;
    std::vector<double> betas;
    std::vector<int> finetune_iters;

    std::size_t rounds() const noexcept { return betas.size(); }
    void validate() const;
};

/// One round at beta = 1 with 1.4e5 fine-tuning iterations, times `scale`.
ClipSpec low_rate_preset(int normal_iters, double scale = 1.0);
/// Three rounds at beta = (1, sqrt 2, 1) with (8.6e4, 8.6e4, 1.4e5)
/// fine-tuning iterations, times `scale`.
ClipSpec high_rate_preset(int normal_iters, double scale = 1.0);
ClipSpec preset_by_name(const std::string& name, int normal_iters, double scale);

template <typename M>
concept DifferentiableModel = requires(const M& m, std::span<const Tensor> w, std::vector<std::vector<double>>& g) {
    { m.loss_and_gradient(w, g) } -> std::convertible_to<double>;
};

struct TrainOptions {
    double learning_rate = 0.05;
    int bits = 8;
    double alpha = 0.5;
    ClipMode mode = ClipMode::Magnitude;
    int log_every = 0;  // 0 disables per-iteration lines
};

struct RoundRecord {
    double beta = 1.0;
    std::vector<std::vector<double>> thresholds;       // [tensor][group]
    std::vector<std::vector<int>> sf_before;           // [tensor][group]
    std::vector<std::vector<int>> sf_after;            // [tensor][group], right after clipping
    int finetune_iters = 0;
};

struct WcftResult {
    std::vector<Tensor> weights;             // effective (clipped) weights after training
    std::vector<QuantizedTensor> quantized;  // channel-wise NLQ of `weights`
    std::vector<RoundRecord> rounds;
    double final_loss = 0.0;
    double quant_error = 0.0;                // summed over tensors
    std::vector<std::string> log;
};

/// Type-erased loss/gradient callback used by the trainer.
using LossGradFn = std::function<double(std::span<const Tensor>, std::vector<std::vector<double>>&)>;

WcftResult wcft_train(const LossGradFn& loss_grad, std::vector<Tensor> weights, const ClipSpec& spec,
                      const TrainOptions& opt);

template <DifferentiableModel M>
WcftResult wcft_train(const M& model, std::vector<Tensor> weights, const ClipSpec& spec, const TrainOptions& opt) {
    return wcft_train(
        LossGradFn([&model](std::span<const Tensor> w, std::vector<std::vector<double>>& g) {
            return model.loss_and_gradient(w, g);
        }),
        std::move(weights), spec, opt);
}

/// Per-group clip thresholds of a weight tensor for one round.
std::vector<double> group_thresholds(const Tensor& w, double beta, int bits, double alpha);

}  // namespace fixq
