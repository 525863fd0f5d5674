#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fixq/tensor.hpp"

namespace fixq {

struct ToyConfig {
    int length = 32;
    int in_channels = 4;
    int hidden = 16;
    int out_channels = 8;
    int kernel = 5;
    int samples = 8;
    double target_noise = 0.01;
};

/// Two-layer 1-D convolutional regression network (LeakyReLU 0.125 between
/// the layers) trained with MSE against a random teacher network. Weights
/// are (I, 1, K, O) tensors so they group exactly like conv kernels.
class ToyConvRegression {
public:
    ToyConvRegression(ToyConfig cfg, std::uint64_t seed);

    const ToyConfig& config() const noexcept { return cfg_; }

    /// Student initialization drawn from the constructor seed.
    std::vector<Tensor> initial_weights() const { return init_; }
    const std::vector<Tensor>& teacher_weights() const noexcept { return teacher_; }

    double loss(std::span<const Tensor> weights) const;

    /// Loss plus exact gradient, one flat array per weight tensor.
    double loss_and_gradient(std::span<const Tensor> weights, std::vector<std::vector<double>>& grad) const;

private:
    void forward(std::span<const Tensor> w, std::size_t s, std::vector<double>& hidden_pre,
                 std::vector<double>& hidden, std::vector<double>& out) const;

    ToyConfig cfg_;
    std::vector<std::vector<double>> inputs_;   // per sample, length x in_channels
    std::vector<std::vector<double>> targets_;  // per sample, length x out_channels
    std::vector<Tensor> teacher_;
    std::vector<Tensor> init_;
};

}  // namespace fixq
