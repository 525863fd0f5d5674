#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fixq/quantized_tensor.hpp"
#include "fixq/tensor.hpp"

namespace fixq {

/// mu = a * x_mean + b for one output channel.
struct MeanParams {
    std::int64_t channel = 0;
    double a = 0.0;
    double b = 0.0;
    double r2 = 0.0;

    friend bool operator==(const MeanParams&, const MeanParams&) = default;
};

/// Ordinary least squares of channel means on image means.
MeanParams fit_mean_channel(std::span<const double> image_means, std::span<const double> channel_means,
                            std::int64_t channel = 0);

/// Same fit taking the mean of each image tensor and of `channel` in each output.
MeanParams fit_mean_channel(std::span<const Tensor> images, std::span<const Tensor> outputs, std::int64_t channel);

double tensor_mean(const Tensor& t);
double channel_mean(const Tensor& t, std::int64_t channel);

/// Channel with the largest |mean| / std over the pooled outputs, if that
/// ratio exceeds `threshold`.
std::optional<std::int64_t> detect_mean_channel(std::span<const Tensor> outputs, double threshold = 3.0);

/// Bits of a signed integer range holding magnitudes up to m:
/// ceil(log2(m + 1)) + 1.
int bitwidth_of(std::uint64_t m);

/// round(a * x_mean + b), ties away from zero.
std::int32_t predict_mean(const MeanParams& mp, double x_mean);

struct MeanRemovedChannel {
    std::vector<std::int32_t> offsets;  // y_hat - mean
    std::int32_t mean = 0;
    int bits_before = 0;
    int bits_after = 0;
    bool mean_fits_int8 = true;
};

MeanRemovedChannel mean_removed_quantize(std::span<const std::int32_t> y_hat, const MeanParams& mp, double x_mean);
std::vector<std::int32_t> restore_channel(const MeanRemovedChannel& m);

MeanCoding to_mean_coding(const MeanParams& mp, std::int32_t predicted);

}  // namespace fixq
