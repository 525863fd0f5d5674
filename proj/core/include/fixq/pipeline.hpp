#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fixq/act_quant.hpp"
#include "fixq/bundle.hpp"
#include "fixq/fxinfer.hpp"
#include "fixq/mean_removal.hpp"

namespace fixq {

struct NetworkLayer {
    std::string name;
    LayerSpec spec;
    QuantizedTensor weights;
    bool main_path = true;  // hyper-path outputs use the uniform codebook
};

/// Layers ordered by their "order" attribute. Entry attributes: kind
/// (conv | conv_transpose), stride, padding, output_padding, activation
/// (relu | leaky_relu | none), path (main | hyper). f32 weights are
/// quantized channel-wise with the NLQ codebook.
std::vector<NetworkLayer> load_network(const TensorBundle& weights, int bits = 8);

/// (OH, OW, O) after every layer for an H x W input.
std::vector<std::array<std::int64_t, 3>> propagate_shapes(std::span<const NetworkLayer> net, std::int64_t height,
                                                          std::int64_t width);

inline constexpr const char* kInputProfile = "input";
inline constexpr const char* kOutputProfile = "output";

struct CalibrationOptions {
    double mean_threshold = 3.0;  // |mean| / std needed to treat a channel as mean-coded
    bool mean_removal = true;
};

/// Sequential calibration in quantized arithmetic: the input profile, one
/// profile per hidden layer output (named after the layer) and an "output"
/// profile carrying the mean-coded channel's regression, if any.
TensorBundle calibrate_network(std::span<const NetworkLayer> net, std::span<const Tensor> images,
                               const CalibrationOptions& opt = {});

struct LayerReport {
    std::string name;
    std::array<std::int64_t, 3> shape{};
    std::vector<int> sf_exponents;  // of the quantized output (empty for the final layer)
    std::uint64_t clip_count = 0;
    std::int64_t accumulator_peak = 0;
};

struct PipelineResult {
    std::vector<LayerReport> layers;
    std::vector<std::int32_t> y_hat;  // integer code, (OH, OW, O) row-major
    QuantizedTensor y_q;              // int8 storage with mean-coded channel
    std::uint64_t y_saturated = 0;
    std::uint64_t input_clip_count = 0;
    std::optional<MeanRemovedChannel> mean;
    std::vector<Tensor> activations;  // decoded quantized activation feeding each layer

    std::string report() const;
};

PipelineResult pipeline_demo(const Tensor& input, std::span<const NetworkLayer> net, const TensorBundle& profiles);

}  // namespace fixq
