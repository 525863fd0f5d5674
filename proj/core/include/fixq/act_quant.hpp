#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fixq/bundle.hpp"
#include "fixq/codebook.hpp"
#include "fixq/quantized_tensor.hpp"
#include "fixq/tensor.hpp"

namespace fixq {

enum class ActivationKind { ReLU, LeakyReLU, None };

inline constexpr double kLeakySlope = 0.125;

std::string_view to_string(ActivationKind k);
ActivationKind activation_from_string(std::string_view s);

/// 1.0 after ReLU (one-sided grid), 0.5 otherwise.
double activation_alpha(ActivationKind k) noexcept;
bool activation_signed(ActivationKind k) noexcept;

/// Range-multiplexed codebook. sel 3 is uniform on [0, alpha); sel 2, 1, 0
/// narrow the top of the range to 7/8, 3/4 and 5/8 of alpha and spend the
/// freed levels on a doubled precision near zero.
Codebook mux_codebook(int range_sel, int bits, double alpha, bool is_signed);

/// Interval of max_scaled / alpha among [.5,.625), [.625,.75), [.75,.875),
/// [.875,1). Zero maps to 3.
int range_select(double max_scaled, double alpha);

/// Per-channel activation calibration.
struct CalibrationProfile {
    std::string name;
    ActivationKind kind = ActivationKind::None;
    double alpha = 0.5;
    bool multiplexed = true;  // false: uniform codebook for every channel
    std::vector<int> sf_exponents;
    std::vector<double> max_abs;     // max |O| over the calibration samples
    std::vector<double> max_scaled;  // max_abs * sf
    std::vector<std::uint8_t> range_sel;
    std::vector<std::uint64_t> clip_count;
    std::optional<MeanCoding> mean;

    std::size_t channels() const noexcept { return sf_exponents.size(); }
    /// Codebook family or id stored in quantized tensors for this profile.
    std::string codebook_id() const;
    const Codebook& channel_codebook(std::size_t c) const;
};

/// Max-reduces |O| per channel over every sample.
CalibrationProfile calibrate(std::span<const Tensor> samples, ActivationKind kind, bool multiplexed = true,
                             std::string name = {});

/// Scales, clips and quantizes each channel with its selected codebook.
/// Elements beyond the codebook range are counted into prof.clip_count.
QuantizedTensor quantize_activations(const Tensor& t, CalibrationProfile& prof);

struct IntervalStats {
    std::string layer;
    std::size_t count = 0;                // non-zero (sample, channel) maxima
    std::array<double, 4> probability{};  // per range_sel
};

/// Distribution of per-sample channel maxima (after scaling) over the four
/// intervals.
IntervalStats interval_stats(std::span<const Tensor> samples, ActivationKind kind, std::string layer = {});
std::string format_interval_table(std::span<const IntervalStats> rows);

ProfileRecord to_record(const CalibrationProfile& p);
CalibrationProfile profile_from_record(const ProfileRecord& r);

}  // namespace fixq
