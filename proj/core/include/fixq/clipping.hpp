#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace fixq {

/// How the clip threshold applies to a group. Magnitude clips |w| and keeps
/// the sign; UpperOnly clips w from above only.
enum class ClipMode { Magnitude, UpperOnly };

std::string_view to_string(ClipMode m);
ClipMode clip_mode_from_string(std::string_view s);

/// epsilon = 2^(floor(log2 max|w|) - (bits-1)) / alpha, the margin that
/// leaves the clipped group maximum exactly one top-piece step below alpha
/// after the doubled scale factor.
double clip_epsilon(std::span<const float> group, int bits = 8, double alpha = 0.5);

/// T = 2^floor(log2 max|w|) * beta - epsilon, rounded to float.
double clip_threshold(std::span<const float> group, double beta, int bits = 8, double alpha = 0.5);

/// Clip every element against a fixed threshold.
std::vector<float> apply_clip(std::span<const float> group, double threshold, ClipMode mode = ClipMode::Magnitude);

/// One clipping round: threshold from the group's current maximum, then clip.
std::vector<float> clip_weights(std::span<const float> group, double beta, int bits = 8, double alpha = 0.5,
                                ClipMode mode = ClipMode::Magnitude);

/// Straight-through estimator: true where the gradient passes.
bool ste_passes(float w, double threshold, ClipMode mode = ClipMode::Magnitude) noexcept;

/// grad * indicator(w within threshold), element-wise.
std::vector<double> ste_mask(std::span<const float> w, std::span<const double> grad, double threshold,
                             ClipMode mode = ClipMode::Magnitude);

}  // namespace fixq
