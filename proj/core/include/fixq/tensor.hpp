#pragma once

#include <cstddef>
#include <cstdint>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fixq {

/// Role of one tensor axis. Weights are laid out (I, H, W, O); activations
/// are laid out (OH, OW, O). Both are row-major, so the channel axis O is
/// always the fastest-varying one.
enum class Axis : std::uint8_t { I, H, W, O, OH, OW };

std::string_view to_string(Axis a);
Axis axis_from_string(std::string_view s);

enum class Layout : std::uint8_t { Weight, Activation };

/// Dense float32 tensor with named axis roles.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::int64_t> shape, std::vector<Axis> roles, std::vector<float> data);

    static Tensor zeros(std::vector<std::int64_t> shape, std::vector<Axis> roles);
    /// Weight tensor with shape (in_ch, kh, kw, out_ch).
    static Tensor weight(std::int64_t in_ch, std::int64_t kh, std::int64_t kw, std::int64_t out_ch,
                         std::vector<float> data = {});
    /// Activation tensor with shape (height, width, channels).
    static Tensor activation(std::int64_t height, std::int64_t width, std::int64_t channels,
                             std::vector<float> data = {});

    const std::vector<std::int64_t>& shape() const noexcept { return shape_; }
    const std::vector<Axis>& roles() const noexcept { return roles_; }
    Layout layout() const noexcept { return layout_; }

    std::size_t size() const noexcept { return data_.size(); }
    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    /// Number of channels along the O axis.
    std::int64_t channels() const noexcept { return shape_.back(); }

    float& operator[](std::size_t i) noexcept { return data_[i]; }
    float operator[](std::size_t i) const noexcept { return data_[i]; }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::int64_t> shape_;
    std::vector<Axis> roles_;
    std::vector<float> data_;
    Layout layout_ = Layout::Activation;
};

/// Throws ContractError unless roles are exactly (I,H,W,O) or (OH,OW,O).
Layout layout_of(std::span<const Axis> roles);

std::size_t element_count(std::span<const std::int64_t> shape);

enum class GroupScheme : std::uint8_t { ChannelWise, LayerWise };

std::string_view to_string(GroupScheme s);
GroupScheme scheme_from_string(std::string_view s);

/// Strided view over the elements of one group: indices offset + k*stride
/// for k in [0, count).
struct GroupView {
    std::size_t offset = 0;
    std::size_t stride = 1;
    std::size_t count = 0;

    std::size_t index(std::size_t k) const noexcept { return offset + k * stride; }

    template <std::ranges::random_access_range R>
    auto gather(const R& values) const {
        std::vector<std::remove_cv_t<std::ranges::range_value_t<R>>> out(count);
        for (std::size_t k = 0; k < count; ++k) out[k] = values[index(k)];
        return out;
    }

    friend bool operator==(const GroupView&, const GroupView&) = default;
};

/// Groups for a tensor of the given shape/roles. ChannelWise yields one group
/// per output channel; LayerWise yields a single group.
std::vector<GroupView> group(std::span<const std::int64_t> shape, std::span<const Axis> roles,
                             GroupScheme scheme);
std::vector<GroupView> group(const Tensor& t, GroupScheme scheme);

/// Index of the group owning a flat element index.
std::size_t group_of(std::size_t flat_index, std::size_t channels, GroupScheme scheme) noexcept;

}  // namespace fixq
