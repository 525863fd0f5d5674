#include "fixq/tensor.hpp"

#include <array>
#include <algorithm>

#include "fixq/errors.hpp"

namespace fixq {

namespace {

constexpr std::array<Axis, 4> kWeightRoles{Axis::I, Axis::H, Axis::W, Axis::O};
constexpr std::array<Axis, 3> kActivationRoles{Axis::OH, Axis::OW, Axis::O};

std::string shape_string(std::span<const std::int64_t> shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

}  // namespace

std::string_view to_string(Axis a) {
    switch (a) {
        case Axis::I: return "I";
        case Axis::H: return "H";
        case Axis::W: return "W";
        case Axis::O: return "O";
        case Axis::OH: return "OH";
        case Axis::OW: return "OW";
    }
    return "?";
}

Axis axis_from_string(std::string_view s) {
    for (Axis a : {Axis::I, Axis::H, Axis::W, Axis::O, Axis::OH, Axis::OW})
        if (to_string(a) == s) return a;
    throw FormatError("unknown axis role '" + std::string(s) + "'");
}

std::string_view to_string(GroupScheme s) {
    return s == GroupScheme::ChannelWise ? "cw" : "lw";
}

GroupScheme scheme_from_string(std::string_view s) {
    if (s == "cw") return GroupScheme::ChannelWise;
    if (s == "lw") return GroupScheme::LayerWise;
    throw FormatError("unknown grouping scheme '" + std::string(s) + "'");
}

Layout layout_of(std::span<const Axis> roles) {
    if (std::ranges::equal(roles, kWeightRoles)) return Layout::Weight;
    if (std::ranges::equal(roles, kActivationRoles)) return Layout::Activation;
    throw ContractError("unsupported axis roles: expected (I,H,W,O) or (OH,OW,O)");
}

std::size_t element_count(std::span<const std::int64_t> shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

Tensor::Tensor(std::vector<std::int64_t> shape, std::vector<Axis> roles, std::vector<float> data)
    : shape_(std::move(shape)), roles_(std::move(roles)), data_(std::move(data)) {
    if (shape_.size() != roles_.size())
        throw ContractError("tensor rank " + std::to_string(shape_.size()) +
                            " does not match axis role count " + std::to_string(roles_.size()));
    layout_ = layout_of(roles_);
    for (auto d : shape_)
        if (d < 1) throw ContractError("tensor dimension must be >= 1 in " + shape_string(shape_));
    if (element_count(shape_) != data_.size())
        throw ContractError("tensor shape " + shape_string(shape_) + " needs " +
                            std::to_string(element_count(shape_)) + " values, got " +
                            std::to_string(data_.size()));
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape, std::vector<Axis> roles) {
    const auto n = element_count(shape);
    return Tensor(std::move(shape), std::move(roles), std::vector<float>(n, 0.0f));
}

Tensor Tensor::weight(std::int64_t in_ch, std::int64_t kh, std::int64_t kw, std::int64_t out_ch,
                      std::vector<float> data) {
    std::vector<std::int64_t> shape{in_ch, kh, kw, out_ch};
    if (data.empty()) data.assign(element_count(shape), 0.0f);
    return Tensor(std::move(shape), {kWeightRoles.begin(), kWeightRoles.end()}, std::move(data));
}

Tensor Tensor::activation(std::int64_t height, std::int64_t width, std::int64_t channels,
                          std::vector<float> data) {
    std::vector<std::int64_t> shape{height, width, channels};
    if (data.empty()) data.assign(element_count(shape), 0.0f);
    return Tensor(std::move(shape), {kActivationRoles.begin(), kActivationRoles.end()},
                  std::move(data));
}

std::vector<GroupView> group(std::span<const std::int64_t> shape, std::span<const Axis> roles,
                             GroupScheme scheme) {
    layout_of(roles);
    const std::size_t n = element_count(shape);
    if (scheme == GroupScheme::LayerWise) return {GroupView{0, 1, n}};
    const auto channels = static_cast<std::size_t>(shape.back());
    std::vector<GroupView> views;
    views.reserve(channels);
    for (std::size_t c = 0; c < channels; ++c) views.push_back({c, channels, n / channels});
    return views;
}

std::vector<GroupView> group(const Tensor& t, GroupScheme scheme) {
    return group(t.shape(), t.roles(), scheme);
}

std::size_t group_of(std::size_t flat_index, std::size_t channels, GroupScheme scheme) noexcept {
    return scheme == GroupScheme::LayerWise ? 0 : flat_index % channels;
}

}  // namespace fixq
