#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fixq/quantized_tensor.hpp"
#include "fixq/tensor.hpp"

namespace fixq {

using Attributes = std::map<std::string, std::string>;

/// One named tensor in a bundle: either float32 (f32) or quantized (q8).
struct BundleEntry {
    std::string name;
    std::variant<Tensor, QuantizedTensor> value;
    Attributes attrs;

    bool is_quantized() const noexcept { return std::holds_alternative<QuantizedTensor>(value); }
    const Tensor& tensor() const;
    const QuantizedTensor& quantized() const;

    friend bool operator==(const BundleEntry&, const BundleEntry&) = default;
};

/// Per-channel calibration record (serialized calibration profile).
struct ProfileRecord {
    std::string name;
    std::vector<std::int8_t> sf_exponents;
    std::vector<std::uint8_t> mux;  // empty when the layer is not multiplexed
    std::vector<double> max_abs;
    std::optional<MeanCoding> mean;
    Attributes attrs;

    friend bool operator==(const ProfileRecord&, const ProfileRecord&) = default;
};

/// A directory holding manifest.json plus one raw little-endian payload file
/// per tensor, scale-factor, mux and lookup-table array.
struct TensorBundle {
    std::vector<BundleEntry> entries;
    std::vector<ProfileRecord> profiles;
    Attributes attrs;

    const BundleEntry* find(std::string_view name) const noexcept;
    const ProfileRecord* find_profile(std::string_view name) const noexcept;
    BundleEntry& add(std::string name, Tensor t, Attributes attrs = {});
    BundleEntry& add(std::string name, QuantizedTensor q, Attributes attrs = {});

    friend bool operator==(const TensorBundle&, const TensorBundle&) = default;
};

inline constexpr const char* kManifestName = "manifest.json";

/// Writes the bundle directory (created if needed). Output bytes depend only
/// on the in-memory value.
void write_bundle(const TensorBundle& b, const std::filesystem::path& dir);

/// Throws FormatError naming the offending entry on any inconsistency.
TensorBundle read_bundle(const std::filesystem::path& dir);

/// Serialized manifest text, as written to manifest.json.
std::string manifest_text(const TensorBundle& b);

}  // namespace fixq
