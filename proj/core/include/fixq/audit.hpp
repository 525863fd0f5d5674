#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fixq/bundle.hpp"

namespace fixq {

struct NetworkLayer;

/// One layer of an accounted network. Activation dimensions are derived:
/// a convolution maps H to ceil(H / stride), a transposed one to H * stride,
/// unless out_hw is given. in_hw restarts the spatial chain (e.g. the
/// synthesis transform input in a decoder config).
struct AuditLayer {
    std::string name;
    std::int64_t I = 1, H = 1, W = 1, O = 1;
    std::int64_t stride = 1;
    bool transpose = false;
    bool has_sf = true;   // activation scale factors (none after the last AT/ST layer)
    bool has_mux = false; // main-path activations
    bool gdn = false;     // normalization parameters: weights only, excludable
    std::optional<std::array<std::int64_t, 2>> in_hw;
    std::optional<std::array<std::int64_t, 2>> out_hw;
};

struct NetworkConfig {
    std::string name;
    std::string role = "encoder";  // encoder | decoder
    std::int64_t in_h = 0, in_w = 0;
    std::vector<AuditLayer> layers;
};

NetworkConfig parse_network_config(std::string_view json_text);
NetworkConfig load_network_config(const std::filesystem::path& path);
std::string network_config_json(const NetworkConfig& cfg);

/// Config of a loaded network for an H x W input; the last layer has no
/// activation scale factors, main-path layers carry the multiplexer.
NetworkConfig config_from_network(std::span<const NetworkLayer> net, std::int64_t h, std::int64_t w,
                                  std::string name = "network");

enum class CostMode { Original, Proposed };

std::string_view to_string(CostMode m);

struct AuditOptions {
    bool exclude_gdn = false;
};

/// Per-layer accounting in bits.
struct LayerCost {
    std::string name;
    std::int64_t OH = 0, OW = 0;
    std::uint64_t weight_bits = 0;       // 8 bits per weight
    std::uint64_t weight_sf_bits = 0;    // 4 bits per output channel
    std::uint64_t act_bits = 0;          // 8 bits per activation
    std::uint64_t act_sf_bits = 0;       // 4 bits per channel when has_sf
    std::uint64_t mux_bits = 0;          // 2 bits per channel when has_mux
    std::uint64_t weight_bits_f32 = 0;
    std::uint64_t act_bits_f32 = 0;
    std::uint64_t macs = 0;
    bool excluded = false;
};

std::vector<LayerCost> layer_costs(const NetworkConfig& cfg, const AuditOptions& opt = {});

std::uint64_t weight_cost_bits(const NetworkConfig& cfg, CostMode mode, const AuditOptions& opt = {});
std::uint64_t activation_cost_bits(const NetworkConfig& cfg, CostMode mode, const AuditOptions& opt = {});
double weight_cost_bytes(const NetworkConfig& cfg, CostMode mode, const AuditOptions& opt = {});
double activation_cost_bytes(const NetworkConfig& cfg, CostMode mode, const AuditOptions& opt = {});

inline constexpr double kBytesPerMB = 1e6;
inline double bits_to_mb(std::uint64_t bits) { return static_cast<double>(bits) / 8.0 / kBytesPerMB; }

struct MeanRemovalReport {
    std::uint64_t elements = 0;
    std::uint64_t before_bits = 0;
    std::uint64_t after_bits = 0;
    double saving = 0.0;  // fraction of before_bits, may be negative
};

MeanRemovalReport mean_removal_report(std::uint64_t elements, int bits_per_element, int mean_bits = 8);

enum class Precision { Int8, Int32, Fp16, Fp32 };

std::string_view to_string(Precision p);
Precision precision_from_string(std::string_view s);

/// Energy per operation in hundredths of a picojoule.
struct EnergyCost {
    std::uint64_t add_centi_pj = 0;
    std::uint64_t mult_centi_pj = 0;
};

EnergyCost energy_cost(Precision p) noexcept;
double mac_energy_pj(Precision p) noexcept;

std::uint64_t mac_count(const NetworkConfig& cfg);
/// MACs * (mult + add), exact in hundredths of a picojoule.
std::uint64_t energy_centi_pj(const NetworkConfig& cfg, Precision p);
double energy_estimate_pj(const NetworkConfig& cfg, Precision p);

struct AuditReport {
    std::string name;
    std::vector<LayerCost> layers;
    std::uint64_t weight_bits = 0, weight_sf_bits = 0, weight_bits_f32 = 0;
    std::uint64_t act_bits = 0, act_sf_bits = 0, mux_bits = 0, act_bits_f32 = 0;
    std::uint64_t macs = 0;
    std::vector<std::string> excluded;
    std::vector<std::string> warnings;
};

AuditReport audit_network(const NetworkConfig& cfg, const AuditOptions& opt = {});

/// Warnings for stored scale exponents outside the 4-bit range [-8, 7].
std::vector<std::string> sf_range_warnings(const TensorBundle& b);

std::string format_audit_text(const AuditReport& r);
std::string format_audit_json(const AuditReport& r);
std::string format_mean_removal(const MeanRemovalReport& r);

}  // namespace fixq
