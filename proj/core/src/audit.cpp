#include "fixq/audit.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fixq/errors.hpp"
#include "fixq/pipeline.hpp"

namespace fixq {

using json = nlohmann::json;

namespace {

std::optional<std::array<std::int64_t, 2>> hw_field(const json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    const auto v = j.at(key).get<std::vector<std::int64_t>>();
    if (v.size() != 2 || v[0] < 1 || v[1] < 1) throw FormatError(std::string("'") + key + "' must be [h, w] >= 1");
    return std::array<std::int64_t, 2>{v[0], v[1]};
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::uint64_t u(std::int64_t v) { return static_cast<std::uint64_t>(v); }

}  // namespace

NetworkConfig parse_network_config(std::string_view text) {
    NetworkConfig cfg;
    try {
        const json j = json::parse(text);
        cfg.name = j.value("name", std::string("network"));
        cfg.role = j.value("role", std::string("encoder"));
        if (cfg.role != "encoder" && cfg.role != "decoder")
            throw FormatError("role must be encoder or decoder, got '" + cfg.role + "'");
        if (j.contains("input")) {
            const auto in = j.at("input").get<std::vector<std::int64_t>>();
            if (in.size() != 2 || in[0] < 1 || in[1] < 1) throw FormatError("'input' must be [h, w] >= 1");
            cfg.in_h = in[0];
            cfg.in_w = in[1];
        }
        for (const json& jl : j.at("layers")) {
            AuditLayer l;
            l.name = jl.at("name").get<std::string>();
            l.I = jl.at("I").get<std::int64_t>();
            l.H = jl.value("H", std::int64_t{1});
            l.W = jl.value("W", std::int64_t{1});
            l.O = jl.at("O").get<std::int64_t>();
            l.stride = jl.value("stride", std::int64_t{1});
            l.transpose = jl.value("transpose", false);
            l.has_sf = jl.value("has_sf", true);
            l.has_mux = jl.value("has_mux", false);
            l.gdn = jl.value("gdn", false);
            l.in_hw = hw_field(jl, "in_hw");
            l.out_hw = hw_field(jl, "out_hw");
            if (l.I < 1 || l.H < 1 || l.W < 1 || l.O < 1 || l.stride < 1)
                throw FormatError("layer '" + l.name + "': dimensions and stride must be >= 1");
            cfg.layers.push_back(std::move(l));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("network config: ") + e.what());
    }
    return cfg;
}

NetworkConfig load_network_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open network config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_network_config(ss.str());
}

std::string network_config_json(const NetworkConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["role"] = cfg.role;
    if (cfg.in_h > 0) j["input"] = {cfg.in_h, cfg.in_w};
    j["layers"] = json::array();
    for (const AuditLayer& l : cfg.layers) {
        json jl{{"name", l.name}, {"I", l.I},         {"H", l.H},           {"W", l.W},
                {"O", l.O},       {"stride", l.stride}, {"transpose", l.transpose},
                {"has_sf", l.has_sf}, {"has_mux", l.has_mux}, {"gdn", l.gdn}};
        if (l.in_hw) jl["in_hw"] = *l.in_hw;
        if (l.out_hw) jl["out_hw"] = *l.out_hw;
        j["layers"].push_back(std::move(jl));
    }
    return j.dump(2);
}

NetworkConfig config_from_network(std::span<const NetworkLayer> net, std::int64_t h, std::int64_t w,
                                  std::string name) {
    NetworkConfig cfg;
    cfg.name = std::move(name);
    cfg.in_h = h;
    cfg.in_w = w;
    const auto shapes = propagate_shapes(net, h, w);
    for (std::size_t i = 0; i < net.size(); ++i) {
        const NetworkLayer& n = net[i];
        AuditLayer l;
        l.name = n.name;
        l.I = n.weights.shape[0];
        l.H = n.weights.shape[1];
        l.W = n.weights.shape[2];
        l.O = n.weights.shape[3];
        l.stride = n.spec.stride;
        l.transpose = n.spec.kind == LayerKind::ConvTranspose;
        l.has_sf = i + 1 < net.size();
        l.has_mux = l.has_sf && n.main_path;
        l.out_hw = std::array<std::int64_t, 2>{shapes[i][0], shapes[i][1]};
        cfg.layers.push_back(std::move(l));
    }
    return cfg;
}

std::string_view to_string(CostMode m) { return m == CostMode::Original ? "original" : "proposed"; }

std::vector<LayerCost> layer_costs(const NetworkConfig& cfg, const AuditOptions& opt) {
    std::vector<LayerCost> out;
    std::int64_t h = cfg.in_h, w = cfg.in_w;
    for (const AuditLayer& l : cfg.layers) {
        LayerCost c;
        c.name = l.name;
        c.excluded = l.gdn && opt.exclude_gdn;
        const std::uint64_t params = u(l.I) * u(l.H) * u(l.W) * u(l.O);
        if (!c.excluded) {
            c.weight_bits = params * 8;
            c.weight_sf_bits = u(l.O) * 4;
            c.weight_bits_f32 = params * 32;
        }
        if (!l.gdn) {
            if (l.in_hw) {
                h = (*l.in_hw)[0];
                w = (*l.in_hw)[1];
            }
            if (l.out_hw) {
                h = (*l.out_hw)[0];
                w = (*l.out_hw)[1];
            } else {
                if (h < 1 || w < 1)
                    throw ContractError("layer '" + l.name + "': activation size unknown (set input or out_hw)");
                h = l.transpose ? h * l.stride : ceil_div(h, l.stride);
                w = l.transpose ? w * l.stride : ceil_div(w, l.stride);
            }
            c.OH = h;
            c.OW = w;
            const std::uint64_t elems = u(h) * u(w) * u(l.O);
            c.act_bits = elems * 8;
            c.act_bits_f32 = elems * 32;
            c.act_sf_bits = l.has_sf ? u(l.O) * 4 : 0;
            c.mux_bits = l.has_mux ? u(l.O) * 2 : 0;
            c.macs = elems * u(l.I) * u(l.H) * u(l.W);
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::uint64_t weight_cost_bits(const NetworkConfig& cfg, CostMode mode, const AuditOptions& opt) {
    std::uint64_t bits = 0;
    for (const LayerCost& c : layer_costs(cfg, opt))
        bits += mode == CostMode::Original ? c.weight_bits_f32 : c.weight_bits + c.weight_sf_bits;
    return bits;
}

std::uint64_t activation_cost_bits(const NetworkConfig& cfg, CostMode mode, const AuditOptions& opt) {
    std::uint64_t bits = 0;
    for (const LayerCost& c : layer_costs(cfg, opt))
        bits += mode == CostMode::Original ? c.act_bits_f32 : c.act_bits + c.act_sf_bits + c.mux_bits;
    return bits;
}

double weight_cost_bytes(const NetworkConfig& cfg, CostMode mode, const AuditOptions& opt) {
    return static_cast<double>(weight_cost_bits(cfg, mode, opt)) / 8.0;
}

double activation_cost_bytes(const NetworkConfig& cfg, CostMode mode, const AuditOptions& opt) {
    return static_cast<double>(activation_cost_bits(cfg, mode, opt)) / 8.0;
}

MeanRemovalReport mean_removal_report(std::uint64_t elements, int bits, int mean_bits) {
    if (bits < 1) throw ContractError("bit-width must be >= 1");
    if (mean_bits < 0) throw ContractError("mean side-value width must be >= 0");
    MeanRemovalReport r;
    r.elements = elements;
    r.before_bits = elements * static_cast<std::uint64_t>(bits);
    r.after_bits = elements * static_cast<std::uint64_t>(bits - 1) + static_cast<std::uint64_t>(mean_bits);
    r.saving = r.before_bits == 0 ? 0.0
                                  : (static_cast<double>(r.before_bits) - static_cast<double>(r.after_bits)) /
                                        static_cast<double>(r.before_bits);
    return r;
}

std::string_view to_string(Precision p) {
    switch (p) {
        case Precision::Int8: return "int8";
        case Precision::Int32: return "int32";
        case Precision::Fp16: return "fp16";
        case Precision::Fp32: return "fp32";
    }
    return "?";
}

Precision precision_from_string(std::string_view s) {
    if (s == "int8") return Precision::Int8;
    if (s == "int32") return Precision::Int32;
    if (s == "fp16") return Precision::Fp16;
    if (s == "fp32") return Precision::Fp32;
    throw ContractError("unknown precision '" + std::string(s) + "'");
}

EnergyCost energy_cost(Precision p) noexcept {
    switch (p) {
        case Precision::Int8: return {3, 20};
        case Precision::Int32: return {10, 310};
        case Precision::Fp16: return {40, 110};
        case Precision::Fp32: return {90, 370};
    }
    return {};
}

double mac_energy_pj(Precision p) noexcept {
    const EnergyCost c = energy_cost(p);
    return static_cast<double>(c.add_centi_pj + c.mult_centi_pj) / 100.0;
}

std::uint64_t mac_count(const NetworkConfig& cfg) {
    std::uint64_t n = 0;
    for (const LayerCost& c : layer_costs(cfg)) n += c.macs;
    return n;
}

std::uint64_t energy_centi_pj(const NetworkConfig& cfg, Precision p) {
    const EnergyCost c = energy_cost(p);
    const std::uint64_t macs = mac_count(cfg);
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(macs, c.add_centi_pj + c.mult_centi_pj, &out))
        throw NumericError("energy estimate overflows 64 bits");
    return out;
}

double energy_estimate_pj(const NetworkConfig& cfg, Precision p) {
    return static_cast<double>(energy_centi_pj(cfg, p)) / 100.0;
}

AuditReport audit_network(const NetworkConfig& cfg, const AuditOptions& opt) {
    AuditReport r;
    r.name = cfg.name;
    r.layers = layer_costs(cfg, opt);
    for (const LayerCost& c : r.layers) {
        r.weight_bits += c.weight_bits;
        r.weight_sf_bits += c.weight_sf_bits;
        r.weight_bits_f32 += c.weight_bits_f32;
        r.act_bits += c.act_bits;
        r.act_sf_bits += c.act_sf_bits;
        r.mux_bits += c.mux_bits;
        r.act_bits_f32 += c.act_bits_f32;
        r.macs += c.macs;
        if (c.excluded) r.excluded.push_back(c.name + " (normalization parameters excluded from comparison)");
    }
    const std::size_t expected = cfg.role == "encoder" ? 13 : 10;
    std::size_t convs = 0;
    for (const AuditLayer& l : cfg.layers) convs += l.gdn ? 0 : 1;
    if (convs != expected && !cfg.layers.empty())
        r.warnings.push_back(cfg.role + " config has " + std::to_string(convs) + " convolution layers; the reference codec has " +
                             std::to_string(expected));
    return r;
}

std::vector<std::string> sf_range_warnings(const TensorBundle& b) {
    std::vector<std::string> out;
    auto check = [&](const std::string& what, const std::vector<std::int8_t>& sf) {
        for (std::size_t g = 0; g < sf.size(); ++g)
            if (sf[g] < -8 || sf[g] > 7)
                out.push_back(what + " group " + std::to_string(g) + ": scale exponent " + std::to_string(sf[g]) +
                              " outside the 4-bit range [-8, 7]");
    };
    for (const BundleEntry& e : b.entries)
        if (e.is_quantized() && e.quantized().codebook_id != "int8") check("entry '" + e.name + "'", e.quantized().sf_exponents);
    for (const ProfileRecord& p : b.profiles) check("profile '" + p.name + "'", p.sf_exponents);
    return out;
}

std::string format_audit_text(const AuditReport& r) {
    std::string out;
    char buf[256];
    auto mb = [](std::uint64_t bits) { return bits_to_mb(bits); };
    out += "memory (MB)         w          sf_w       total      o          sf_o       total\n";
    std::snprintf(buf, sizeof buf, "%-16s %10.4f %10.4f %10.4f %10.4f %10.4f %10.4f\n", "original",
                  mb(r.weight_bits_f32), 0.0, mb(r.weight_bits_f32), mb(r.act_bits_f32), 0.0, mb(r.act_bits_f32));
    out += buf;
    std::snprintf(buf, sizeof buf, "%-16s %10.4f %10.4f %10.4f %10.4f %10.4f %10.4f\n", "proposed", mb(r.weight_bits),
                  mb(r.weight_sf_bits), mb(r.weight_bits + r.weight_sf_bits), mb(r.act_bits),
                  mb(r.act_sf_bits + r.mux_bits), mb(r.act_bits + r.act_sf_bits + r.mux_bits));
    out += buf;
    out += "\nenergy            add (pJ)  mult (pJ)  MAC (pJ)   total (uJ)\n";
    for (Precision p : {Precision::Int8, Precision::Int32, Precision::Fp16, Precision::Fp32}) {
        const EnergyCost c = energy_cost(p);
        const double total_pj = static_cast<double>(r.macs) * static_cast<double>(c.add_centi_pj + c.mult_centi_pj) / 100.0;
        std::snprintf(buf, sizeof buf, "%-16s %9.2f %10.2f %9.2f %12.3f\n", std::string(to_string(p)).c_str(),
                      static_cast<double>(c.add_centi_pj) / 100.0, static_cast<double>(c.mult_centi_pj) / 100.0,
                      mac_energy_pj(p), total_pj / 1e6);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "MACs: %llu\n", static_cast<unsigned long long>(r.macs));
    out += buf;
    for (const std::string& e : r.excluded) out += "excluded: " + e + "\n";
    for (const std::string& w : r.warnings) out += "warning: " + w + "\n";
    return out;
}

std::string format_audit_json(const AuditReport& r) {
    json j;
    j["name"] = r.name;
    j["bits"] = {{"weight", r.weight_bits},   {"weight_sf", r.weight_sf_bits}, {"weight_f32", r.weight_bits_f32},
                 {"activation", r.act_bits}, {"activation_sf", r.act_sf_bits}, {"mux", r.mux_bits},
                 {"activation_f32", r.act_bits_f32}};
    j["mb"] = {{"weight_original", bits_to_mb(r.weight_bits_f32)},
               {"weight_proposed", bits_to_mb(r.weight_bits + r.weight_sf_bits)},
               {"activation_original", bits_to_mb(r.act_bits_f32)},
               {"activation_proposed", bits_to_mb(r.act_bits + r.act_sf_bits + r.mux_bits)}};
    j["macs"] = r.macs;
    json energy;
    for (Precision p : {Precision::Int8, Precision::Int32, Precision::Fp16, Precision::Fp32}) {
        const EnergyCost c = energy_cost(p);
        energy[std::string(to_string(p))] = static_cast<double>(r.macs) * static_cast<double>(c.add_centi_pj + c.mult_centi_pj) / 100.0;
    }
    j["energy_pj"] = energy;
    j["layers"] = json::array();
    for (const LayerCost& c : r.layers)
        j["layers"].push_back({{"name", c.name},
                               {"out", {c.OH, c.OW}},
                               {"weight_bits", c.weight_bits},
                               {"weight_sf_bits", c.weight_sf_bits},
                               {"activation_bits", c.act_bits},
                               {"activation_sf_bits", c.act_sf_bits},
                               {"mux_bits", c.mux_bits},
                               {"macs", c.macs},
                               {"excluded", c.excluded}});
    j["excluded"] = r.excluded;
    j["warnings"] = r.warnings;
    return j.dump(2);
}

std::string format_mean_removal(const MeanRemovalReport& r) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "mean removal: %llu elements, %llu bits -> %llu bits, saving %.2f%%\n",
                  static_cast<unsigned long long>(r.elements), static_cast<unsigned long long>(r.before_bits),
                  static_cast<unsigned long long>(r.after_bits), 100.0 * r.saving);
    return buf;
}

}  // namespace fixq
