#include "fixq/act_quant.hpp"

#include <cmath>

#include "fixq/catalog.hpp"
#include "fixq/errors.hpp"
#include "fixq/parallel.hpp"
#include "fixq/scale.hpp"

namespace fixq {

std::string_view to_string(ActivationKind k) {
    switch (k) {
        case ActivationKind::ReLU: return "relu";
        case ActivationKind::LeakyReLU: return "leaky_relu";
        case ActivationKind::None: return "none";
    }
    return "?";
}

ActivationKind activation_from_string(std::string_view s) {
    if (s == "relu") return ActivationKind::ReLU;
    if (s == "leaky_relu" || s == "leaky-relu") return ActivationKind::LeakyReLU;
    if (s == "none") return ActivationKind::None;
    throw ContractError("unknown activation '" + std::string(s) + "'");
}

double activation_alpha(ActivationKind k) noexcept { return k == ActivationKind::ReLU ? 1.0 : 0.5; }

bool activation_signed(ActivationKind k) noexcept { return k != ActivationKind::ReLU; }

Codebook mux_codebook(int sel, int bits, double alpha, bool is_signed) {
    if (sel < 0 || sel > 3) throw ContractError("range selection must be in 0..3, got " + std::to_string(sel));
    const int p = bits - exponent_of_power_of_two(alpha) - (is_signed ? 1 : 0);
    const double a = alpha;
    std::string id = "act-mux" + std::to_string(sel) + (is_signed ? "" : "-relu");
    if (bits != 8 || alpha != (is_signed ? 0.5 : 1.0)) id += "-n" + std::to_string(bits);
    std::vector<Piece> pieces;
    switch (sel) {
        case 3: pieces = {{0.0, a, p}}; break;
        case 2: pieces = {{0.0, a / 8, p}, {a / 8, a / 4, p + 1}, {a / 4, 7 * a / 8, p}}; break;
        case 1: pieces = {{0.0, a / 4, p + 1}, {a / 4, 3 * a / 4, p}}; break;
        case 0: pieces = {{0.0, 3 * a / 8, p + 1}, {3 * a / 8, 5 * a / 8, p}}; break;
    }
    return Codebook(std::move(id), alpha, is_signed, bits, std::move(pieces));
}

std::string CalibrationProfile::codebook_id() const {
    const bool relu = !activation_signed(kind);
    if (multiplexed) return std::string(relu ? codebook_ids::kActMuxRelu : codebook_ids::kActMux);
    return std::string(relu ? codebook_ids::kActUniformRelu : codebook_ids::kActUniform);
}

const Codebook& CalibrationProfile::channel_codebook(std::size_t c) const {
    const std::string id = codebook_id();
    return is_mux_family(id) ? codebook(mux_member_id(id, range_sel.at(c))) : codebook(id);
}

QuantizedTensor quantize_activations(const Tensor& t, CalibrationProfile& prof) {
    if (t.layout() != Layout::Activation) throw ContractError("quantize_activations needs an (OH,OW,O) tensor");
    const auto channels = static_cast<std::size_t>(t.channels());
    if (channels != prof.channels())
        throw ContractError("profile '" + prof.name + "' has " + std::to_string(prof.channels()) +
                            " channels, tensor has " + std::to_string(channels));
    require_finite(t.data(), "quantize_activations");
    if (prof.clip_count.size() != channels) prof.clip_count.assign(channels, 0);

    QuantizedTensor q;
    q.shape = t.shape();
    q.roles = t.roles();
    q.scheme = GroupScheme::ChannelWise;
    q.codebook_id = prof.codebook_id();
    q.levels.resize(t.size());
    q.sf_exponents.resize(channels);
    if (prof.multiplexed) q.mux = prof.range_sel;

    parallel_for(channels, [&](std::size_t c) {
        const Codebook& cb = prof.channel_codebook(c);
        const ScaleFactor sf{prof.sf_exponents[c]};
        q.sf_exponents[c] = store_exponent(sf.exponent);
        std::uint64_t clipped = 0;
        for (std::size_t i = c; i < t.size(); i += channels) {
            const double sw = sf.scale(t[i]);
            if (cb.out_of_range(sw) && sw != cb.min_value()) ++clipped;
            q.levels[i] = static_cast<std::uint8_t>(cb.encode(cb.quantize(sw)));
        }
        prof.clip_count[c] += clipped;
    });
    return q;
}

}  // namespace fixq
