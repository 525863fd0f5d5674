#include "fixq/catalog.hpp"

#include <charconv>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "fixq/act_quant.hpp"
#include "fixq/errors.hpp"
#include "fixq/scale.hpp"

namespace fixq {

namespace {

std::vector<Codebook> build_catalog() {
    using namespace codebook_ids;
    std::vector<Codebook> c;
    c.push_back(weight_nlq_codebook(8, 0.5));
    c.push_back(Codebook::uniform(std::string(kWeightLq), 8, 0.5, true));
    c.push_back(Codebook::uniform(std::string(kActUniform), 8, 0.5, true));
    c.push_back(Codebook::uniform(std::string(kActUniformRelu), 8, 1.0, false));
    for (int sel = 0; sel < 4; ++sel) c.push_back(mux_codebook(sel, 8, 0.5, true));
    for (int sel = 0; sel < 4; ++sel) c.push_back(mux_codebook(sel, 8, 1.0, false));
    // Fractional-bit baseline: the same three-piece grid expressed for a
    // group scaled by 2^(n-10).
    {
        Codebook w = weight_nlq_codebook(8, 0.5);
        c.emplace_back(std::string(kIcmlNlq), w.alpha(), true, 8, w.pieces());
    }
    c.push_back(Codebook::uniform(std::string(kInt8), 8, 128.0, true));
    return c;
}

const std::vector<Codebook>& catalog_storage() {
    static const std::vector<Codebook> c = build_catalog();
    return c;
}

int parse_bits_suffix(std::string_view id, std::string_view prefix) {
    if (!id.starts_with(prefix)) return -1;
    const auto digits = id.substr(prefix.size());
    int bits = -1;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), bits);
    if (ec != std::errc() || p != digits.data() + digits.size()) return -1;
    return bits;
}

}  // namespace

Codebook weight_nlq_codebook(int bits, double alpha) {
    const int p = bits - exponent_of_power_of_two(alpha) - 1;
    const double a = alpha;
    return Codebook("weight-nlq-n" + std::to_string(bits), alpha, true, bits,
                    {Piece{0.0, a / 8, p + 2}, Piece{a / 8, a / 4, p}, Piece{a / 4, a, p - 1}});
}

std::span<const Codebook> catalog() { return catalog_storage(); }

const Codebook& codebook(std::string_view id) {
    for (const Codebook& cb : catalog_storage())
        if (cb.id() == id) return cb;

    // Experimental budgets are built on demand and cached for the process.
    static std::mutex mu;
    static std::map<std::string, std::unique_ptr<Codebook>, std::less<>> extra;
    std::lock_guard lock(mu);
    if (auto it = extra.find(id); it != extra.end()) return *it->second;
    std::unique_ptr<Codebook> made;
    if (int b = parse_bits_suffix(id, "weight-nlq-n"); b >= 1 && b <= 16)
        made = std::make_unique<Codebook>(weight_nlq_codebook(b, 0.5));
    else if (int b2 = parse_bits_suffix(id, "weight-lq-n"); b2 >= 1 && b2 <= 16)
        made = std::make_unique<Codebook>(Codebook::uniform(std::string(id), b2, 0.5, true));
    if (!made) throw ContractError("unknown codebook id '" + std::string(id) + "'");
    return *extra.emplace(std::string(id), std::move(made)).first->second;
}

bool is_mux_family(std::string_view id) noexcept {
    return id == codebook_ids::kActMux || id == codebook_ids::kActMuxRelu;
}

std::string mux_member_id(std::string_view family, int range_sel) {
    if (range_sel < 0 || range_sel > 3)
        throw ContractError("range selection must be in 0..3, got " + std::to_string(range_sel));
    if (family == codebook_ids::kActMux) return "act-mux" + std::to_string(range_sel);
    if (family == codebook_ids::kActMuxRelu) return "act-mux" + std::to_string(range_sel) + "-relu";
    throw ContractError("'" + std::string(family) + "' is not a multiplexed codebook family");
}

std::string dump_catalog() {
    std::string out;
    for (const Codebook& cb : catalog_storage()) {
        out += budget_ledger(cb);
        out += '\n';
    }
    return out;
}

}  // namespace fixq
