#pragma once

#include <span>
#include <string>
#include <string_view>

#include "fixq/codebook.hpp"

namespace fixq {

/// Weight codebook: step 2^-(p-1) on [alpha/4, alpha), 2^-p on
/// [alpha/8, alpha/4) and 2^-(p+2) on [0, alpha/8), where 2^-p is the
/// uniform step for the same budget (p = 8 for N = 8, alpha = 0.5).
Codebook weight_nlq_codebook(int bits = 8, double alpha = 0.5);

namespace codebook_ids {
inline constexpr std::string_view kWeightNlq = "weight-nlq-n8";
inline constexpr std::string_view kWeightLq = "weight-lq-n8";
inline constexpr std::string_view kActUniform = "act-uniform";
inline constexpr std::string_view kActUniformRelu = "act-uniform-relu";
inline constexpr std::string_view kIcmlNlq = "icml-nlq";
inline constexpr std::string_view kInt8 = "int8";
/// Families resolved per channel through the range multiplexer.
inline constexpr std::string_view kActMux = "act-mux";
inline constexpr std::string_view kActMuxRelu = "act-mux-relu";
/// Per-tensor lookup table produced by Lloyd's method.
inline constexpr std::string_view kLloydLut = "lloyd-lut";
}  // namespace codebook_ids

/// Every registered codebook, in a fixed order.
std::span<const Codebook> catalog();

/// Catalog lookup. Also accepts weight-nlq-n<bits> / weight-lq-n<bits> for
/// experimental budgets. Throws ContractError for unknown ids.
const Codebook& codebook(std::string_view id);

bool is_mux_family(std::string_view id) noexcept;

/// Codebook id of the mux family member for a selection signal.
std::string mux_member_id(std::string_view family, int range_sel);

/// Text dump of the catalog (one budget ledger line per codebook).
std::string dump_catalog();

}  // namespace fixq
