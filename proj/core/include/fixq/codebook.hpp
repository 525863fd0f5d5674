#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fixq {

/// One piece [lower, upper) of a piecewise-uniform codebook, quantized with
/// step 2^-precision.
struct Piece {
    double lower = 0.0;
    double upper = 0.0;
    int precision = 0;

    double step() const noexcept;
    friend bool operator==(const Piece&, const Piece&) = default;
};

struct CodebookViolation {
    enum class Kind {
        Empty,
        NotAnchoredAtZero,
        Gap,
        Overlap,
        EmptyPiece,
        ExceedsAlpha,
        NonDyadicBoundary,
        FractionalLevels,
        Budget,
        UnsupportedBits,
    };
    Kind kind;
    std::size_t piece = 0;
    std::string detail;
};

std::string_view to_string(CodebookViolation::Kind k);

struct CodebookReport {
    bool ok = false;
    /// Levels implied by the pieces: sum (K_{i+1}-K_i) * 2^N_i, doubled when signed.
    double levels = 0.0;
    double expected = 0.0;
    std::vector<CodebookViolation> violations;
};

/// Piecewise-uniform quantization grid applied to magnitudes. Pieces
/// partition [0, top) with top <= alpha. A signed codebook mirrors the grid
/// onto negative values and additionally owns -top, so that it has exactly
/// 2^bits levels in [-top, top - step_top]. A one-sided codebook covers
/// [0, top - step_top].
class Codebook {
public:
    Codebook(std::string id, double alpha, bool is_signed, int bits, std::vector<Piece> pieces);

    /// Single-piece grid with step chosen so the budget is met exactly.
    static Codebook uniform(std::string id, int bits, double alpha, bool is_signed);

    const std::string& id() const noexcept { return id_; }
    double alpha() const noexcept { return alpha_; }
    bool is_signed() const noexcept { return signed_; }
    int bits() const noexcept { return bits_; }
    const std::vector<Piece>& pieces() const noexcept { return pieces_; }
    bool valid() const noexcept { return valid_; }

    double top() const noexcept;
    double max_value() const noexcept;
    double min_value() const noexcept;
    int finest_precision() const noexcept;
    std::size_t level_count() const noexcept;

    /// Round sw on the grid of the piece containing |sw| (ties away from
    /// zero), keeping the sign; out-of-range inputs saturate to the nearest
    /// end of the grid. Negative inputs map to 0 on a one-sided codebook.
    double quantize(double sw) const;

    /// True when sw lies outside the codebook range and gets clamped.
    bool out_of_range(double sw) const noexcept;

    /// Ascending-order index of a grid value. Throws ContractError off-grid.
    std::uint32_t encode(double v) const;
    double decode(std::uint32_t level) const;

    /// Every grid value in ascending order (size level_count()).
    std::vector<double> grid() const;

private:
    std::size_t piece_index(double magnitude) const noexcept;
    double magnitude_at(std::size_t position) const;
    void require_valid() const;

    std::string id_;
    double alpha_ = 0.0;
    bool signed_ = true;
    int bits_ = 8;
    std::vector<Piece> pieces_;
    std::vector<std::size_t> offsets_;  // cumulative one-sided positions per piece
    std::size_t half_levels_ = 0;
    bool valid_ = false;
};

CodebookReport validate_codebook(const Codebook& cb);

/// Budget ledger line, e.g. "weight-nlq-n8: 0.375*2^7 + ... = 128 x2 = 256 (2^8) ok".
std::string budget_ledger(const Codebook& cb);

/// Linear quantizer Q(sw) = round(sw * 2^bits) / 2^bits saturated to the
/// signed grid [-alpha, alpha - 2^-bits].
double quantize_linear(double sw, int bits, double alpha = 0.5);

double quantize_piecewise(double sw, const Codebook& cb);

}  // namespace fixq
