#include "fixq/codebook.hpp"

#include <cmath>
#include <sstream>

#include "fixq/errors.hpp"
#include "fixq/scale.hpp"

namespace fixq {

namespace {

bool is_dyadic(double x) {
    if (x == 0.0) return true;
    if (!std::isfinite(x)) return false;
    // Any finite double is dyadic; require it to be exact within 60 fractional bits.
    const double scaled = std::ldexp(x, 60);
    return std::isfinite(scaled) && scaled == std::floor(scaled);
}

bool is_integer(double x) { return std::isfinite(x) && x == std::floor(x); }

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

double Piece::step() const noexcept { return std::ldexp(1.0, -precision); }

std::string_view to_string(CodebookViolation::Kind k) {
    using K = CodebookViolation::Kind;
    switch (k) {
        case K::Empty: return "empty";
        case K::NotAnchoredAtZero: return "not-anchored-at-zero";
        case K::Gap: return "gap";
        case K::Overlap: return "overlap";
        case K::EmptyPiece: return "empty-piece";
        case K::ExceedsAlpha: return "exceeds-alpha";
        case K::NonDyadicBoundary: return "non-dyadic-boundary";
        case K::FractionalLevels: return "fractional-levels";
        case K::Budget: return "budget";
        case K::UnsupportedBits: return "unsupported-bits";
    }
    return "?";
}

CodebookReport validate_codebook(const Codebook& cb) {
    using K = CodebookViolation::Kind;
    CodebookReport r;
    r.expected = std::ldexp(1.0, cb.bits());
    auto add = [&](K kind, std::size_t piece, std::string detail) {
        r.violations.push_back({kind, piece, std::move(detail)});
    };

    if (cb.bits() < 1 || cb.bits() > 16) add(K::UnsupportedBits, 0, "bits=" + std::to_string(cb.bits()));
    const auto& ps = cb.pieces();
    if (ps.empty()) {
        add(K::Empty, 0, "codebook has no pieces");
        return r;
    }
    if (ps.front().lower != 0.0) add(K::NotAnchoredAtZero, 0, "K_0=" + fmt(ps.front().lower));

    double one_sided = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const Piece& p = ps[i];
        if (!is_dyadic(p.lower) || !is_dyadic(p.upper))
            add(K::NonDyadicBoundary, i, "[" + fmt(p.lower) + ", " + fmt(p.upper) + ")");
        if (!(p.upper > p.lower)) add(K::EmptyPiece, i, "upper <= lower");
        if (i > 0) {
            const double prev = ps[i - 1].upper;
            if (p.lower > prev) add(K::Gap, i, "gap between " + fmt(prev) + " and " + fmt(p.lower));
            if (p.lower < prev) add(K::Overlap, i, "overlap below " + fmt(prev));
        }
        const double count = std::ldexp(p.upper - p.lower, p.precision);
        if (!is_integer(count))
            add(K::FractionalLevels, i, "piece holds " + fmt(count) + " steps");
        // Boundaries must sit on the piece's own grid so every output is dyadic.
        if (!is_integer(std::ldexp(p.lower, p.precision)))
            add(K::NonDyadicBoundary, i, "K_i=" + fmt(p.lower) + " off its 2^-" +
                                             std::to_string(p.precision) + " grid");
        one_sided += count;
    }
    if (ps.back().upper > cb.alpha())
        add(K::ExceedsAlpha, ps.size() - 1, "top " + fmt(ps.back().upper) + " > alpha " + fmt(cb.alpha()));

    r.levels = one_sided * (cb.is_signed() ? 2.0 : 1.0);
    if (r.levels != r.expected)
        add(K::Budget, 0, "levels " + fmt(r.levels) + " != 2^" + std::to_string(cb.bits()) + " = " +
                              fmt(r.expected));
    r.ok = r.violations.empty();
    return r;
}

Codebook::Codebook(std::string id, double alpha, bool is_signed, int bits, std::vector<Piece> pieces)
    : id_(std::move(id)), alpha_(alpha), signed_(is_signed), bits_(bits), pieces_(std::move(pieces)) {
    const CodebookReport report = validate_codebook(*this);
    valid_ = report.ok;
    if (!valid_) return;
    offsets_.reserve(pieces_.size() + 1);
    std::size_t acc = 0;
    for (const Piece& p : pieces_) {
        offsets_.push_back(acc);
        acc += static_cast<std::size_t>(std::ldexp(p.upper - p.lower, p.precision));
    }
    offsets_.push_back(acc);
    half_levels_ = acc;
}

Codebook Codebook::uniform(std::string id, int bits, double alpha, bool is_signed) {
    const int precision = bits - exponent_of_power_of_two(alpha) - (is_signed ? 1 : 0);
    return Codebook(std::move(id), alpha, is_signed, bits, {Piece{0.0, alpha, precision}});
}

double Codebook::top() const noexcept { return pieces_.empty() ? 0.0 : pieces_.back().upper; }

double Codebook::max_value() const noexcept { return top() - pieces_.back().step(); }

double Codebook::min_value() const noexcept { return signed_ ? -top() : 0.0; }

int Codebook::finest_precision() const noexcept {
    int p = pieces_.front().precision;
    for (const Piece& piece : pieces_) p = std::max(p, piece.precision);
    return p;
}

std::size_t Codebook::level_count() const noexcept {
    return signed_ ? 2 * half_levels_ : half_levels_;
}

void Codebook::require_valid() const {
    if (!valid_) throw ContractError("codebook '" + id_ + "' fails validation");
}

std::size_t Codebook::piece_index(double magnitude) const noexcept {
    for (std::size_t i = 0; i < pieces_.size(); ++i)
        if (magnitude < pieces_[i].upper) return i;
    return pieces_.size() - 1;
}

bool Codebook::out_of_range(double sw) const noexcept {
    if (!signed_ && sw < 0.0) return true;
    return std::fabs(sw) >= top();
}

double Codebook::quantize(double sw) const {
    require_valid();
    if (!std::isfinite(sw)) throw NumericError("quantize: non-finite input in codebook '" + id_ + "'");
    const double a = std::fabs(sw);
    double q = top();
    if (a < top()) {
        const Piece& p = pieces_[piece_index(a)];
        q = std::ldexp(round_half_away(std::ldexp(a, p.precision)), -p.precision);
    }
    if (q == 0.0) return 0.0;
    double r = sw < 0.0 ? -q : q;
    if (r > max_value()) r = max_value();
    if (!signed_ && r < 0.0) r = 0.0;
    return r;
}

std::uint32_t Codebook::encode(double v) const {
    require_valid();
    const double a = std::fabs(v);
    auto off_grid = [&] {
        return ContractError("value " + fmt(v) + " is not on the grid of codebook '" + id_ + "'");
    };
    if (!std::isfinite(v) || a > top()) throw off_grid();
    std::size_t pos = half_levels_;
    if (a < top()) {
        const std::size_t i = piece_index(a);
        const Piece& p = pieces_[i];
        const double k = std::ldexp(a - p.lower, p.precision);
        if (!is_integer(k)) throw off_grid();
        pos = offsets_[i] + static_cast<std::size_t>(k);
    }
    if (!signed_) {
        if (v < 0.0 && pos != 0) throw off_grid();
        if (pos >= half_levels_) throw off_grid();
        return static_cast<std::uint32_t>(pos);
    }
    if (v < 0.0 && pos != 0) return static_cast<std::uint32_t>(half_levels_ - pos);
    if (pos >= half_levels_) throw off_grid();
    return static_cast<std::uint32_t>(half_levels_ + pos);
}

double Codebook::magnitude_at(std::size_t position) const {
    if (position == half_levels_) return top();
    for (std::size_t i = 0; i < pieces_.size(); ++i)
        if (position < offsets_[i + 1])
            return pieces_[i].lower +
                   std::ldexp(static_cast<double>(position - offsets_[i]), -pieces_[i].precision);
    throw ContractError("level position out of range");
}

double Codebook::decode(std::uint32_t level) const {
    require_valid();
    if (level >= level_count())
        throw ContractError("level " + std::to_string(level) + " out of range for codebook '" + id_ + "'");
    if (!signed_) return magnitude_at(level);
    if (level >= half_levels_) return magnitude_at(level - half_levels_);
    return -magnitude_at(half_levels_ - level);
}

std::vector<double> Codebook::grid() const {
    require_valid();
    std::vector<double> out(level_count());
    for (std::uint32_t l = 0; l < out.size(); ++l) out[l] = decode(l);
    return out;
}

std::string budget_ledger(const Codebook& cb) {
    std::ostringstream os;
    os << cb.id() << " (alpha=" << fmt(cb.alpha()) << (cb.is_signed() ? ", signed" : ", one-sided")
       << ", N=" << cb.bits() << "): ";
    double one_sided = 0.0;
    for (std::size_t i = 0; i < cb.pieces().size(); ++i) {
        const Piece& p = cb.pieces()[i];
        const double n = std::ldexp(p.upper - p.lower, p.precision);
        one_sided += n;
        if (i) os << " + ";
        os << "[" << fmt(p.lower) << "," << fmt(p.upper) << ")*2^" << p.precision << "=" << fmt(n);
    }
    const CodebookReport r = validate_codebook(cb);
    os << " => " << fmt(one_sided);
    if (cb.is_signed()) os << " x2";
    os << " = " << fmt(r.levels) << " (2^" << cb.bits() << " = " << fmt(r.expected) << ") "
       << (r.ok ? "ok" : "VIOLATION");
    for (const auto& v : r.violations) os << " [" << to_string(v.kind) << ": " << v.detail << "]";
    return os.str();
}

double quantize_linear(double sw, int bits, double alpha) {
    if (!std::isfinite(sw)) throw NumericError("quantize_linear: non-finite input");
    double q = std::ldexp(round_half_away(std::ldexp(sw, bits)), -bits);
    const double hi = alpha - std::ldexp(1.0, -bits);
    if (q > hi) q = hi;
    if (q < -alpha) q = -alpha;
    return q == 0.0 ? 0.0 : q;
}

double quantize_piecewise(double sw, const Codebook& cb) { return cb.quantize(sw); }

}  // namespace fixq
