#include "fixq/lloyd.hpp"

#include <algorithm>
#include <string>

#include "fixq/errors.hpp"

namespace fixq {

namespace {

std::uint32_t nearest(const std::vector<double>& centroids, double x) {
    auto it = std::lower_bound(centroids.begin(), centroids.end(), x);
    if (it == centroids.begin()) return 0;
    if (it == centroids.end()) return static_cast<std::uint32_t>(centroids.size() - 1);
    const auto hi = static_cast<std::uint32_t>(it - centroids.begin());
    // ties go to the lower centroid
    return (x - centroids[hi - 1] <= centroids[hi] - x) ? hi - 1 : hi;
}

double objective(std::span<const double> values, const std::vector<double>& centroids,
                 const std::vector<std::uint32_t>& assignment) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - centroids[assignment[i]];
        s += d * d;
    }
    return s;
}

// Hartigan single-point moves across adjacent cluster boundaries of the
// sorted data. Each accepted move strictly lowers the objective.
bool refine_boundaries(const std::vector<double>& sorted, std::vector<double>& centroids) {
    const std::size_t k = centroids.size();
    std::vector<std::size_t> begin(k + 1, 0);
    std::vector<double> sums(k, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (double x : sorted) {
        const auto c = nearest(centroids, x);
        sums[c] += x;
        ++counts[c];
    }
    for (std::size_t c = 0; c < k; ++c) begin[c + 1] = begin[c] + counts[c];
    const auto cost = [&](std::size_t c, double x, bool adding) {
        const double n = static_cast<double>(counts[c]);
        const double m = counts[c] ? sums[c] / n : x;
        const double d = (x - m) * (x - m);
        return adding ? n / (n + 1) * d : (n > 1 ? n / (n - 1) * d : 0.0);
    };
    bool changed = false;
    for (bool moved = true; moved;) {
        moved = false;
        for (std::size_t c = 0; c + 1 < k; ++c) {
            // last point of c to c+1, then first point of c+1 to c
            for (int dir = 0; dir < 2; ++dir) {
                const std::size_t from = dir == 0 ? c : c + 1, to = dir == 0 ? c + 1 : c;
                if (counts[from] < 2) continue;
                const double x = sorted[dir == 0 ? begin[c + 1] - 1 : begin[c + 1]];
                if (cost(to, x, true) - cost(from, x, false) >= -1e-15 * (1.0 + x * x)) continue;
                sums[from] -= x;
                --counts[from];
                sums[to] += x;
                ++counts[to];
                begin[c + 1] += dir == 0 ? -1 : 1;
                moved = changed = true;
            }
        }
    }
    for (std::size_t c = 0; c < k; ++c)
        if (counts[c]) centroids[c] = sums[c] / static_cast<double>(counts[c]);
    std::sort(centroids.begin(), centroids.end());
    return changed;
}


LloydResult run(std::span<const double> values, const std::vector<double>& sorted, std::vector<double> start,
                int max_iters, double tol) {
    LloydResult r;
    r.centroids = std::move(start);
    const std::size_t levels = r.centroids.size();
    r.assignment.resize(values.size());
    std::vector<double> sums(levels);
    std::vector<std::size_t> counts(levels);
    double previous = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        for (std::size_t i = 0; i < values.size(); ++i) r.assignment[i] = nearest(r.centroids, values[i]);
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < values.size(); ++i) {
            sums[r.assignment[i]] += values[i];
            ++counts[r.assignment[i]];
        }
        for (std::size_t k = 0; k < levels; ++k)
            if (counts[k]) r.centroids[k] = sums[k] / static_cast<double>(counts[k]);
        // Means of ordered clusters stay ordered, so the sort only guards ties.
        std::sort(r.centroids.begin(), r.centroids.end());
        const double obj = objective(values, r.centroids, r.assignment);
        r.history.push_back(obj);
        if (it > 0 && previous - obj <= tol) {
            // Converged: escape the fixed point by boundary moves, then resume.
            const std::vector<double> kept = r.centroids;
            if (!refine_boundaries(sorted, r.centroids)) break;
            for (std::size_t i = 0; i < values.size(); ++i) r.assignment[i] = nearest(r.centroids, values[i]);
            const double moved = objective(values, r.centroids, r.assignment);
            if (moved >= obj) {
                r.centroids = kept;
                break;
            }
            r.history.push_back(moved);
            previous = moved;
            continue;
        }
        previous = obj;
    }
    for (std::size_t i = 0; i < values.size(); ++i) r.assignment[i] = nearest(r.centroids, values[i]);
    r.objective = objective(values, r.centroids, r.assignment);
    return r;
}

}  // namespace

LloydResult lloyd_quantize(std::span<const double> values, std::size_t levels, int max_iters, double tol) {
    if (values.empty()) throw ContractError("lloyd_quantize: empty group");
    if (levels == 0) throw ContractError("lloyd_quantize: zero levels");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (levels > distinct.size())
        throw ContractError("lloyd_quantize: " + std::to_string(levels) + " levels exceed " +
                            std::to_string(distinct.size()) + " distinct values");

    std::vector<double> quantiles(levels), even(levels);
    const double lo = distinct.front(), width = distinct.back() - distinct.front();
    for (std::size_t k = 0; k < levels; ++k) {
        quantiles[k] = distinct[(2 * k + 1) * distinct.size() / (2 * levels)];
        even[k] = lo + width * (static_cast<double>(k) + 0.5) / static_cast<double>(levels);
    }
    LloydResult a = run(values, sorted, std::move(quantiles), max_iters, tol);
    LloydResult b = run(values, sorted, std::move(even), max_iters, tol);
    return b.objective < a.objective ? b : a;
}

}  // namespace fixq
