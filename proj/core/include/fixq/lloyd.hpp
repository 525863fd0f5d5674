#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fixq {

struct LloydResult {
    std::vector<double> centroids;          // ascending
    std::vector<std::uint32_t> assignment;  // index into centroids, per input value
    double objective = 0.0;                 // sum of squared distances to assigned centroid
    std::vector<double> history;            // objective after each iteration
};

/// One-dimensional k-means (Lloyd's method). Runs from two starts, quantiles
/// of the distinct values and evenly spaced levels, and keeps the better one.
/// Converged fixed points are refined by single-point boundary moves.
/// Iteration stops after max_iters or once the objective improves by no more
/// than tol. history belongs to the returned run.
LloydResult lloyd_quantize(std::span<const double> values, std::size_t levels, int max_iters = 100,
                           double tol = 1e-9);

}  // namespace fixq
