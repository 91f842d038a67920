/**
 * @file kernels.hpp
 * @brief Data-parallel numeric kernels.
 *
 * Each kernel exists twice: `serial::` is the plain reference loop and
 * `parallel::` is the OpenMP version. Every output element is produced by
 * the same sequential arithmetic in both, so results are bitwise identical
 * regardless of thread count. Tests compare the two; the benchmark target
 * times them.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spill/matrix.hpp"

namespace spill::kernels {

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t h = 0; h < a.size(); ++h) {
        const double d = a[h] - b[h];
        s += d * d;
    }
    return s;
}

/// out = running mean of seed followed by each row of `x` listed in `partners`.
/// Incremental form m += (v - m) / (j + 1): equal inputs give the input back exactly.
inline void mean_pool_rows(const Matrix& x, std::span<const double> seed, std::span<const std::size_t> partners,
                           std::span<double> out) noexcept {
    for (std::size_t h = 0; h < seed.size(); ++h) out[h] = seed[h];
    for (std::size_t j = 0; j < partners.size(); ++j) {
        const auto v = x.row(partners[j]);
        const double w = 1.0 / static_cast<double>(j + 2);
        for (std::size_t h = 0; h < out.size(); ++h) out[h] += (v[h] - out[h]) * w;
    }
}

namespace serial {

/// out[i] = |x_i - q|^2
void squared_distances_to(const Matrix& x, std::span<const double> q, std::span<double> out);
/// Full N x N matrix of squared distances.
Matrix pairwise_squared_distances(const Matrix& x);
/// Nearest centroid per row (lowest index on ties) and its squared distance.
void assign_nearest(const Matrix& x, const Matrix& centroids, std::span<int> labels, std::span<double> best_sq);
/// Row i of the result pools x_i with the rows partners[i].
Matrix pool_rows(const Matrix& x, std::span<const std::vector<std::size_t>> partners);

}  // namespace serial

namespace parallel {

void squared_distances_to(const Matrix& x, std::span<const double> q, std::span<double> out);
Matrix pairwise_squared_distances(const Matrix& x);
void assign_nearest(const Matrix& x, const Matrix& centroids, std::span<int> labels, std::span<double> best_sq);
Matrix pool_rows(const Matrix& x, std::span<const std::vector<std::size_t>> partners);

}  // namespace parallel

}  // namespace spill::kernels
