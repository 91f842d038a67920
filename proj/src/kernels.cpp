#include "spill/kernels.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>

namespace spill::kernels {

namespace {

inline void distances_row(const Matrix& x, std::span<const double> q, std::span<double> out, std::size_t i) {
    out[i] = squared_distance(x.row(i), q);
}

inline void pairwise_row(const Matrix& x, Matrix& d, std::size_t i) {
    auto ri = x.row(i);
    auto out = d.row(i);
    for (std::size_t j = 0; j < x.rows; ++j) out[j] = (i == j) ? 0.0 : squared_distance(ri, x.row(j));
}

inline void assign_row(const Matrix& x, const Matrix& c, std::span<int> labels, std::span<double> best_sq,
                       std::size_t i) {
    auto xi = x.row(i);
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t m = 0; m < c.rows; ++m) {
        const double d = squared_distance(xi, c.row(m));
        if (d < best) {
            best = d;
            arg = static_cast<int>(m);
        }
    }
    labels[i] = arg;
    best_sq[i] = best;
}

void check_pool(const Matrix& x, std::span<const std::vector<std::size_t>> partners) {
    if (partners.size() != x.rows) throw std::invalid_argument("pool_rows: one partner list per row required");
}

}  // namespace

namespace serial {

void squared_distances_to(const Matrix& x, std::span<const double> q, std::span<double> out) {
    for (std::size_t i = 0; i < x.rows; ++i) distances_row(x, q, out, i);
}

Matrix pairwise_squared_distances(const Matrix& x) {
    Matrix d(x.rows, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) pairwise_row(x, d, i);
    return d;
}

void assign_nearest(const Matrix& x, const Matrix& centroids, std::span<int> labels, std::span<double> best_sq) {
    for (std::size_t i = 0; i < x.rows; ++i) assign_row(x, centroids, labels, best_sq, i);
}

Matrix pool_rows(const Matrix& x, std::span<const std::vector<std::size_t>> partners) {
    check_pool(x, partners);
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) mean_pool_rows(x, x.row(i), partners[i], out.row(i));
    return out;
}

}  // namespace serial

namespace parallel {

void squared_distances_to(const Matrix& x, std::span<const double> q, std::span<double> out) {
    const auto n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) distances_row(x, q, out, static_cast<std::size_t>(i));
}

Matrix pairwise_squared_distances(const Matrix& x) {
    Matrix d(x.rows, x.rows);
    const auto n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) pairwise_row(x, d, static_cast<std::size_t>(i));
    return d;
}

void assign_nearest(const Matrix& x, const Matrix& centroids, std::span<int> labels, std::span<double> best_sq) {
    const auto n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) assign_row(x, centroids, labels, best_sq, static_cast<std::size_t>(i));
}

Matrix pool_rows(const Matrix& x, std::span<const std::vector<std::size_t>> partners) {
    check_pool(x, partners);
    Matrix out(x.rows, x.cols);
    const auto n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        mean_pool_rows(x, x.row(r), partners[r], out.row(r));
    }
    return out;
}

}  // namespace parallel

}  // namespace spill::kernels
