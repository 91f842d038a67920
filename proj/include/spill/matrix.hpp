#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace spill {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    std::span<double> row(std::size_t i) noexcept {
        assert(i < rows);
        return {data.data() + i * cols, cols};
    }
    std::span<const double> row(std::size_t i) const noexcept {
        assert(i < rows);
        return {data.data() + i * cols, cols};
    }

    bool operator==(const Matrix&) const = default;
};

}  // namespace spill
