#include "spill/hungarian.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace spill {

std::vector<int> hungarian_max(const std::vector<std::vector<std::int64_t>>& weight) {
    const std::size_t n = weight.size();
    if (n == 0) return {};
    std::int64_t top = std::numeric_limits<std::int64_t>::min();
    for (const auto& row : weight) {
        if (row.size() != n) throw std::invalid_argument("hungarian_max: matrix must be square");
        for (auto w : row) top = std::max(top, w);
    }

    // Minimise cost = top - weight. 1-based arrays; column 0 is the virtual start.
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0), way_min(n + 1);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    std::vector<bool> used(n + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::fill(way_min.begin(), way_min.end(), kInf);
        std::fill(used.begin(), used.end(), false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            std::int64_t delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const std::int64_t cur = (top - weight[i0 - 1][j - 1]) - u[i0] - v[j];
                if (cur < way_min[j]) {
                    way_min[j] = cur;
                    way[j] = j0;
                }
                if (way_min[j] < delta) {
                    delta = way_min[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    way_min[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> assignment(n, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        if (match[j] != 0) assignment[match[j] - 1] = static_cast<int>(j - 1);
    }
    return assignment;
}

}  // namespace spill
