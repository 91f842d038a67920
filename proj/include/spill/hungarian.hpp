#pragma once

#include <cstdint>
#include <vector>

namespace spill {

/// Maximum-weight perfect matching on a square matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns assignment[row] = column.
std::vector<int> hungarian_max(const std::vector<std::vector<std::int64_t>>& weight);

}  // namespace spill
