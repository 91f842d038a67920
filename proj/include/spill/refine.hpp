#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spill/core.hpp"
#include "spill/selector.hpp"

namespace spill {

struct RefinementRecord {
    std::string seed_id;
    std::vector<double> pooled_vector;
    std::size_t k_used = 0;
};

/// Elementwise (seed + sum(selected)) / (1 + k). Throws ValidationError on dimension mismatch.
std::vector<double> mean_pool(std::span<const double> seed, const std::vector<std::vector<double>>& selected);

/// Pools every utterance with its selected candidates. Needs exactly one
/// outcome per utterance (any order) whose ids all resolve in `ds`.
RefinedEmbeddings refine_dataset(const LabeledDataset& ds, std::span<const SelectionOutcome> outcomes);

/// Per-row view of a refinement result.
std::vector<RefinementRecord> refinement_records(const RefinedEmbeddings& refined);

}  // namespace spill
