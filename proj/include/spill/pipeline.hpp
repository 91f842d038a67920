/**
 * @file pipeline.hpp
 * @brief End-to-end refinement runs and their ablations.
 *
 *   Plain       cluster the raw embeddings
 *   Stage1Only  pool each seed with all of its stage-1 candidates
 *   Full        pool with the candidates chosen by the configured selector
 *   GroundTruth pool with the same-label candidates only
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spill/clusteval.hpp"
#include "spill/core.hpp"
#include "spill/report.hpp"
#include "spill/selector.hpp"
#include "spill/stage1.hpp"

namespace spill {

enum class Ablation { Plain, Stage1Only, Full, GroundTruth };
std::string_view to_string(Ablation a);
Ablation parse_ablation(std::string_view s);

struct PipelineConfig {
    std::size_t l_top = kDefaultLTop;
    std::size_t l_random = kDefaultLRandom;
    SelectorConfig selector{};
    std::size_t runs = 5;
    std::optional<std::size_t> num_clusters;
    std::uint64_t rng_seed = 0;
    Ablation ablation = Ablation::Full;
    KMeansOptions kmeans{};
    /// Redo stage-2 selection (fresh shuffle) for every clustering run instead of once.
    bool reselect_per_run = false;

    void validate(const LabeledDataset& ds) const;
};

nlohmann::json to_json(const PipelineConfig& c);

struct PipelineResult {
    Ablation ablation = Ablation::Plain;
    std::size_t num_clusters = 0;
    /// Present when the dataset is fully labeled.
    std::optional<EvalReport> eval;
    /// Present for pooled ablations on labeled data.
    std::optional<SelectionStats> stats;
    /// Cluster labels of the first run; always filled.
    std::vector<int> assignment;
    std::vector<CandidateSet> candidates;
    std::vector<SelectionOutcome> outcomes;
    std::optional<RefinedEmbeddings> refined;
    std::size_t fallback_count = 0;
    std::size_t error_count = 0;
};

PipelineResult run_pipeline(const LabeledDataset& ds, const PipelineConfig& cfg, const TransportFactory& factory = {});

/// Report body (without schema header) for a pipeline run.
nlohmann::json to_json(const PipelineResult& r, const PipelineConfig& cfg);

struct HparamRow {
    std::size_t l_top = 0;
    std::size_t l_random = 0;
    EvalReport eval;
    std::optional<SelectionStats> stats;
};

struct HparamSweep {
    std::size_t total_l = 20;
    EvalReport plain;
    std::vector<HparamRow> rows;
    /// Row with the highest (nmi_mean + acc_mean) / 2; earliest wins ties.
    std::size_t best = 0;
};

/// Runs the configured ablation for each l_top with l_random = total_l - l_top,
/// plus a Plain baseline. All values are validated before any work starts.
HparamSweep sweep_hparams(const LabeledDataset& ds, const PipelineConfig& cfg,
                          std::span<const std::size_t> l_top_values, std::size_t total_l = 20,
                          const TransportFactory& factory = {});

nlohmann::json to_json(const HparamSweep& s);
std::string hparam_table(const HparamSweep& s);

}  // namespace spill
