/**
 * @file simlab.hpp
 * @brief Synthetic clusters and pooling experiments.
 *
 * Clusters are drawn with independent per-dimension parameters; each point
 * is then pooled with k partners from its own cluster, either chosen at
 * random (Rd) or as its k nearest neighbours (TopK), and the pooled set is
 * clustered with k-means to measure how variance reduction translates into
 * clustering quality.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "spill/clusteval.hpp"
#include "spill/matrix.hpp"
#include "spill/report.hpp"
#include "spill/rng.hpp"

namespace spill {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct SizeRange {
    std::size_t lo = 0;
    std::size_t hi = 0;
};

struct SimulationSpec {
    std::size_t num_clusters = 3;
    std::size_t dim = 128;
    SizeRange size_range{50, 250};
    Distribution distribution = Distribution::Normal;
    /// Per-dimension mean of the (underlying) normal.
    Interval mu_range{0.0, 1e-10};
    /// Per-dimension variance of the (underlying) normal.
    Interval var_range{20.0, 60.0};
    std::size_t k = 0;
    Strategy strategy = Strategy::Rd;
    Replacement replacement = Replacement::Without;
    std::size_t runs = 50;
    std::uint64_t rng_seed = 0;
    KMeansOptions kmeans{};

    /// Throws ValidationError describing the first violated constraint.
    void validate() const;

    /// The three-cluster, 128-dimension setup; log-normal uses underlying
    /// mean in (0, 1e-10) and variance in (1.5, 2).
    static SimulationSpec table1(Distribution d);
};

nlohmann::json to_json(const SimulationSpec& s);

struct ClusterSample {
    Matrix points;
    int cluster_id = 0;
    std::vector<double> mean_params;
    std::vector<double> var_params;
};

std::vector<ClusterSample> gen_clusters(const SimulationSpec& spec, Rng& rng);

/// Mean-pools `seed_index` with k partners drawn uniformly from the
/// cluster: distinct and excluding the seed without replacement, i.i.d. over
/// all points (seed included) with replacement.
std::vector<double> pool_random(const ClusterSample& cluster, std::size_t seed_index, std::size_t k,
                                Replacement replacement, Rng& rng);

/// Pools `seed_index` with its k nearest other points (ties by lower index).
std::vector<double> pool_topk(const ClusterSample& cluster, std::size_t seed_index, std::size_t k);

/// Partner lists for every point of the cluster.
std::vector<std::vector<std::size_t>> random_partners(std::size_t n, std::size_t k, Replacement replacement, Rng& rng);
std::vector<std::vector<std::size_t>> topk_partners(const Matrix& points, std::size_t k);

/// Pooled version of every point in the cluster.
Matrix pool_cluster(const ClusterSample& cluster, std::size_t k, Strategy strategy, Replacement replacement, Rng& rng);

TrialResult run_trial(const SimulationSpec& spec, Rng& rng);
/// Trial `run` of `spec`, seeded from spec.rng_seed and the run index.
TrialResult run_trial(const SimulationSpec& spec, std::size_t run);

/// Runs spec.runs trials for every axis value; trials run in parallel and
/// are merged in run order.
SweepReport run_sweep(const SimulationSpec& base, SweepAxis axis, std::span<const std::size_t> values);

/// Aggregates trials into one SweepPoint (NMI and Acc converted to percent).
SweepPoint summarize(const std::vector<TrialResult>& trials, double axis_value);

struct VarianceLawResult {
    /// Mean over dimensions of Var(pooled) / Var(cluster).
    double mean_ratio = 0.0;
    /// Largest |mean(pooled) - mean(cluster)| / standard error across dimensions.
    double max_mean_z = 0.0;
    std::size_t samples = 0;
};

/// Draws `samples` pooled vectors, each from a uniformly drawn seed and k
/// partners sampled with replacement, and compares their spread with the
/// cluster's population variance.
VarianceLawResult measure_variance_law(const ClusterSample& cluster, std::size_t k, std::size_t samples, Rng& rng);

}  // namespace spill
