/**
 * @file clusteval.hpp
 * @brief K-means clustering and the evaluation metrics used on its output.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spill/matrix.hpp"
#include "spill/report.hpp"
#include "spill/rng.hpp"

namespace spill {

struct KMeansOptions {
    std::size_t restarts = 10;
    std::size_t max_iters = 300;
    /// Stop when no centroid moves farther than this (Euclidean).
    double tol = 1e-4;
    /// Candidates drawn per k-means++ step, keeping the one that lowers the
    /// potential most; 0 means 2 + floor(ln M), 1 is plain k-means++.
    std::size_t local_trials = 0;
    /// After Lloyd converges, move single points between clusters while that
    /// lowers the SSE (Hartigan-style); escapes many Lloyd-stable local optima.
    bool hartigan = true;
    /// Use the OpenMP assignment kernel.
    bool parallel = true;
};

struct ClusterAssignment {
    std::vector<int> labels;
    Matrix centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    /// Inertia after each assignment step of the winning restart.
    std::vector<double> inertia_trace;
};

/// Lloyd iterations from k-means++ seeds; best of `restarts` by inertia
/// (earliest restart wins ties). Throws ValidationError if M is 0 or exceeds N.
ClusterAssignment kmeans(const Matrix& x, std::size_t num_clusters, Rng& rng, const KMeansOptions& opts = {});

/// k-means++ seeding: indices of the chosen initial centers.
std::vector<std::size_t> kmeanspp_seeds(const Matrix& x, std::size_t num_clusters, Rng& rng,
                                        std::size_t local_trials = 0);

/// Sum of squared distances of each row to the mean of its cluster.
double clustering_sse(const Matrix& x, std::span<const int> labels, std::size_t num_clusters);

/// Normalized mutual information with arithmetic-mean entropy normalizer, in [0, 1].
double nmi(std::span<const int> truth, std::span<const int> pred);

/// Best one-to-one cluster-to-label matching accuracy, in [0, 1].
double accuracy_hungarian(std::span<const int> truth, std::span<const int> pred);

/// Per cluster (labels 0..max): dimension-averaged unbiased variance;
/// nullopt for clusters with fewer than two members.
std::vector<std::optional<double>> variance_report(const Matrix& x, std::span<const int> labels);

/// Runs k-means `runs` times with seeds derived from `seed`; NMI and Acc in percent.
EvalReport evaluate(const Matrix& x, std::span<const int> truth, std::size_t num_clusters, std::size_t runs,
                    std::uint64_t seed, const KMeansOptions& opts = {});

/// Mean and population standard deviation.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace spill
