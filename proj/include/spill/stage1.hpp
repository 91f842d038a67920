/**
 * @file stage1.hpp
 * @brief Embedding-based candidate retrieval.
 *
 * For each seed utterance the candidate set holds its l_top nearest
 * neighbours plus l_random "chunk" picks: the remaining neighbours, sorted
 * by distance, are cut into l_random contiguous chunks and the closest
 * member of each chunk is taken.
 */
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spill/core.hpp"

namespace spill {

inline constexpr std::size_t kDefaultLTop = 14;
inline constexpr std::size_t kDefaultLRandom = 6;

enum class Provenance { Top, Chunk };
std::string_view to_string(Provenance p);

struct Neighbor {
    std::size_t row = 0;
    double distance = 0.0;
    bool operator==(const Neighbor&) const = default;
};

struct CandidateEntry {
    std::string id;
    std::size_t row = 0;
    double distance = 0.0;
    Provenance provenance = Provenance::Top;
    bool operator==(const CandidateEntry&) const = default;
};

struct CandidateSet {
    std::string seed_id;
    std::size_t seed_row = 0;
    std::vector<CandidateEntry> entries;
    std::size_t l_top = 0;
    std::size_t l_random = 0;

    std::size_t size() const noexcept { return entries.size(); }
    bool operator==(const CandidateSet&) const = default;
};

/// Euclidean distances from the seed to every other row, ascending; ties by id.
std::vector<Neighbor> distances_from(const LabeledDataset& ds, std::string_view seed_id);
std::vector<Neighbor> distances_from(const LabeledDataset& ds, std::size_t seed_row);

/// Positions picked by chunk sampling from a sorted list of length n:
/// near-equal contiguous chunks (leading chunks one longer), first of each.
std::vector<std::size_t> chunk_positions(std::size_t n, std::size_t l_random);

/// Chunk sampling over an ascending list; returns the picked elements in chunk order.
std::vector<Neighbor> chunk_sample(std::span<const Neighbor> sorted_rest, std::size_t l_random);

CandidateSet build_candidate_set(const LabeledDataset& ds, std::string_view seed_id, std::size_t l_top = kDefaultLTop,
                                 std::size_t l_random = kDefaultLRandom);
CandidateSet build_candidate_set(const LabeledDataset& ds, std::size_t seed_row, std::size_t l_top = kDefaultLTop,
                                 std::size_t l_random = kDefaultLRandom);

/// One candidate set per utterance, in dataset order (OpenMP over seeds).
std::vector<CandidateSet> build_all_candidate_sets(const LabeledDataset& ds, std::size_t l_top = kDefaultLTop,
                                                   std::size_t l_random = kDefaultLRandom);

/// Throws ValidationError unless 1 <= l_top + l_random <= N - 1.
void check_candidate_budget(std::size_t n, std::size_t l_top, std::size_t l_random);

/// JSONL: {"seed": id, "candidates": [{"id", "distance", "provenance": "top"|"chunk"}]}
void save_candidate_sets(std::span<const CandidateSet> sets, const std::filesystem::path& path);

}  // namespace spill
