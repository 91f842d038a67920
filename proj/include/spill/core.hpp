/**
 * @file core.hpp
 * @brief Utterances, embedding matrices and labeled datasets.
 *
 * All types are immutable once constructed; the factory functions validate
 * the invariants and throw ValidationError on violation.
 */
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spill/matrix.hpp"

namespace spill {

struct Utterance {
    std::string id;
    std::string text;
    std::optional<std::string> label;

    bool operator==(const Utterance&) const = default;
};

/// Embedding rows keyed by utterance id.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;

    /// Throws ValidationError on duplicate ids, wrong row count, or non-finite entries.
    static EmbeddingMatrix create(std::vector<std::string> ids, Matrix values);

    std::size_t dim() const noexcept { return values_.cols; }
    std::size_t size() const noexcept { return values_.rows; }
    std::span<const double> row(std::size_t i) const noexcept { return values_.row(i); }
    const Matrix& values() const noexcept { return values_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    std::optional<std::size_t> find(std::string_view id) const;
    /// Like find() but throws ValidationError naming the unknown id.
    std::size_t index_of(std::string_view id) const;

    bool operator==(const EmbeddingMatrix& other) const { return ids_ == other.ids_ && values_ == other.values_; }

private:
    std::vector<std::string> ids_;
    Matrix values_;
    std::unordered_map<std::string, std::size_t> index_;
};

class LabeledDataset {
public:
    LabeledDataset() = default;

    /// Rows of `embeddings` must follow the order of `utterances`.
    static LabeledDataset create(std::vector<Utterance> utterances, EmbeddingMatrix embeddings,
                                 std::optional<std::size_t> num_clusters = std::nullopt);

    std::size_t size() const noexcept { return utterances_.size(); }
    std::size_t dim() const noexcept { return embeddings_.dim(); }
    const std::vector<Utterance>& utterances() const noexcept { return utterances_; }
    const Utterance& utterance(std::size_t i) const { return utterances_.at(i); }
    const EmbeddingMatrix& embeddings() const noexcept { return embeddings_; }
    std::optional<std::size_t> num_clusters() const noexcept { return num_clusters_; }

    bool operator==(const LabeledDataset&) const = default;

private:
    std::vector<Utterance> utterances_;
    EmbeddingMatrix embeddings_;
    std::optional<std::size_t> num_clusters_;
};

/// Output of pooling: one vector per source utterance, same id order and dim.
struct RefinedEmbeddings {
    EmbeddingMatrix embeddings;
    std::vector<std::size_t> k_used;
};

enum class DatasetFormat { JsonLines };

/// Reads the JSON Lines dataset format:
/// {"id": str, "text": str, "label": str (optional), "embedding": [num, ...]}
LabeledDataset load_dataset(const std::filesystem::path& path, DatasetFormat format = DatasetFormat::JsonLines);
LabeledDataset parse_dataset_jsonl(std::string_view content, std::string_view source = "<memory>");

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path);
/// Writes `ds` with each embedding replaced by the matching refined row.
void save_refined(const LabeledDataset& ds, const RefinedEmbeddings& refined, const std::filesystem::path& path);

struct LabelSummary {
    std::map<std::string, std::size_t> counts;
    std::size_t labeled = 0;
    bool fully_labeled = false;
};

LabelSummary validate_labels(const LabeledDataset& ds);

/// Dense label codes 0..M-1 (in sorted label order). Throws ValidationError if any label is missing.
std::vector<int> label_codes(const LabeledDataset& ds);

/// Cluster count: explicit override, else the dataset's num_clusters, else the number of distinct labels.
std::size_t resolve_num_clusters(const LabeledDataset& ds, std::optional<std::size_t> override_m);

}  // namespace spill
