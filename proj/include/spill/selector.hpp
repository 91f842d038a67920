/**
 * @file selector.hpp
 * @brief Second-stage selection backends and selection statistics.
 *
 * A selector picks, for each seed, the candidates that share its intent.
 * Remote asks a chat-completions endpoint using the prompt from prompt.hpp;
 * Oracle uses gold labels; PassThrough keeps every candidate.
 */
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spill/core.hpp"
#include "spill/stage1.hpp"

namespace spill {

enum class SelectorKind { Remote, Oracle, PassThrough };
enum class ParseStatus { Ok, FallbackNone, Error };

std::string_view to_string(SelectorKind k);
std::string_view to_string(ParseStatus s);
SelectorKind parse_selector_kind(std::string_view s);
ParseStatus parse_parse_status(std::string_view s);

struct SelectorConfig {
    SelectorKind kind = SelectorKind::Oracle;
    /// Full URL, e.g. http://127.0.0.1:8000/v1/chat/completions
    std::string endpoint;
    std::string model_name;
    std::size_t max_in_flight = 4;
    std::size_t max_retries = 2;
    std::chrono::milliseconds request_timeout{60000};
    std::uint64_t shuffle_seed = 0;
    double temperature = 0.0;
    /// Name of the environment variable holding the bearer token.
    std::string api_key_env = "SPILL_API_KEY";
    /// Base delay for exponential backoff when no Retry-After is given.
    std::chrono::milliseconds retry_backoff{500};
    /// Upper bound on any single wait between attempts.
    std::chrono::milliseconds max_retry_wait{30000};

    void validate() const;
};

nlohmann::json to_json(const SelectorConfig& c);

struct SelectionOutcome {
    std::string seed_id;
    /// Subset of the candidate ids, in candidate-set order.
    std::vector<std::string> selected_ids;
    std::string raw_reply;
    ParseStatus parse_status = ParseStatus::Ok;
    std::size_t attempts = 0;
    /// Dropped numbers, last error, etc.
    std::string note;

    bool operator==(const SelectionOutcome&) const = default;
};

/// Result of one HTTP exchange. status 0 means the request never got a response.
struct ChatResponse {
    int status = 0;
    std::string body;
    std::optional<double> retry_after_seconds;
    std::string error;
};

class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual ChatResponse post(const std::string& json_body) = 0;
};

using TransportFactory = std::function<std::unique_ptr<ChatTransport>()>;

SelectionOutcome select_oracle(const CandidateSet& cs, const LabeledDataset& ds);
SelectionOutcome select_passthrough(const CandidateSet& cs);
SelectionOutcome select_remote(const CandidateSet& cs, const LabeledDataset& ds, const SelectorConfig& cfg,
                               ChatTransport& transport);

/// Dispatches on cfg.kind; Remote opens an HTTP transport to cfg.endpoint.
SelectionOutcome select(const CandidateSet& cs, const SelectorConfig& cfg, const LabeledDataset& ds);

/// Selection for every candidate set; outcomes are returned in input order.
/// Remote selection runs on up to cfg.max_in_flight worker threads, each with
/// its own transport from `factory` (HTTP by default).
std::vector<SelectionOutcome> select_all(std::span<const CandidateSet> sets, const SelectorConfig& cfg,
                                         const LabeledDataset& ds, const TransportFactory& factory = {});

struct SelectionStats {
    /// Percentage of selections sharing the seed's label (0 when nothing was selected).
    double correct_ratio = 0.0;
    double mean_selection_count = 0.0;
    std::size_t total_selected = 0;
    std::size_t total_correct = 0;
    std::size_t seeds = 0;

    bool operator==(const SelectionStats&) const = default;
};

/// Requires gold labels for every seed and selected id.
SelectionStats selection_stats(std::span<const SelectionOutcome> outcomes, const LabeledDataset& ds);

nlohmann::json to_json(const SelectionStats& s);

/// JSONL: {"seed", "selected", "raw_reply", "parse_status", "attempts", "note"}
void save_selections(std::span<const SelectionOutcome> outcomes, const std::filesystem::path& path);
std::vector<SelectionOutcome> load_selections(const std::filesystem::path& path);

}  // namespace spill
