/**
 * @file prompt.hpp
 * @brief Second-stage selection prompt and reply parsing.
 */
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spill/core.hpp"
#include "spill/rng.hpp"
#include "spill/stage1.hpp"

namespace spill {

/// The line a reply must contain, followed by numbers or "none".
inline constexpr std::string_view kAnswerMarker = "The Candidate utterances numbers are:";

/// Fixed instruction text preceding the "Task:" section.
std::string_view prompt_instructions();

struct NumberedCandidate {
    std::size_t number = 0;  // 1-based display number
    std::string id;
    std::string text;
};

struct PromptInstance {
    std::string seed_text;
    std::vector<NumberedCandidate> candidates;
    std::string rendered;

    /// mapping()[n - 1] is the candidate id shown as number n.
    std::vector<std::string> mapping() const;
};

/// Renders the prompt for a target and already-ordered candidate texts.
/// Newlines inside texts are collapsed to spaces so every candidate stays on one line.
std::string render_prompt(std::string_view target_text, std::span<const std::string> candidate_texts);

/// Shuffles the candidate set with `shuffle`, numbers it 1..L and renders.
PromptInstance build_prompt(const Utterance& seed, const CandidateSet& cs, const LabeledDataset& ds, Rng& shuffle);

struct ParsedReply {
    /// Selected ids in ascending display-number order, deduplicated.
    std::vector<std::string> ids;
    bool none = false;
    std::vector<long long> out_of_range;
    std::vector<long long> duplicates;

    bool clean() const noexcept { return out_of_range.empty() && duplicates.empty(); }
    /// Human-readable note on dropped numbers; empty when clean.
    std::string note() const;
};

/// Finds the last answer marker (case-insensitive) and reads the list after it
/// up to the end of that line. Throws ReplyParseError if there is no marker or
/// the tail is neither "none" nor a comma-separated list of integers.
ParsedReply parse_reply(std::string_view reply, std::span<const std::string> mapping);

/// Inverse of render_prompt, used by the stub server: target text and candidate texts in display order.
struct PromptView {
    std::string target;
    std::vector<std::string> candidates;
};
PromptView parse_rendered_prompt(std::string_view prompt);

}  // namespace spill
