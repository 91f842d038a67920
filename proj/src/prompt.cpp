#include "spill/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <climits>
#include <numeric>
#include <set>

#include "spill/error.hpp"

namespace spill {

namespace {

constexpr std::string_view kInstructions =
    "Task Instructions:\n"
    "\n"
    "Step 1: Identify Intent Clusters\n"
    "Review the Candidate Utterances to identify their individual intents and group them into clusters based on "
    "shared intent. Candidates may either align with the same cluster as the Target Utterance or belong to entirely "
    "different clusters.\n"
    "Note: Intent refers to the request or the purpose the user wants to achieve.\n"
    "\n"
    "Step 2: Match Intent with Target Utterance\n"
    "Compare each Candidate's intent to the Target Utterance, using the clusters you identified. Select only "
    "Candidates from the same intent cluster as the Target Utterance.\n"
    "Note: Choose a Candidate only if its intent clearly aligns with the Target Utterance's purpose.\n"
    "\n"
    "Answer Format:\n"
    "Only provide the final selection of Candidate Utterances by listing their numbers if they match the Target "
    "Utterance intent or request.\n"
    "1. If Candidates 3, 4, 9, and 11 match, write: The Candidate utterances numbers are: 3, 4, 9, 11\n"
    "2. If no Candidate matches, write: The Candidate utterances numbers are: none\n"
    "Note: Stick to the answer format and avoid providing extra explanations.\n";

constexpr std::string_view kTaskHeader = "Task:\n";
constexpr std::string_view kTargetPrefix = "Target Utterance: ";
constexpr std::string_view kCandidatesHeader = "Candidate Utterances:";

std::string one_line(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string_view prompt_instructions() { return kInstructions; }

std::vector<std::string> PromptInstance::mapping() const {
    std::vector<std::string> m;
    m.reserve(candidates.size());
    for (const auto& c : candidates) m.push_back(c.id);
    return m;
}

std::string render_prompt(std::string_view target_text, std::span<const std::string> candidate_texts) {
    std::string out(kInstructions);
    out += '\n';
    out += kTaskHeader;
    out += kTargetPrefix;
    out += one_line(target_text);
    out += '\n';
    out += kCandidatesHeader;
    out += '\n';
    for (std::size_t i = 0; i < candidate_texts.size(); ++i) {
        out += std::to_string(i + 1);
        out += ". ";
        out += one_line(candidate_texts[i]);
        out += '\n';
    }
    return out;
}

PromptInstance build_prompt(const Utterance& seed, const CandidateSet& cs, const LabeledDataset& ds, Rng& shuffle) {
    if (cs.entries.empty()) throw ValidationError("cannot build a prompt for an empty candidate set");
    std::vector<std::size_t> order(cs.entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle.shuffle(std::span<std::size_t>(order));

    PromptInstance p;
    p.seed_text = seed.text;
    std::vector<std::string> texts;
    texts.reserve(order.size());
    for (std::size_t n = 0; n < order.size(); ++n) {
        const auto& e = cs.entries[order[n]];
        const auto& text = ds.utterance(e.row).text;
        p.candidates.push_back({n + 1, e.id, text});
        texts.push_back(text);
    }
    p.rendered = render_prompt(seed.text, texts);
    return p;
}

std::string ParsedReply::note() const {
    std::string s;
    auto list = [](const std::vector<long long>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(v[i]);
        }
        return out;
    };
    if (!out_of_range.empty()) s += "out-of-range: " + list(out_of_range);
    if (!duplicates.empty()) {
        if (!s.empty()) s += "; ";
        s += "duplicate: " + list(duplicates);
    }
    return s;
}

ParsedReply parse_reply(std::string_view reply, std::span<const std::string> mapping) {
    const std::string lowered = lower(reply);
    const std::string marker = lower(kAnswerMarker);
    const auto at = lowered.rfind(marker);
    if (at == std::string::npos) throw ReplyParseError("answer marker not found");

    std::string_view rest = reply.substr(at + marker.size());
    std::string_view tail;
    while (true) {
        const auto nl = rest.find('\n');
        tail = trim(rest.substr(0, nl));
        if (!tail.empty() || nl == std::string_view::npos) break;
        rest.remove_prefix(nl + 1);
    }
    while (!tail.empty() && (tail.back() == '.' || tail.back() == ']')) tail = trim(tail.substr(0, tail.size() - 1));
    if (!tail.empty() && tail.front() == '[') tail = trim(tail.substr(1));
    if (tail.empty()) throw ReplyParseError("empty answer list");

    ParsedReply out;
    if (lower(tail) == "none") {
        out.none = true;
        return out;
    }

    std::vector<long long> numbers;
    while (true) {
        const auto comma = tail.find(',');
        std::string_view tok = trim(tail.substr(0, comma));
        if (lower(tok.substr(0, 4)) == "and ") tok = trim(tok.substr(4));
        if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            throw ReplyParseError("unparsable answer token '" + std::string(tok) + "'");
        }
        long long v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec == std::errc::result_out_of_range) v = LLONG_MAX;
        numbers.push_back(v);
        if (comma == std::string_view::npos) break;
        tail.remove_prefix(comma + 1);
    }

    std::set<long long> seen;
    for (long long v : numbers) {
        if (v < 1 || static_cast<unsigned long long>(v) > mapping.size()) {
            out.out_of_range.push_back(v);
            continue;
        }
        if (!seen.insert(v).second) {
            out.duplicates.push_back(v);
            continue;
        }
    }
    for (long long v : seen) out.ids.push_back(mapping[static_cast<std::size_t>(v - 1)]);
    return out;
}

PromptView parse_rendered_prompt(std::string_view prompt) {
    PromptView view;
    const auto task = prompt.rfind(std::string("\n") + std::string(kTaskHeader));
    if (task == std::string_view::npos) throw ReplyParseError("prompt has no task section");
    std::string_view body = prompt.substr(task + 1 + kTaskHeader.size());

    auto next_line = [&body]() {
        const auto nl = body.find('\n');
        std::string_view line = body.substr(0, nl);
        body.remove_prefix(nl == std::string_view::npos ? body.size() : nl + 1);
        return line;
    };
    std::string_view line = next_line();
    if (line.substr(0, kTargetPrefix.size()) != kTargetPrefix) throw ReplyParseError("prompt has no target line");
    view.target = std::string(line.substr(kTargetPrefix.size()));
    if (trim(next_line()) != kCandidatesHeader) throw ReplyParseError("prompt has no candidate header");
    for (std::size_t n = 1; !body.empty(); ++n) {
        line = next_line();
        const std::string prefix = std::to_string(n) + ". ";
        if (line.substr(0, prefix.size()) != prefix) throw ReplyParseError("candidate numbering broken at " + prefix);
        view.candidates.emplace_back(line.substr(prefix.size()));
    }
    return view;
}

}  // namespace spill
