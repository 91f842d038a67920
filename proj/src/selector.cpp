#include "spill/selector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "spill/error.hpp"
#include "spill/prompt.hpp"
#include "spill/remote.hpp"
#include "spill/rng.hpp"

namespace spill {

using nlohmann::json;

std::string_view to_string(SelectorKind k) {
    switch (k) {
        case SelectorKind::Remote: return "remote";
        case SelectorKind::Oracle: return "oracle";
        case SelectorKind::PassThrough: return "passthrough";
    }
    return "?";
}

std::string_view to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::Ok: return "ok";
        case ParseStatus::FallbackNone: return "fallback_none";
        case ParseStatus::Error: return "error";
    }
    return "?";
}

SelectorKind parse_selector_kind(std::string_view s) {
    if (s == "remote") return SelectorKind::Remote;
    if (s == "oracle") return SelectorKind::Oracle;
    if (s == "passthrough") return SelectorKind::PassThrough;
    throw ValidationError("unknown selector '" + std::string(s) + "'");
}

ParseStatus parse_parse_status(std::string_view s) {
    if (s == "ok") return ParseStatus::Ok;
    if (s == "fallback_none") return ParseStatus::FallbackNone;
    if (s == "error") return ParseStatus::Error;
    throw ValidationError("unknown parse status '" + std::string(s) + "'");
}

void SelectorConfig::validate() const {
    if (max_in_flight == 0) throw ValidationError("max_in_flight must be positive");
    if (kind == SelectorKind::Remote) {
        if (endpoint.empty()) throw ValidationError("remote selector requires an endpoint");
        if (model_name.empty()) throw ValidationError("remote selector requires a model name");
        parse_endpoint(endpoint);
    }
    if (!std::isfinite(temperature) || temperature < 0.0) throw ValidationError("temperature must be >= 0");
}

json to_json(const SelectorConfig& c) {
    json j{{"kind", to_string(c.kind)}, {"shuffle_seed", c.shuffle_seed}};
    if (c.kind == SelectorKind::Remote) {
        j["endpoint"] = c.endpoint;
        j["model_name"] = c.model_name;
        j["max_in_flight"] = c.max_in_flight;
        j["max_retries"] = c.max_retries;
        j["request_timeout_ms"] = c.request_timeout.count();
        j["temperature"] = c.temperature;
        j["api_key_env"] = c.api_key_env;
    }
    return j;
}

namespace {

/// Keeps candidate-set order so downstream pooling is independent of display order.
std::vector<std::string> in_candidate_order(const CandidateSet& cs, const std::vector<std::string>& picked) {
    const std::unordered_set<std::string> want(picked.begin(), picked.end());
    std::vector<std::string> out;
    for (const auto& e : cs.entries) {
        if (want.contains(e.id)) out.push_back(e.id);
    }
    return out;
}

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

}  // namespace

SelectionOutcome select_oracle(const CandidateSet& cs, const LabeledDataset& ds) {
    const auto& seed = ds.utterance(cs.seed_row);
    if (!seed.label) throw ValidationError("oracle selection needs a label for seed '" + seed.id + "'");
    SelectionOutcome out;
    out.seed_id = cs.seed_id;
    for (const auto& e : cs.entries) {
        const auto& cand = ds.utterance(e.row);
        if (!cand.label) throw ValidationError("oracle selection needs a label for candidate '" + cand.id + "'");
        if (*cand.label == *seed.label) out.selected_ids.push_back(e.id);
    }
    return out;
}

SelectionOutcome select_passthrough(const CandidateSet& cs) {
    SelectionOutcome out;
    out.seed_id = cs.seed_id;
    for (const auto& e : cs.entries) out.selected_ids.push_back(e.id);
    return out;
}

SelectionOutcome select_remote(const CandidateSet& cs, const LabeledDataset& ds, const SelectorConfig& cfg,
                               ChatTransport& transport) {
    Rng shuffle(derive_seed(cfg.shuffle_seed, {cs.seed_row}));
    const auto prompt = build_prompt(ds.utterance(cs.seed_row), cs, ds, shuffle);
    const auto mapping = prompt.mapping();
    const std::string body = make_chat_request(cfg.model_name, prompt.rendered, cfg.temperature)
                                 .dump(-1, ' ', false, json::error_handler_t::replace);

    SelectionOutcome out;
    out.seed_id = cs.seed_id;
    bool last_was_parse_failure = false;
    for (std::size_t attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        ++out.attempts;
        const ChatResponse resp = transport.post(body);
        if (resp.status == 200) {
            try {
                out.raw_reply = extract_assistant_text(resp.body);
                const auto parsed = parse_reply(out.raw_reply, mapping);
                out.selected_ids = in_candidate_order(cs, parsed.ids);
                out.parse_status = ParseStatus::Ok;
                out.note = parsed.note();
                return out;
            } catch (const ReplyParseError& e) {
                last_was_parse_failure = true;
                out.note = e.what();
            }
            continue;
        }

        last_was_parse_failure = false;
        out.raw_reply.clear();
        out.note = resp.status == 0 ? "transport: " + resp.error : "http status " + std::to_string(resp.status);
        if (!retryable(resp.status)) break;
        if (attempt == cfg.max_retries) break;
        std::chrono::milliseconds wait = cfg.retry_backoff * (1LL << std::min<std::size_t>(attempt, 16));
        if (resp.retry_after_seconds) {
            wait = std::chrono::milliseconds(static_cast<long long>(*resp.retry_after_seconds * 1000.0));
        }
        std::this_thread::sleep_for(std::min(wait, cfg.max_retry_wait));
    }
    out.selected_ids.clear();
    out.parse_status = last_was_parse_failure ? ParseStatus::FallbackNone : ParseStatus::Error;
    return out;
}

SelectionOutcome select(const CandidateSet& cs, const SelectorConfig& cfg, const LabeledDataset& ds) {
    switch (cfg.kind) {
        case SelectorKind::Oracle: return select_oracle(cs, ds);
        case SelectorKind::PassThrough: return select_passthrough(cs);
        case SelectorKind::Remote: {
            cfg.validate();
            HttpChatTransport transport(cfg.endpoint, cfg.request_timeout, cfg.api_key_env);
            return select_remote(cs, ds, cfg, transport);
        }
    }
    throw ValidationError("unknown selector kind");
}

std::vector<SelectionOutcome> select_all(std::span<const CandidateSet> sets, const SelectorConfig& cfg,
                                         const LabeledDataset& ds, const TransportFactory& factory) {
    cfg.validate();
    std::vector<SelectionOutcome> outcomes(sets.size());
    if (cfg.kind != SelectorKind::Remote) {
        for (std::size_t i = 0; i < sets.size(); ++i) outcomes[i] = select(sets[i], cfg, ds);
        return outcomes;
    }

    const TransportFactory make = factory ? factory : TransportFactory([&cfg] {
        return std::unique_ptr<ChatTransport>(
            std::make_unique<HttpChatTransport>(cfg.endpoint, cfg.request_timeout, cfg.api_key_env));
    });
    const std::size_t workers = std::min(cfg.max_in_flight, std::max<std::size_t>(1, sets.size()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                auto transport = make();
                for (std::size_t i = next++; i < sets.size(); i = next++) {
                    outcomes[i] = select_remote(sets[i], ds, cfg, *transport);
                }
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next = sets.size();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return outcomes;
}

SelectionStats selection_stats(std::span<const SelectionOutcome> outcomes, const LabeledDataset& ds) {
    SelectionStats s;
    s.seeds = outcomes.size();
    const auto& emb = ds.embeddings();
    for (const auto& o : outcomes) {
        const auto& seed = ds.utterance(emb.index_of(o.seed_id));
        if (!seed.label) throw ValidationError("selection stats need a label for seed '" + seed.id + "'");
        for (const auto& id : o.selected_ids) {
            const auto& cand = ds.utterance(emb.index_of(id));
            if (!cand.label) throw ValidationError("selection stats need a label for '" + cand.id + "'");
            ++s.total_selected;
            s.total_correct += *cand.label == *seed.label;
        }
    }
    if (s.total_selected > 0) {
        s.correct_ratio = 100.0 * static_cast<double>(s.total_correct) / static_cast<double>(s.total_selected);
    }
    if (s.seeds > 0) s.mean_selection_count = static_cast<double>(s.total_selected) / static_cast<double>(s.seeds);
    return s;
}

json to_json(const SelectionStats& s) {
    return {{"correct_ratio", s.correct_ratio},
            {"mean_selection_count", s.mean_selection_count},
            {"total_selected", s.total_selected},
            {"total_correct", s.total_correct},
            {"seeds", s.seeds}};
}

void save_selections(std::span<const SelectionOutcome> outcomes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& o : outcomes) {
        out << json{{"seed", o.seed_id},        {"selected", o.selected_ids},
                    {"raw_reply", o.raw_reply}, {"parse_status", to_string(o.parse_status)},
                    {"attempts", o.attempts},   {"note", o.note}}
                   .dump(-1, ' ', false, json::error_handler_t::replace)
            << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<SelectionOutcome> load_selections(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<SelectionOutcome> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            SelectionOutcome o;
            o.seed_id = j.at("seed").get<std::string>();
            o.selected_ids = j.at("selected").get<std::vector<std::string>>();
            o.raw_reply = j.value("raw_reply", std::string{});
            o.parse_status = parse_parse_status(j.value("parse_status", std::string("ok")));
            o.attempts = j.value("attempts", std::size_t{0});
            o.note = j.value("note", std::string{});
            out.push_back(std::move(o));
        } catch (const json::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace spill
