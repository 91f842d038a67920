#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <mutex>
#include <set>

#include <json.hpp>

#include "spill/error.hpp"
#include "spill/prompt.hpp"
#include "spill/remote.hpp"
#include "spill/selector.hpp"
#include "spill/stub_server.hpp"
#include "spill/synthetic.hpp"
#include "test_support.hpp"

using namespace spill;
using spill::testing::make_dataset;

namespace {

/// Replays a fixed list of responses, repeating the last one.
class ScriptedTransport : public ChatTransport {
public:
    explicit ScriptedTransport(std::vector<ChatResponse> script) : script_(std::move(script)) {}
    ChatResponse post(const std::string& body) override {
        bodies.push_back(body);
        const auto i = std::min(calls++, script_.size() - 1);
        return script_[i];
    }
    std::size_t calls = 0;
    std::vector<std::string> bodies;

private:
    std::vector<ChatResponse> script_;
};

ChatResponse reply(const std::string& content) {
    nlohmann::json j{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}};
    return {200, j.dump(), std::nullopt, ""};
}

SelectorConfig remote_cfg(std::size_t retries = 2) {
    SelectorConfig c;
    c.kind = SelectorKind::Remote;
    c.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    c.model_name = "test-model";
    c.max_retries = retries;
    c.retry_backoff = std::chrono::milliseconds(1);
    c.max_retry_wait = std::chrono::milliseconds(5);
    return c;
}

LabeledDataset refund_dataset() {
    return make_dataset({{0}, {1}, {2}, {3}, {4}},
                        {"request refund", "request refund", "pending", "request refund", "request refund"});
}

LabeledDataset intents(std::size_t n_intents, std::size_t per, std::uint64_t seed) {
    GaussianIntentsSpec spec;
    spec.intents = n_intents;
    spec.per_intent = per;
    spec.dim = 8;
    spec.seed = seed;
    return make_gaussian_intents(spec);
}

}  // namespace

TEST_CASE("oracle selects same-label candidates") {
    const auto ds = refund_dataset();
    const auto cs = build_candidate_set(ds, "p0", 4, 0);
    const auto o = select_oracle(cs, ds);
    CHECK(o.seed_id == "p0");
    CHECK(std::set<std::string>(o.selected_ids.begin(), o.selected_ids.end()) ==
          std::set<std::string>{"p1", "p3", "p4"});
    CHECK(o.parse_status == ParseStatus::Ok);
    CHECK(o.raw_reply.empty());

    const auto unlabeled = make_dataset({{0}, {1}, {2}});
    CHECK_THROWS_AS(select_oracle(build_candidate_set(unlabeled, "p0", 2, 0), unlabeled), ValidationError);
}

TEST_CASE("passthrough selects everything") {
    const auto ds = intents(2, 15, 1);
    const auto cs = build_candidate_set(ds, std::size_t{3});
    const auto o = select_passthrough(cs);
    CHECK(o.selected_ids.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(o.selected_ids[i] == cs.entries[i].id);
}

TEST_CASE("selection_stats arithmetic") {
    const auto ds = refund_dataset();
    SelectionOutcome o;
    o.seed_id = "p0";
    o.selected_ids = {"p1", "p2", "p3", "p4"};
    const std::vector<SelectionOutcome> one{o};
    const auto s = selection_stats(one, ds);
    CHECK(s.correct_ratio == 75.0);
    CHECK(s.mean_selection_count == 4.0);
    CHECK(s.total_correct == 3);

    SelectionOutcome empty;
    empty.seed_id = "p1";
    const std::vector<SelectionOutcome> none{empty};
    CHECK(selection_stats(none, ds).correct_ratio == 0.0);

    const auto big = intents(4, 20, 2);
    const auto sets = build_all_candidate_sets(big);
    SelectorConfig oracle;
    const auto oo = select_all(sets, oracle, big);
    CHECK(selection_stats(oo, big).correct_ratio == 100.0);
    SelectorConfig pass;
    pass.kind = SelectorKind::PassThrough;
    CHECK(selection_stats(select_all(sets, pass, big), big).mean_selection_count == 20.0);
}

TEST_CASE("remote selection maps display numbers back to ids") {
    const auto ds = intents(2, 15, 3);
    const auto cs = build_candidate_set(ds, std::size_t{0});
    const auto cfg = remote_cfg();
    ScriptedTransport t({reply("The Candidate utterances numbers are: 1, 5")});
    const auto o = select_remote(cs, ds, cfg, t);
    CHECK(o.parse_status == ParseStatus::Ok);
    CHECK(o.attempts == 1);
    REQUIRE(o.selected_ids.size() == 2);

    // rebuild the same prompt to learn which ids were shown as 1 and 5
    Rng shuffle(derive_seed(cfg.shuffle_seed, {cs.seed_row}));
    const auto p = build_prompt(ds.utterance(0), cs, ds, shuffle);
    const std::set<std::string> expect{p.mapping()[0], p.mapping()[4]};
    CHECK(std::set<std::string>(o.selected_ids.begin(), o.selected_ids.end()) == expect);

    const auto req = nlohmann::json::parse(t.bodies.at(0));
    CHECK(req.at("model") == "test-model");
    CHECK(req.at("messages")[0].at("content").get<std::string>() == p.rendered);
}

TEST_CASE("retry policy") {
    const auto ds = intents(2, 15, 4);
    const auto cs = build_candidate_set(ds, std::size_t{1});

    SUBCASE("malformed replies fall back to none after r+1 attempts") {
        for (std::size_t r : {0u, 1u, 3u}) {
            ScriptedTransport t({reply("no idea")});
            const auto o = select_remote(cs, ds, remote_cfg(r), t);
            CHECK(t.calls == r + 1);
            CHECK(o.attempts == r + 1);
            CHECK(o.parse_status == ParseStatus::FallbackNone);
            CHECK(o.selected_ids.empty());
            CHECK(o.raw_reply == "no idea");
        }
    }
    SUBCASE("a later good reply is used") {
        ScriptedTransport t({reply("hmm"), reply("The Candidate utterances numbers are: 2")});
        const auto o = select_remote(cs, ds, remote_cfg(), t);
        CHECK(o.attempts == 2);
        CHECK(o.parse_status == ParseStatus::Ok);
        CHECK(o.selected_ids.size() == 1);
    }
    SUBCASE("server errors are retried, then reported") {
        ScriptedTransport t({{503, "busy", 0.001, ""}});
        const auto o = select_remote(cs, ds, remote_cfg(2), t);
        CHECK(t.calls == 3);
        CHECK(o.parse_status == ParseStatus::Error);
        CHECK(o.selected_ids.empty());
    }
    SUBCASE("rate limit then success") {
        ScriptedTransport t({{429, "slow down", 0.0, ""}, reply("The Candidate utterances numbers are: none")});
        const auto o = select_remote(cs, ds, remote_cfg(2), t);
        CHECK(t.calls == 2);
        CHECK(o.parse_status == ParseStatus::Ok);
        CHECK(o.selected_ids.empty());
    }
    SUBCASE("client errors are not retried") {
        ScriptedTransport t({{401, "unauthorized", std::nullopt, ""}});
        const auto o = select_remote(cs, ds, remote_cfg(3), t);
        CHECK(t.calls == 1);
        CHECK(o.parse_status == ParseStatus::Error);
    }
    SUBCASE("transport failures are retried") {
        ScriptedTransport t({{0, "", std::nullopt, "connection refused"}});
        const auto o = select_remote(cs, ds, remote_cfg(1), t);
        CHECK(t.calls == 2);
        CHECK(o.parse_status == ParseStatus::Error);
        CHECK(o.note.find("connection refused") != std::string::npos);
    }
}

TEST_CASE("selector config validation") {
    SelectorConfig c;
    c.kind = SelectorKind::Remote;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.endpoint = "http://localhost:8000/v1/chat/completions";
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.model_name = "m";
    CHECK_NOTHROW(c.validate());
    c.max_in_flight = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("endpoint parsing") {
    const auto e = parse_endpoint("http://127.0.0.1:8080/v1/chat/completions");
    CHECK(e.scheme_host_port == "http://127.0.0.1:8080");
    CHECK(e.path == "/v1/chat/completions");
    CHECK(parse_endpoint("https://api.example.com").path == "/v1/chat/completions");
    CHECK_THROWS_AS(parse_endpoint("ftp://x"), ValidationError);
}

TEST_CASE("stub server integration") {
    const auto ds = intents(3, 12, 6);
    const auto sets = build_all_candidate_sets(ds);

    SUBCASE("scripted answer") {
        StubChatServer server([](const std::string&, std::size_t) {
            return StubReply{200, "The Candidate utterances numbers are: 1, 5", std::nullopt, false};
        });
        auto cfg = remote_cfg();
        cfg.endpoint = server.endpoint();
        const auto o = select(sets[0], cfg, ds);
        CHECK(o.parse_status == ParseStatus::Ok);
        CHECK(o.attempts == 1);
        CHECK(o.selected_ids.size() == 2);
        CHECK(server.requests() == 1);
    }

    SUBCASE("label oracle over HTTP equals the local oracle") {
        StubChatServer server(label_oracle_handler(ds));
        auto cfg = remote_cfg();
        cfg.endpoint = server.endpoint();
        cfg.max_in_flight = 4;
        const auto remote = select_all(sets, cfg, ds);
        const auto local = select_all(sets, SelectorConfig{}, ds);
        REQUIRE(remote.size() == local.size());
        for (std::size_t i = 0; i < remote.size(); ++i) {
            CHECK(remote[i].seed_id == local[i].seed_id);
            CHECK(remote[i].selected_ids == local[i].selected_ids);
            CHECK(remote[i].parse_status == ParseStatus::Ok);
        }
        CHECK(server.requests() == sets.size());
    }

    SUBCASE("unreachable endpoint") {
        std::string endpoint;
        {
            StubChatServer gone([](const std::string&, std::size_t) { return StubReply{}; });
            endpoint = gone.endpoint();
        }
        auto cfg = remote_cfg(1);
        cfg.endpoint = endpoint;
        cfg.request_timeout = std::chrono::milliseconds(500);
        const auto o = select(sets[0], cfg, ds);
        CHECK(o.parse_status == ParseStatus::Error);
        CHECK(o.attempts == 2);
    }
}

TEST_CASE("selections round-trip through JSONL") {
    std::vector<SelectionOutcome> v(2);
    v[0] = {"a", {"b", "c"}, "The Candidate utterances numbers are: 1, 2", ParseStatus::Ok, 1, ""};
    v[1] = {"b", {}, "garbage\nwith newline", ParseStatus::FallbackNone, 3, "answer marker not found"};
    const auto path = std::filesystem::temp_directory_path() / "spill_selections.jsonl";
    save_selections(v, path);
    CHECK(load_selections(path) == v);
}
