#include "spill/stub_server.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "spill/error.hpp"
#include "spill/prompt.hpp"

namespace spill {

using nlohmann::json;

struct StubChatServer::Impl {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<std::size_t> requests{0};
    Handler handler;
};

StubChatServer::StubChatServer(Handler handler, int port) : impl_(std::make_unique<Impl>()) {
    impl_->handler = std::move(handler);
    impl_->server.new_task_queue = [] { return new httplib::ThreadPool(32); };
    impl_->server.Post(R"(/.*)", [impl = impl_.get()](const httplib::Request& req, httplib::Response& res) {
        const std::size_t index = impl->requests++;
        std::string prompt;
        try {
            const auto body = json::parse(req.body);
            for (const auto& m : body.at("messages")) {
                if (m.value("role", std::string{}) == "user") prompt = m.at("content").get<std::string>();
            }
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(-1, ' ', false, json::error_handler_t::replace),
                            "application/json");
            return;
        }
        StubReply reply = impl->handler(prompt, index);
        res.status = reply.status;
        if (reply.retry_after_seconds) res.set_header("Retry-After", std::to_string(*reply.retry_after_seconds));
        if (reply.raw_body || reply.status != 200) {
            res.set_content(reply.content, "application/json");
            return;
        }
        const json completion{
            {"id", "stub-" + std::to_string(index)},
            {"object", "chat.completion"},
            {"choices", json::array({{{"index", 0},
                                      {"message", {{"role", "assistant"}, {"content", reply.content}}},
                                      {"finish_reason", "stop"}}})}};
        res.set_content(completion.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
    });

    impl_->port = port == 0 ? impl_->server.bind_to_any_port("127.0.0.1")
                            : (impl_->server.bind_to_port("127.0.0.1", port) ? port : -1);
    if (impl_->port <= 0) throw RemoteError("stub server could not bind a port");
    impl_->thread = std::thread([impl = impl_.get()] { impl->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

StubChatServer::~StubChatServer() { stop(); }

int StubChatServer::port() const noexcept { return impl_->port; }

std::string StubChatServer::endpoint() const {
    return "http://127.0.0.1:" + std::to_string(impl_->port) + "/v1/chat/completions";
}

std::size_t StubChatServer::requests() const noexcept { return impl_->requests.load(); }

void StubChatServer::wait() {
    if (impl_->thread.joinable()) impl_->thread.join();
}

void StubChatServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

StubChatServer::Handler label_oracle_handler(std::unordered_map<std::string, std::string> label_by_text) {
    return [labels = std::move(label_by_text)](const std::string& prompt, std::size_t) {
        StubReply reply;
        PromptView view;
        try {
            view = parse_rendered_prompt(prompt);
        } catch (const ReplyParseError& e) {
            reply.status = 400;
            reply.content = json{{"error", e.what()}}.dump(-1, ' ', false, json::error_handler_t::replace);
            return reply;
        }
        const auto target = labels.find(view.target);
        std::string numbers;
        for (std::size_t i = 0; i < view.candidates.size(); ++i) {
            const auto it = labels.find(view.candidates[i]);
            if (target == labels.end() || it == labels.end() || it->second != target->second) continue;
            if (!numbers.empty()) numbers += ", ";
            numbers += std::to_string(i + 1);
        }
        reply.content = std::string(kAnswerMarker) + " " + (numbers.empty() ? "none" : numbers);
        return reply;
    };
}

StubChatServer::Handler label_oracle_handler(const LabeledDataset& ds) {
    std::unordered_map<std::string, std::string> m;
    for (const auto& u : ds.utterances()) {
        if (!u.label) throw ValidationError("oracle stub needs a label for '" + u.id + "'");
        if (!m.emplace(u.text, *u.label).second)
            throw ValidationError("oracle stub needs unique texts: '" + u.text + "'");
    }
    return label_oracle_handler(std::move(m));
}

}  // namespace spill
