#include "spill/remote.hpp"

#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "spill/error.hpp"

namespace spill {

using nlohmann::json;

EndpointUrl parse_endpoint(std::string_view url) {
    static const std::regex re(R"(^(https?://[^/\s]+)(/[^\s]*)?$)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(url.begin(), url.end(), m, re)) {
        throw ValidationError("malformed endpoint URL '" + std::string(url) + "'");
    }
    EndpointUrl e;
    e.scheme_host_port = m[1].str();
    e.path = m[2].matched ? m[2].str() : "/v1/chat/completions";
    return e;
}

json make_chat_request(std::string_view model, std::string_view prompt, double temperature) {
    return {{"model", model},
            {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", temperature}};
}

std::string extract_assistant_text(std::string_view response_body) {
    json j;
    try {
        j = json::parse(response_body);
    } catch (const json::exception& e) {
        throw ReplyParseError(std::string("response is not JSON: ") + e.what());
    }
    const auto* content = [&]() -> const json* {
        if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
            return nullptr;
        const auto& first = j["choices"][0];
        if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) return nullptr;
        const auto& msg = first["message"];
        if (!msg.contains("content") || !msg["content"].is_string()) return nullptr;
        return &msg["content"];
    }();
    if (content == nullptr) throw ReplyParseError("response has no choices[0].message.content");
    return content->get<std::string>();
}

struct HttpChatTransport::Impl {
    std::unique_ptr<httplib::Client> client;
    std::string path;
    httplib::Headers headers;
};

HttpChatTransport::HttpChatTransport(std::string_view endpoint, std::chrono::milliseconds timeout,
                                     std::string_view api_key_env)
    : impl_(std::make_unique<Impl>()) {
    const auto url = parse_endpoint(endpoint);
    impl_->client = std::make_unique<httplib::Client>(url.scheme_host_port);
    if (!impl_->client->is_valid()) {
        throw ValidationError("unsupported endpoint '" + std::string(endpoint) + "' (https needs OpenSSL support)");
    }
    impl_->path = url.path;
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    impl_->client->set_connection_timeout(secs.count(), usecs.count());
    impl_->client->set_read_timeout(secs.count(), usecs.count());
    impl_->client->set_write_timeout(secs.count(), usecs.count());
    impl_->client->set_keep_alive(true);
    if (!api_key_env.empty()) {
        if (const char* key = std::getenv(std::string(api_key_env).c_str()); key != nullptr && *key != '\0') {
            impl_->headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
}

HttpChatTransport::~HttpChatTransport() = default;

ChatResponse HttpChatTransport::post(const std::string& json_body) {
    ChatResponse out;
    auto res = impl_->client->Post(impl_->path, impl_->headers, json_body, "application/json");
    if (!res) {
        out.status = 0;
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    if (res->has_header("Retry-After")) {
        const std::string v = res->get_header_value("Retry-After");
        char* end = nullptr;
        const double secs = std::strtod(v.c_str(), &end);
        if (end != v.c_str() && secs >= 0.0) out.retry_after_seconds = secs;
    }
    return out;
}

}  // namespace spill
