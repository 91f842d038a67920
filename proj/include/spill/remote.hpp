#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "spill/selector.hpp"

namespace spill {

struct EndpointUrl {
    std::string scheme_host_port;  // "http://host:port"
    std::string path;              // "/v1/chat/completions"
};

/// Splits an http(s) URL; throws ValidationError if malformed.
EndpointUrl parse_endpoint(std::string_view url);

/// {"model", "messages": [{"role": "user", "content": prompt}], "temperature"}
nlohmann::json make_chat_request(std::string_view model, std::string_view prompt, double temperature);

/// choices[0].message.content; throws ReplyParseError if absent.
std::string extract_assistant_text(std::string_view response_body);

/// HTTP POST transport. Reads the bearer token from the environment once at construction.
class HttpChatTransport : public ChatTransport {
public:
    HttpChatTransport(std::string_view endpoint, std::chrono::milliseconds timeout, std::string_view api_key_env);
    ~HttpChatTransport() override;

    ChatResponse post(const std::string& json_body) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace spill
