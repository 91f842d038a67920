/**
 * @file stub_server.hpp
 * @brief In-process chat-completions server for tests and offline runs.
 *
 * Listens on 127.0.0.1 and answers POSTs to /v1/chat/completions by
 * passing the user message to a scripted handler.
 */
#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>

#include "spill/core.hpp"

namespace spill {

struct StubReply {
    int status = 200;
    /// Assistant message text (status 200) or raw error body.
    std::string content;
    std::optional<double> retry_after_seconds;
    /// Send `content` verbatim as the HTTP body instead of wrapping it in a completion object.
    bool raw_body = false;
};

class StubChatServer {
public:
    /// `request_index` counts requests from 0 across all connections.
    using Handler = std::function<StubReply(const std::string& prompt, std::size_t request_index)>;

    explicit StubChatServer(Handler handler, int port = 0);
    ~StubChatServer();
    StubChatServer(const StubChatServer&) = delete;
    StubChatServer& operator=(const StubChatServer&) = delete;

    int port() const noexcept;
    /// http://127.0.0.1:<port>/v1/chat/completions
    std::string endpoint() const;
    std::size_t requests() const noexcept;
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Replies with the numbers of candidates whose text maps to the same label as
/// the target text; "none" if there are none. Unknown texts never match.
StubChatServer::Handler label_oracle_handler(std::unordered_map<std::string, std::string> label_by_text);

/// label_oracle_handler over the texts and labels of `ds`. Texts must be unique.
StubChatServer::Handler label_oracle_handler(const LabeledDataset& ds);

}  // namespace spill
