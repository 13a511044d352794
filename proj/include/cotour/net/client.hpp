#pragma once

#include "cotour/protocol.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cotour::net {

enum class Transport { Tcp, WebSocket };

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 7450;
};

/// Parses "host:port" or ":port". Throws std::invalid_argument.
Endpoint parse_endpoint(const std::string& text);

class ConnectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Blocking client. A reader thread queues incoming messages; sends happen
/// on the caller's thread.
class Client {
public:
    using Clock = std::chrono::steady_clock;

    static std::unique_ptr<Client> connect(const Endpoint& endpoint, Transport transport = Transport::Tcp);
    ~Client();

    void send(const Message& m);
    /// Sends text as-is (one message); used to exercise the decoder.
    void send_raw(const std::string& text);
    /// Next message, or nullopt after the timeout or once the connection closed.
    std::optional<Message> receive(std::chrono::milliseconds timeout);
    /// Waits for the first message matching `pred`; earlier ones are appended
    /// to `skipped` when given. Throws ConnectionError on timeout.
    Message receive_until(const std::function<bool(const Message&)>& pred, std::chrono::milliseconds timeout,
                          std::vector<Message>* skipped = nullptr);

    /// Sends Join and waits for Welcome. Throws Rejected when the server
    /// answers with an Error.
    msg::Welcome join(Role role, std::uint64_t seq, std::chrono::milliseconds timeout,
                      std::vector<Message>* skipped = nullptr);
    /// Snapshot query, answered out of band (seq 0). Messages that arrive
    /// before the reply are appended to `skipped`.
    json request_snapshot(std::chrono::milliseconds timeout, std::vector<Message>* skipped = nullptr);

    bool closed() const;
    void close();

private:
    struct Impl;
    explicit Client(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

} // namespace cotour::net
