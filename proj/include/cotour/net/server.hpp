#pragma once

#include "cotour/config.hpp"
#include "cotour/world.hpp"

#include <cstdint>
#include <memory>
#include <optional>

namespace cotour::net {

/// Authoritative session server. One I/O thread owns the session; every
/// connection has its own read loop and write queue. TCP carries one JSON
/// message per line, WebSocket one message per text frame.
class Server {
public:
    Server(ServerConfig config, World world);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds the listeners. Throws std::system_error when a port is taken.
    void start();
    /// Serves until stop(). Requires start().
    void run();
    /// Runs the I/O loop on an internal thread.
    void run_in_background();
    /// Safe to call from any thread.
    void stop();

    std::uint16_t port() const;
    std::optional<std::uint16_t> ws_port() const;
    /// Current canonical snapshot, taken on the I/O thread.
    json snapshot();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace cotour::net
