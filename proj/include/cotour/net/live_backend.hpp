#pragma once

#include "cotour/net/client.hpp"
#include "cotour/scenario.hpp"

#include <map>

namespace cotour::net {

/// Runs scenario clients against a running server. Time advances in wall
/// clock: tick(dt) sleeps for dt while the server ticks on its own.
class LiveBackend : public ScenarioBackend {
public:
    explicit LiveBackend(Endpoint endpoint, Transport transport = Transport::Tcp,
                         std::chrono::milliseconds timeout = std::chrono::seconds(5));

    ClientId join(Role role, std::uint64_t seq) override;
    void send(ClientId from, const Message& m) override;
    void tick(double dt) override;
    /// Flushes every client with a snapshot query so that all replies to
    /// earlier sends have arrived.
    std::vector<std::pair<ClientId, Message>> drain() override;
    json snapshot() override;
    double time() const override { return time_; }

private:
    Endpoint endpoint_;
    Transport transport_;
    std::chrono::milliseconds timeout_;
    std::unique_ptr<Client> observer_;
    std::map<ClientId, std::unique_ptr<Client>> clients_;
    std::map<ClientId, std::vector<Message>> pending_;
    double time_ = 0.0;
};

} // namespace cotour::net
