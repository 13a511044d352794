#include "cotour/net/live_backend.hpp"

#include <thread>

namespace cotour::net {

LiveBackend::LiveBackend(Endpoint endpoint, Transport transport, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), transport_(transport), timeout_(timeout),
      observer_(Client::connect(endpoint_, transport_))
{
}

ClientId LiveBackend::join(Role role, std::uint64_t seq)
{
    auto client = Client::connect(endpoint_, transport_);
    std::vector<Message> received;
    const msg::Welcome welcome = client->join(role, seq, timeout_, &received);
    clients_[welcome.client] = std::move(client);
    pending_[welcome.client] = std::move(received);
    return welcome.client;
}

void LiveBackend::send(ClientId from, const Message& m)
{
    const auto it = clients_.find(from);
    if (it == clients_.end()) {
        throw ConnectionError("client " + std::to_string(from.value) + " has no connection");
    }
    it->second->send(m);
}

void LiveBackend::tick(double dt)
{
    std::this_thread::sleep_for(std::chrono::duration<double>(dt));
    time_ += dt;
}

std::vector<std::pair<ClientId, Message>> LiveBackend::drain()
{
    std::vector<std::pair<ClientId, Message>> out;
    for (auto& [id, client] : clients_) {
        std::vector<Message> received = std::move(pending_[id]);
        pending_[id].clear();
        if (!client->closed()) {
            client->request_snapshot(timeout_, &received);
        }
        for (auto& m : received) {
            out.emplace_back(id, std::move(m));
        }
    }
    return out;
}

json LiveBackend::snapshot() { return observer_->request_snapshot(timeout_); }

} // namespace cotour::net
