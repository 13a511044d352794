#pragma once

#include "cotour/session.hpp"

#include <string>
#include <vector>

namespace testing {

using namespace cotour;

inline std::string data_path(const std::string& rel) { return std::string(COTOUR_DATA_DIR) + "/" + rel; }
inline std::string fixture_path(const std::string& rel) { return std::string(COTOUR_FIXTURE_DIR) + "/" + rel; }

inline World test_world() { return load_world_file(data_path("worlds/test_city.json")); }

inline const Pose kHubPose = Pose::at({0.0, 0.75, 0.0});

/// A session with helpers to send messages as a given client and inspect
/// what came back.
struct Harness {
    explicit Harness(SessionConfig config = {}, World world = test_world()) : session(std::move(world), config) {}

    ClientId join(Role role)
    {
        const ClientId id = session.join(role, 0);
        seq[id.value] = 0;
        drain();
        return id;
    }

    /// Sends and returns the outbox produced by this one message.
    std::vector<Outgoing> send(ClientId from, Body body)
    {
        Message m{++seq[from.value], from, std::move(body)};
        last_seq = m.seq;
        session.handle(from, m);
        return drain();
    }

    /// Error sent back for the last message, if any (ignores "clamped").
    std::optional<msg::Error> error(const std::vector<Outgoing>& out) const
    {
        for (const auto& o : out) {
            if (const auto* e = std::get_if<msg::Error>(&o.message.body); e && e->ref_seq == last_seq) {
                return *e;
            }
        }
        return std::nullopt;
    }

    std::vector<Outgoing> marker(ClientId primary, const std::string& id, const Pose& pose)
    {
        return send(primary, msg::MarkerPose{id, pose});
    }

    /// Map-Hub at kHubPose, shovel and tangibles parked off the map.
    void place_markers(ClientId primary)
    {
        marker(primary, "map-hub", kHubPose);
        marker(primary, "pickup-shovel", Pose::at({0.5, 0.8, 0.3}));
        marker(primary, "tangible-1", Pose::at({0.62, 0.76, 0.35}));
        marker(primary, "tangible-2", Pose::at({0.75, 0.76, 0.1}));
        marker(primary, "tangible-3", Pose::at({0.85, 0.76, 0.1}));
    }

    std::vector<Outgoing> tick(double dt = 1.0 / 30.0)
    {
        session.tick(dt);
        return drain();
    }

    const AugmentationEntity& prop(PropKind kind) const
    {
        for (const auto& a : session.augmentation()) {
            if (a.prop == kind) {
                return a;
            }
        }
        throw std::logic_error("missing prop");
    }

    std::vector<Outgoing> drain()
    {
        auto out = session.take_outbox();
        all.insert(all.end(), out.begin(), out.end());
        return out;
    }

    EntityId avatar_of(ClientId c) const { return session.secondaries().at(c).avatar; }

    Session session;
    std::map<std::uint32_t, std::uint64_t> seq;
    std::uint64_t last_seq = 0;
    std::vector<Outgoing> all;
};

template <typename T>
std::vector<T> bodies_to(const std::vector<Outgoing>& out, ClientId to)
{
    std::vector<T> r;
    for (const auto& o : out) {
        if (o.to == to) {
            if (const auto* b = std::get_if<T>(&o.message.body)) {
                r.push_back(*b);
            }
        }
    }
    return r;
}

} // namespace testing
