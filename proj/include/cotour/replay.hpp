#pragma once

#include "cotour/session.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

namespace cotour {

inline constexpr int kLogVersion = 1;

class ReplayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Session wrapper that appends every input event to a JSONL log. The log
/// alone is enough to rebuild the final state.
class SessionHost {
public:
    SessionHost(World world, SessionConfig config, std::ostream* log = nullptr);

    /// Same as Session::join; the attempt is logged even when rejected.
    ClientId join(Role role, std::uint64_t seq = 0);
    void leave(ClientId client);
    void handle(ClientId sender, const Message& message);
    void tick(double dt);

    Session& session() { return session_; }
    const Session& session() const { return session_; }
    std::size_t events() const { return events_; }

private:
    void write(json event);

    Session session_;
    std::ostream* log_;
    std::size_t events_ = 0;
};

struct ReplayResult {
    json snapshot;
    std::string hash;
    std::size_t events = 0;
    bool truncated = false;
    /// Human-readable description of where the log stopped early.
    std::string note;
};

/// Replays a log without networking. Throws ReplayError on a version
/// mismatch or a missing header; a damaged tail is reported, not thrown.
ReplayResult replay(std::istream& log);
ReplayResult replay_file(const std::string& path);

} // namespace cotour
