#include "cotour/replay.hpp"

#include "cotour/canonical.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace cotour {

SessionHost::SessionHost(World world, SessionConfig config, std::ostream* log)
    : session_(world, config), log_(log)
{
    if (log_) {
        *log_ << json{{"log", "cotour-session"},
                      {"version", kLogVersion},
                      {"world", serialize_world(world)},
                      {"config", to_json(config)}}
                     .dump()
              << '\n';
        log_->flush();
    }
}

void SessionHost::write(json event)
{
    ++events_;
    if (!log_) {
        return;
    }
    *log_ << event.dump() << '\n';
    log_->flush();
}

ClientId SessionHost::join(Role role, std::uint64_t seq)
{
    json event{{"event", "join"}, {"role", to_string(role)}, {"seq", seq}};
    try {
        const ClientId id = session_.join(role, seq);
        event["client"] = id.value;
        write(std::move(event));
        return id;
    } catch (const Rejected&) {
        event["client"] = nullptr;
        write(std::move(event));
        throw;
    }
}

void SessionHost::leave(ClientId client)
{
    write({{"event", "leave"}, {"client", client.value}});
    session_.leave(client);
}

void SessionHost::handle(ClientId sender, const Message& message)
{
    write({{"event", "msg"}, {"from", sender.value}, {"msg", message_to_json(message)}});
    session_.handle(sender, message);
}

void SessionHost::tick(double dt)
{
    write({{"event", "tick"}, {"dt", dt}});
    session_.tick(dt);
}

namespace {

void apply_event(Session& s, const json& e)
{
    const std::string kind = require_string(e, "event", "");
    if (kind == "join") {
        const auto role = role_from_string(require_string(e, "role", ""));
        if (!role) {
            throw DocumentError("/role", "unknown role");
        }
        const std::uint64_t seq = e.contains("seq") ? require_uint(e, "seq", "") : 0;
        const json& expected = require(e, "client", "");
        try {
            const ClientId id = s.join(*role, seq);
            if (!expected.is_number_unsigned() || expected.get<std::uint32_t>() != id.value) {
                throw ReplayError("join produced client " + std::to_string(id.value) + ", log recorded " +
                                  expected.dump());
            }
        } catch (const Rejected&) {
            if (!expected.is_null()) {
                throw ReplayError("join was rejected but the log recorded client " + expected.dump());
            }
        }
    } else if (kind == "leave") {
        s.leave(ClientId{static_cast<std::uint32_t>(require_uint(e, "client", ""))});
    } else if (kind == "msg") {
        const auto from = ClientId{static_cast<std::uint32_t>(require_uint(e, "from", ""))};
        s.handle(from, message_from_json(require(e, "msg", "")));
    } else if (kind == "tick") {
        s.tick(require_number(e, "dt", ""));
    } else {
        throw DocumentError("/event", "unknown event \"" + kind + "\"");
    }
    s.take_outbox();
}

} // namespace

ReplayResult replay(std::istream& log)
{
    std::string line;
    if (!std::getline(log, line)) {
        throw ReplayError("empty log: missing header");
    }
    json header;
    try {
        header = parse_document(line);
    } catch (const DocumentError& e) {
        throw ReplayError(std::string("unreadable header: ") + e.what());
    }
    if (!header.is_object() || header.value("log", "") != "cotour-session") {
        throw ReplayError("not a session log");
    }
    if (!header.contains("version") || header["version"] != kLogVersion) {
        throw ReplayError("log version " + header.value("version", json(nullptr)).dump() +
                          " does not match this build (" + std::to_string(kLogVersion) + ")");
    }
    Session session(load_world(require(header, "world", "")),
                    session_config_from_json(require(header, "config", ""), "/config"));
    session.take_outbox();

    ReplayResult result;
    std::size_t line_no = 1;
    while (std::getline(log, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json event;
        try {
            event = parse_document(line);
            apply_event(session, event);
        } catch (const ReplayError&) {
            throw;
        } catch (const std::exception& e) {
            result.truncated = true;
            result.note = "stopped at line " + std::to_string(line_no) + ": " + e.what();
            break;
        }
        ++result.events;
    }
    result.snapshot = session.snapshot();
    result.hash = canonical_hash(result.snapshot);
    if (!result.truncated) {
        result.note = "replayed " + std::to_string(result.events) + " events";
    }
    return result;
}

ReplayResult replay_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ReplayError("cannot open " + path);
    }
    return replay(in);
}

} // namespace cotour
