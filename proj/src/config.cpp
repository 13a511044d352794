#include "cotour/config.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <set>

namespace cotour {

namespace {

std::uint16_t port_value(const json& v, const std::string& path)
{
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > 65535) {
        throw DocumentError(path, "expected a port number in [0, 65535]");
    }
    return static_cast<std::uint16_t>(v.get<std::int64_t>());
}

std::string resolve(const std::string& base_dir, const std::string& p)
{
    const std::filesystem::path path(p);
    if (p.empty() || path.is_absolute()) {
        return p;
    }
    return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

} // namespace

ServerConfig server_config_from_json(const json& j, const std::string& base_dir)
{
    if (!j.is_object()) {
        throw DocumentError("/", "config must be an object");
    }
    static const std::set<std::string> kKeys{"host", "port", "ws_port", "tick_rate", "world",
                                             "record", "log_level", "session"};
    for (const auto& [k, v] : j.items()) {
        if (!kKeys.count(k)) {
            throw DocumentError(child_path("", k), "unknown key");
        }
    }
    ServerConfig c;
    if (j.contains("host")) {
        c.host = require_string(j, "host", "");
    }
    if (j.contains("port")) {
        c.port = port_value(j["port"], "/port");
    }
    if (j.contains("ws_port")) {
        if (j["ws_port"].is_null()) {
            c.ws_port.reset();
        } else {
            c.ws_port = port_value(j["ws_port"], "/ws_port");
        }
    }
    if (j.contains("tick_rate")) {
        c.tick_rate = require_number(j, "tick_rate", "");
    }
    c.world_path = resolve(base_dir, require_string(j, "world", ""));
    if (j.contains("record")) {
        c.record_path = resolve(base_dir, require_string(j, "record", ""));
    }
    if (j.contains("log_level")) {
        c.log_level = require_string(j, "log_level", "");
    }
    if (j.contains("session")) {
        c.session = session_config_from_json(j["session"], "/session");
    }
    validate(c);
    return c;
}

ServerConfig load_server_config_file(const std::string& path)
{
    const json doc = read_document_file(path);
    try {
        return server_config_from_json(doc, std::filesystem::path(path).parent_path().string());
    } catch (const DocumentError& e) {
        throw DocumentError(path + ": " + e.where(), std::string(e.what()).substr(e.where().size() + 2));
    }
}

std::optional<std::string> process_env(const std::string& name)
{
    if (const char* v = std::getenv(name.c_str())) {
        return std::string(v);
    }
    return std::nullopt;
}

void apply_env_overrides(ServerConfig& config, const EnvLookup& env)
{
    const auto port = [&](const std::string& name) -> std::optional<std::uint16_t> {
        const auto v = env(name);
        if (!v) {
            return std::nullopt;
        }
        unsigned value = 0;
        const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), value);
        if (ec != std::errc{} || end != v->data() + v->size() || value > 65535) {
            throw DocumentError(name, "expected a port number, got \"" + *v + "\"");
        }
        return static_cast<std::uint16_t>(value);
    };
    if (const auto p = port("COTOUR_PORT")) {
        config.port = *p;
    }
    if (const auto p = port("COTOUR_WS_PORT")) {
        config.ws_port = *p;
    }
    if (const auto v = env("COTOUR_TICK_RATE")) {
        char* end = nullptr;
        const double rate = std::strtod(v->c_str(), &end);
        if (v->empty() || *end != '\0') {
            throw DocumentError("COTOUR_TICK_RATE", "expected a number, got \"" + *v + "\"");
        }
        config.tick_rate = rate;
    }
    validate(config);
}

void validate(const ServerConfig& config)
{
    if (!(config.tick_rate > 0.0 && config.tick_rate <= 1000.0)) {
        throw DocumentError("/tick_rate", "must be in (0, 1000]");
    }
    if (config.world_path.empty()) {
        throw DocumentError("/world", "a world file is required");
    }
    if (config.ws_port && *config.ws_port != 0 && *config.ws_port == config.port) {
        throw DocumentError("/ws_port", "must differ from port");
    }
    validate(config.session);
}

} // namespace cotour
