#pragma once

#include "cotour/session.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace cotour {

struct ServerConfig {
    std::string host = "127.0.0.1";
    /// Newline-delimited JSON over TCP. 0 picks a free port.
    std::uint16_t port = 7450;
    /// WebSocket flavor of the same protocol; nullopt disables it.
    std::optional<std::uint16_t> ws_port = 7451;
    double tick_rate = 30.0;
    std::string world_path;
    /// Session event log (JSONL); empty disables recording.
    std::string record_path;
    std::string log_level = "info";
    SessionConfig session;
};

/// Relative paths are resolved against `base_dir`. Unknown keys are rejected.
ServerConfig server_config_from_json(const json& j, const std::string& base_dir);
ServerConfig load_server_config_file(const std::string& path);

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;
/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Applies COTOUR_PORT, COTOUR_WS_PORT and COTOUR_TICK_RATE. Throws
/// DocumentError naming the variable when a value does not parse.
void apply_env_overrides(ServerConfig& config, const EnvLookup& env = process_env);

/// Throws DocumentError when a value is outside its domain.
void validate(const ServerConfig& config);

} // namespace cotour
