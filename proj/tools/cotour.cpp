#include "cotour/canonical.hpp"
#include "cotour/config.hpp"
#include "cotour/net/client.hpp"
#include "cotour/net/live_backend.hpp"
#include "cotour/net/server.hpp"
#include "cotour/replay.hpp"
#include "cotour/scenario.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

using namespace cotour;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct ServeOptions {
    std::string config;
    std::optional<std::uint16_t> port;
    std::optional<std::uint16_t> ws_port;
    bool no_ws = false;
    std::optional<double> tick_rate;
    std::string world;
    std::string record;
    std::string log_level;
};

int serve(const ServeOptions& o)
{
    ServerConfig config;
    World world;
    try {
        if (!o.config.empty()) {
            config = load_server_config_file(o.config);
        } else if (o.world.empty()) {
            throw DocumentError("--world", "either --config or --world is required");
        }
        if (!o.world.empty()) {
            config.world_path = o.world;
        }
        apply_env_overrides(config);
        if (o.port) {
            config.port = *o.port;
        }
        if (o.ws_port) {
            config.ws_port = *o.ws_port;
        }
        if (o.no_ws) {
            config.ws_port.reset();
        }
        if (o.tick_rate) {
            config.tick_rate = *o.tick_rate;
        }
        if (!o.record.empty()) {
            config.record_path = o.record;
        }
        if (!o.log_level.empty()) {
            config.log_level = o.log_level;
        }
        validate(config);
        world = load_world_file(config.world_path);
    } catch (const DocumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    spdlog::set_level(spdlog::level::from_str(config.log_level));
    try {
        net::Server server(config, std::move(world));
        server.start();
        server.run();
    } catch (const std::system_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFail;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFail;
    }
    return 0;
}

struct ScenarioOptions {
    std::string path;
    std::string endpoint;
    bool websocket = false;
    std::string out;
    std::string messages;
    std::string record;
    bool json = false;
};

int run_scenario_cmd(const ScenarioOptions& o)
{
    Scenario scenario;
    TrackingScript tracking;
    try {
        scenario = load_scenario_file(o.path);
        if (!scenario.tracking_path.empty()) {
            tracking = load_tracking_script_file(scenario.tracking_path);
        }
        load_world_file(scenario.world_path);
    } catch (const DocumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::ofstream messages;
    std::ofstream record;
    RunOptions options;
    if (!o.messages.empty()) {
        messages.open(o.messages);
        options.message_log = &messages;
    }
    if (!o.record.empty()) {
        record.open(o.record);
    }

    ScenarioReport report;
    try {
        if (o.endpoint.empty()) {
            InProcessBackend backend(load_world_file(scenario.world_path), scenario.config,
                                     o.record.empty() ? nullptr : &record);
            report = run_scenario(scenario, tracking, backend, options);
        } else {
            net::LiveBackend backend(net::parse_endpoint(o.endpoint),
                                     o.websocket ? net::Transport::WebSocket : net::Transport::Tcp);
            report = run_scenario(scenario, tracking, backend, options);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFail;
    }

    const json j = report.to_json();
    if (!o.out.empty()) {
        std::ofstream(o.out) << j.dump(2) << '\n';
    }
    if (o.json) {
        std::cout << j.dump(2) << '\n';
    } else {
        for (const auto& s : report.steps) {
            for (const auto& f : s.failures) {
                std::cout << "FAIL step " << s.index << " (t=" << s.at << ", " << s.client << " " << s.action
                          << (s.note.empty() ? "" : ", " + s.note) << "): " << f << '\n';
            }
        }
        for (const auto& f : report.failures) {
            std::cout << "FAIL " << f << '\n';
        }
        std::cout << (report.passed ? "PASS " : "FAIL ") << report.scenario << ": " << report.steps.size()
                  << " steps, " << report.messages << " messages, " << report.simulated_seconds << " s simulated, "
                  << report.wall_seconds << " s wall, snapshot " << report.final_hash << '\n';
    }
    return report.exit_code();
}

int replay_cmd(const std::string& path, bool as_json)
{
    ReplayResult r;
    try {
        r = replay_file(path);
    } catch (const ReplayError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DocumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    if (as_json) {
        std::cout << json{{"hash", r.hash}, {"events", r.events}, {"truncated", r.truncated}, {"note", r.note},
                          {"snapshot", r.snapshot}}
                         .dump(2)
                  << '\n';
    } else {
        std::cout << r.hash << '\n' << r.note << '\n';
    }
    return 0;
}

int snapshot_cmd(const std::string& endpoint, bool websocket, bool canonical)
{
    try {
        auto client = net::Client::connect(net::parse_endpoint(endpoint),
                                           websocket ? net::Transport::WebSocket : net::Transport::Tcp);
        const json snap = client->request_snapshot(std::chrono::seconds(5));
        std::cout << (canonical ? canonical_dump(snap) : snap.dump(2)) << '\n';
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFail;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Co-located tour session server and test harness"};
    app.require_subcommand(1);

    ServeOptions serve_opts;
    auto* serve_cmd = app.add_subcommand("serve", "Run the session server");
    serve_cmd->add_option("--config", serve_opts.config, "Server config (JSON)");
    serve_cmd->add_option("--world", serve_opts.world, "World file; overrides the config");
    serve_cmd->add_option("--port", serve_opts.port, "TCP port (env COTOUR_PORT)");
    serve_cmd->add_option("--ws-port", serve_opts.ws_port, "WebSocket port (env COTOUR_WS_PORT)");
    serve_cmd->add_flag("--no-ws", serve_opts.no_ws, "Disable the WebSocket listener");
    serve_cmd->add_option("--tick-rate", serve_opts.tick_rate, "Ticks per second (env COTOUR_TICK_RATE)");
    serve_cmd->add_option("--record", serve_opts.record, "Write the session event log here");
    serve_cmd->add_option("--log-level", serve_opts.log_level, "trace, debug, info, warn, error");

    auto* scenario_cmd = app.add_subcommand("scenario", "Scripted scenarios");
    scenario_cmd->require_subcommand(1);
    ScenarioOptions scen_opts;
    auto* run_cmd = scenario_cmd->add_subcommand("run", "Run a scenario and check its expectations");
    run_cmd->add_option("path", scen_opts.path, "Scenario file")->required();
    run_cmd->add_option("--endpoint", scen_opts.endpoint, "host:port of a running server (default: in-process)");
    run_cmd->add_flag("--ws", scen_opts.websocket, "Connect over WebSocket");
    run_cmd->add_option("--out", scen_opts.out, "Write the JSON report here");
    run_cmd->add_option("--messages", scen_opts.messages, "Write the message log (JSONL) here");
    run_cmd->add_option("--record", scen_opts.record, "Write the session event log here (in-process only)");
    run_cmd->add_flag("--json", scen_opts.json, "Print the JSON report");

    std::string replay_path;
    bool replay_json = false;
    auto* replay_sub = app.add_subcommand("replay", "Replay a session event log offline");
    replay_sub->add_option("log", replay_path, "Event log")->required();
    replay_sub->add_flag("--json", replay_json, "Print the final snapshot as JSON");

    std::string endpoint;
    bool snap_ws = false;
    bool snap_canonical = false;
    auto* snapshot_sub = app.add_subcommand("snapshot", "Print the state of a running server");
    snapshot_sub->add_option("endpoint", endpoint, "host:port")->required();
    snapshot_sub->add_flag("--ws", snap_ws, "Connect over WebSocket");
    snapshot_sub->add_flag("--canonical", snap_canonical, "Print the canonical form");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    if (*serve_cmd) {
        return serve(serve_opts);
    }
    if (*run_cmd) {
        return run_scenario_cmd(scen_opts);
    }
    if (*replay_sub) {
        return replay_cmd(replay_path, replay_json);
    }
    if (*snapshot_sub) {
        return snapshot_cmd(endpoint, snap_ws, snap_canonical);
    }
    return kExitConfig;
}
