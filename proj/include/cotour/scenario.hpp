#pragma once

#include "cotour/replay.hpp"
#include "cotour/session.hpp"
#include "cotour/tracking.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cotour {

// --- selectors ------------------------------------------------------------

class SelectorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Variable lookup for `$name` and `$name.field` references.
using VariableResolver = std::function<std::optional<json>(const std::string& name)>;

/// Resolves `a.b[2].c[key=value]` against `root`. Returns nullptr when the
/// path does not exist; throws SelectorError on bad syntax or an unknown
/// variable.
const json* select(const json& root, const std::string& path, const VariableResolver& vars);

// --- scenario document ----------------------------------------------------

enum class ExpectOp { Eq, Approx, Exists, Absent };

struct Expectation {
    std::string path;
    ExpectOp op = ExpectOp::Eq;
    json value;
    double tol = 1e-6;
    std::vector<std::string> tags;
};

struct ExpectedError {
    std::string code;
    std::string reason_contains;
};

struct ExpectedMessage {
    /// Defaults to the acting client.
    std::string client;
    std::string type;
    /// Every key here must match the received body (numbers within 1e-6).
    json body = json::object();
};

struct ScenarioStep {
    double at = 0.0;
    std::string client;
    std::string action;
    json args = json::object();
    std::vector<Expectation> expect;
    std::optional<ExpectedError> expect_error;
    std::vector<ExpectedMessage> expect_received;
    /// Variable name -> selector evaluated on the snapshot after the step.
    std::map<std::string, std::string> capture;
    std::vector<std::string> tags;
    std::string note;
};

struct ClientDecl {
    std::string name;
    Role role = Role::Secondary;
};

struct Scenario {
    std::string name;
    std::string world_path;
    std::string tracking_path;
    SessionConfig config;
    double dt = 1.0 / 30.0;
    std::optional<double> duration;
    std::vector<ClientDecl> clients;
    std::vector<ScenarioStep> steps;
};

/// Relative paths are resolved against `base_dir`.
Scenario load_scenario(const json& doc, const std::string& base_dir);
Scenario load_scenario_file(const std::string& path);

// --- execution ------------------------------------------------------------

/// Where scenario clients live: in this process or behind a network endpoint.
class ScenarioBackend {
public:
    virtual ~ScenarioBackend() = default;
    /// Throws Rejected when the server refuses the join.
    virtual ClientId join(Role role, std::uint64_t seq) = 0;
    virtual void send(ClientId from, const Message& m) = 0;
    /// Lets dt seconds of session time pass.
    virtual void tick(double dt) = 0;
    /// Messages delivered to clients since the last call, in delivery order.
    virtual std::vector<std::pair<ClientId, Message>> drain() = 0;
    virtual json snapshot() = 0;
    virtual double time() const = 0;
    virtual std::vector<std::string> invariant_violations() { return {}; }
};

/// Runs clients against an in-process SessionHost. Every message still goes
/// through encode/decode.
class InProcessBackend : public ScenarioBackend {
public:
    InProcessBackend(World world, SessionConfig config, std::ostream* event_log = nullptr);

    ClientId join(Role role, std::uint64_t seq) override;
    void send(ClientId from, const Message& m) override;
    void tick(double dt) override;
    std::vector<std::pair<ClientId, Message>> drain() override;
    json snapshot() override;
    double time() const override;
    std::vector<std::string> invariant_violations() override;

    SessionHost& host() { return host_; }

private:
    SessionHost host_;
};

struct StepReport {
    std::size_t index = 0;
    double at = 0.0;
    std::string client;
    std::string action;
    std::string note;
    bool passed = true;
    std::vector<std::string> failures;
    std::vector<std::string> tags;
};

struct ScenarioReport {
    std::string scenario;
    bool passed = true;
    std::vector<StepReport> steps;
    std::vector<std::string> failures;
    std::string final_hash;
    json final_snapshot;
    double simulated_seconds = 0.0;
    double wall_seconds = 0.0;
    std::size_t messages = 0;
    /// tag -> {assertions, passed}
    std::map<std::string, std::pair<std::size_t, bool>> tags;

    int exit_code() const { return passed ? 0 : 1; }
    json to_json() const;
};

struct RunOptions {
    /// JSONL of every message sent or delivered.
    std::ostream* message_log = nullptr;
};

ScenarioReport run_scenario(const Scenario& scenario, const TrackingScript& tracking, ScenarioBackend& backend,
                            const RunOptions& options = {});

/// Loads the world and tracking script, runs in-process and records the
/// event log for replay when `event_log` is set.
ScenarioReport run_scenario_in_process(const Scenario& scenario, const RunOptions& options = {},
                                       std::ostream* event_log = nullptr);

} // namespace cotour
