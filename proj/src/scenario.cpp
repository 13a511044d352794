#include "cotour/scenario.hpp"

#include "cotour/canonical.hpp"
#include "cotour/mirror.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <ostream>

namespace cotour {

// --- selectors ------------------------------------------------------------

namespace {

struct Segment {
    std::string key;
    std::vector<std::string> brackets;
};

std::vector<Segment> parse_path(const std::string& path)
{
    std::vector<Segment> out;
    Segment cur;
    std::size_t i = 0;
    bool segment_started = false;
    while (i < path.size()) {
        const char c = path[i];
        if (c == '.') {
            if (!segment_started) {
                throw SelectorError("empty segment in \"" + path + "\"");
            }
            out.push_back(std::move(cur));
            cur = {};
            segment_started = false;
            ++i;
        } else if (c == '[') {
            const auto close = path.find(']', i);
            if (close == std::string::npos) {
                throw SelectorError("unclosed '[' in \"" + path + "\"");
            }
            cur.brackets.push_back(path.substr(i + 1, close - i - 1));
            segment_started = true;
            i = close + 1;
        } else if (c == ']') {
            throw SelectorError("unexpected ']' in \"" + path + "\"");
        } else {
            if (!cur.brackets.empty()) {
                throw SelectorError("expected '.' after ']' in \"" + path + "\"");
            }
            cur.key += c;
            segment_started = true;
            ++i;
        }
    }
    if (!segment_started) {
        throw SelectorError("empty selector");
    }
    out.push_back(std::move(cur));
    return out;
}

std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

json literal(const std::string& text, const VariableResolver& vars)
{
    const std::string t = trim(text);
    if (!t.empty() && t[0] == '$') {
        auto v = vars ? vars(t.substr(1)) : std::nullopt;
        if (!v) {
            throw SelectorError("unknown variable " + t);
        }
        return *v;
    }
    if (t == "true") {
        return true;
    }
    if (t == "false") {
        return false;
    }
    if (t == "null") {
        return nullptr;
    }
    if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) {
        return t.substr(1, t.size() - 2);
    }
    if (!t.empty()) {
        try {
            return parse_document(t).is_number() ? parse_document(t) : json(t);
        } catch (const DocumentError&) {
        }
    }
    return t;
}

} // namespace

const json* select(const json& root, const std::string& path, const VariableResolver& vars)
{
    const json* cur = &root;
    for (const auto& seg : parse_path(path)) {
        if (!seg.key.empty()) {
            if (!cur->is_object()) {
                return nullptr;
            }
            const auto it = cur->find(seg.key);
            if (it == cur->end()) {
                return nullptr;
            }
            cur = &*it;
        }
        for (const auto& b : seg.brackets) {
            if (!cur->is_array()) {
                return nullptr;
            }
            const auto eq = b.find('=');
            if (eq == std::string::npos) {
                const std::string t = trim(b);
                if (t.empty() || !std::all_of(t.begin(), t.end(), ::isdigit)) {
                    throw SelectorError("bad index [" + b + "]");
                }
                const std::size_t index = std::stoul(t);
                if (index >= cur->size()) {
                    return nullptr;
                }
                cur = &(*cur)[index];
                continue;
            }
            const std::string key = trim(b.substr(0, eq));
            const json value = literal(b.substr(eq + 1), vars);
            const json* found = nullptr;
            for (const auto& element : *cur) {
                const json* field = select(element, key, vars);
                if (field && *field == value) {
                    found = &element;
                    break;
                }
            }
            if (!found) {
                return nullptr;
            }
            cur = found;
        }
    }
    return cur;
}

// --- loading --------------------------------------------------------------

namespace {

std::vector<std::string> string_list(const json& obj, std::string_view key, const std::string& path)
{
    std::vector<std::string> out;
    if (!obj.contains(key)) {
        return out;
    }
    const json& list = obj[std::string(key)];
    if (!list.is_array()) {
        throw DocumentError(child_path(path, key), "expected an array of strings");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (!list[i].is_string()) {
            throw DocumentError(child_path(child_path(path, key), i), "expected a string");
        }
        out.push_back(list[i].get<std::string>());
    }
    return out;
}

std::string resolve_path(const std::string& base_dir, const std::string& p)
{
    if (p.empty()) {
        return p;
    }
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

Expectation load_expectation(const json& j, const std::string& path)
{
    Expectation e;
    e.path = require_string(j, "path", path);
    const std::string op = j.contains("op") ? require_string(j, "op", path) : "eq";
    if (op == "eq") {
        e.op = ExpectOp::Eq;
    } else if (op == "approx") {
        e.op = ExpectOp::Approx;
    } else if (op == "exists") {
        e.op = ExpectOp::Exists;
    } else if (op == "absent") {
        e.op = ExpectOp::Absent;
    } else {
        throw DocumentError(child_path(path, "op"), "unknown comparator \"" + op + "\"");
    }
    if (e.op == ExpectOp::Eq || e.op == ExpectOp::Approx) {
        e.value = require(j, "value", path);
    }
    if (j.contains("tol")) {
        e.tol = require_number(j, "tol", path);
    }
    e.tags = string_list(j, "tags", path);
    try {
        parse_path(e.path);
    } catch (const SelectorError& err) {
        throw DocumentError(child_path(path, "path"), err.what());
    }
    return e;
}

} // namespace

Scenario load_scenario(const json& doc, const std::string& base_dir)
{
    if (!doc.is_object()) {
        throw DocumentError("/", "scenario must be an object");
    }
    Scenario s;
    s.name = require_string(doc, "name", "");
    s.world_path = resolve_path(base_dir, require_string(doc, "world", ""));
    if (doc.contains("tracking_script")) {
        s.tracking_path = resolve_path(base_dir, require_string(doc, "tracking_script", ""));
    }
    if (doc.contains("config")) {
        s.config = session_config_from_json(doc["config"], "/config");
    }
    if (doc.contains("dt")) {
        s.dt = require_number(doc, "dt", "");
        if (!(s.dt > 0.0)) {
            throw DocumentError("/dt", "must be > 0");
        }
    }
    if (doc.contains("duration")) {
        s.duration = require_number(doc, "duration", "");
    }

    const json& clients = require(doc, "clients", "");
    if (!clients.is_array()) {
        throw DocumentError("/clients", "expected an array");
    }
    for (std::size_t i = 0; i < clients.size(); ++i) {
        const std::string path = child_path("/clients", i);
        ClientDecl c;
        c.name = require_string(clients[i], "name", path);
        const auto role = role_from_string(require_string(clients[i], "role", path));
        if (!role) {
            throw DocumentError(child_path(path, "role"), "unknown role");
        }
        c.role = *role;
        for (const auto& other : s.clients) {
            if (other.name == c.name) {
                throw DocumentError(child_path(path, "name"), "duplicate client name");
            }
        }
        if (c.name == "primary" || c.name.rfind("secondary/", 0) == 0) {
            throw DocumentError(child_path(path, "name"), "reserved client name");
        }
        s.clients.push_back(c);
    }

    const auto client_name = [&](const std::string& ref, const std::string& path) {
        if (ref == "primary") {
            for (const auto& c : s.clients) {
                if (c.role == Role::Primary) {
                    return c.name;
                }
            }
        } else if (ref.rfind("secondary/", 0) == 0) {
            const std::string n = ref.substr(10);
            if (!n.empty() && std::all_of(n.begin(), n.end(), ::isdigit)) {
                std::size_t want = std::stoul(n);
                for (const auto& c : s.clients) {
                    if (c.role == Role::Secondary && --want == 0) {
                        return c.name;
                    }
                }
            }
        } else {
            for (const auto& c : s.clients) {
                if (c.name == ref) {
                    return c.name;
                }
            }
        }
        throw DocumentError(path, "client \"" + ref + "\" is not declared");
    };

    const json& steps = require(doc, "steps", "");
    if (!steps.is_array()) {
        throw DocumentError("/steps", "expected an array");
    }
    const auto& types = message_type_names();
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const std::string path = child_path("/steps", i);
        const json& j = steps[i];
        ScenarioStep st;
        st.at = require_number(j, "at", path);
        if (st.at < 0.0 || (!s.steps.empty() && st.at < s.steps.back().at)) {
            throw DocumentError(child_path(path, "at"), "step times must be non-negative and non-decreasing");
        }
        st.client = client_name(require_string(j, "client", path), child_path(path, "client"));
        st.action = require_string(j, "action", path);
        if (st.action != "join" && st.action != "wait" &&
            std::find(types.begin(), types.end(), st.action) == types.end()) {
            throw DocumentError(child_path(path, "action"), "unknown action \"" + st.action + "\"");
        }
        if (j.contains("args")) {
            st.args = j["args"];
            if (!st.args.is_object()) {
                throw DocumentError(child_path(path, "args"), "expected an object");
            }
        }
        if (const auto it = j.find("expect"); it != j.end()) {
            if (!it->is_array()) {
                throw DocumentError(child_path(path, "expect"), "expected an array");
            }
            for (std::size_t k = 0; k < it->size(); ++k) {
                st.expect.push_back(load_expectation((*it)[k], child_path(child_path(path, "expect"), k)));
            }
        }
        if (const auto it = j.find("expect_error"); it != j.end()) {
            ExpectedError e;
            if (it->is_string()) {
                e.code = it->get<std::string>();
            } else {
                const std::string epath = child_path(path, "expect_error");
                e.code = require_string(*it, "code", epath);
                if (it->contains("reason")) {
                    e.reason_contains = require_string(*it, "reason", epath);
                }
            }
            st.expect_error = e;
        }
        if (const auto it = j.find("expect_received"); it != j.end()) {
            if (!it->is_array()) {
                throw DocumentError(child_path(path, "expect_received"), "expected an array");
            }
            for (std::size_t k = 0; k < it->size(); ++k) {
                const std::string rpath = child_path(child_path(path, "expect_received"), k);
                ExpectedMessage m;
                m.client = (*it)[k].contains("client")
                               ? client_name(require_string((*it)[k], "client", rpath), child_path(rpath, "client"))
                               : st.client;
                m.type = require_string((*it)[k], "type", rpath);
                if (std::find(types.begin(), types.end(), m.type) == types.end()) {
                    throw DocumentError(child_path(rpath, "type"), "unknown message type");
                }
                if ((*it)[k].contains("body")) {
                    m.body = (*it)[k]["body"];
                }
                st.expect_received.push_back(std::move(m));
            }
        }
        if (const auto it = j.find("capture"); it != j.end()) {
            if (!it->is_object()) {
                throw DocumentError(child_path(path, "capture"), "expected an object");
            }
            for (const auto& [name, sel] : it->items()) {
                if (!sel.is_string()) {
                    throw DocumentError(child_path(child_path(path, "capture"), name), "expected a selector");
                }
                st.capture[name] = sel.get<std::string>();
            }
        }
        st.tags = string_list(j, "tags", path);
        if (j.contains("note")) {
            st.note = require_string(j, "note", path);
        }
        s.steps.push_back(std::move(st));
    }
    return s;
}

Scenario load_scenario_file(const std::string& path)
{
    const json doc = read_document_file(path);
    try {
        return load_scenario(doc, std::filesystem::path(path).parent_path().string());
    } catch (const DocumentError& e) {
        throw DocumentError(path + ": " + e.where(), std::string(e.what()).substr(e.where().size() + 2));
    }
}

// --- in-process backend ---------------------------------------------------

InProcessBackend::InProcessBackend(World world, SessionConfig config, std::ostream* event_log)
    : host_(std::move(world), std::move(config), event_log)
{
}

ClientId InProcessBackend::join(Role role, std::uint64_t seq) { return host_.join(role, seq); }

void InProcessBackend::send(ClientId from, const Message& m) { host_.handle(from, decode(encode(m))); }

void InProcessBackend::tick(double dt) { host_.tick(dt); }

std::vector<std::pair<ClientId, Message>> InProcessBackend::drain()
{
    std::vector<std::pair<ClientId, Message>> out;
    for (auto& o : host_.session().take_outbox()) {
        out.emplace_back(o.to, decode(encode(o.message)));
    }
    return out;
}

json InProcessBackend::snapshot() { return host_.session().snapshot(); }

double InProcessBackend::time() const { return host_.session().time(); }

std::vector<std::string> InProcessBackend::invariant_violations() { return host_.session().check_invariants(); }

// --- runner ---------------------------------------------------------------

namespace {

bool approx_equal(const json& a, const json& b, double tol)
{
    if (a.is_number() && b.is_number()) {
        return std::abs(a.get<double>() - b.get<double>()) <= tol;
    }
    if (a.is_array() && b.is_array()) {
        if (a.size() != b.size()) {
            return false;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!approx_equal(a[i], b[i], tol)) {
                return false;
            }
        }
        return true;
    }
    if (a.is_object() && b.is_object()) {
        if (a.size() != b.size()) {
            return false;
        }
        for (const auto& [k, v] : b.items()) {
            if (!a.contains(k) || !approx_equal(a[k], v, tol)) {
                return false;
            }
        }
        return true;
    }
    return a == b;
}

/// Every key of `want` must be present in `got` with an approximately equal value.
bool subset_match(const json& got, const json& want)
{
    if (want.is_object()) {
        if (!got.is_object()) {
            return false;
        }
        for (const auto& [k, v] : want.items()) {
            if (!got.contains(k) || !subset_match(got[k], v)) {
                return false;
            }
        }
        return true;
    }
    return approx_equal(got, want, 1e-6);
}

std::string short_dump(const json* v)
{
    if (!v) {
        return "<absent>";
    }
    std::string s = v->dump();
    if (s.size() > 200) {
        s = s.substr(0, 197) + "...";
    }
    return s;
}

class Runner {
public:
    Runner(const Scenario& scenario, const TrackingScript& tracking, ScenarioBackend& backend,
           const RunOptions& options)
        : scenario_(scenario), backend_(backend), options_(options), sim_(tracking)
    {
        for (const auto& decl : scenario.clients) {
            clients_.push_back(Client{decl, std::nullopt, 0, {}, {}});
        }
    }

    ScenarioReport run()
    {
        const auto wall_start = std::chrono::steady_clock::now();
        report_.scenario = scenario_.name;
        double end = scenario_.duration.value_or(sim_.script().duration());
        if (!scenario_.steps.empty()) {
            end = std::max(end, scenario_.steps.back().at);
        }

        run_due_steps();
        while (backend_.time() < end - 1e-9) {
            const auto poses = sim_.step(scenario_.dt);
            if (Client* p = primary(); p && p->id) {
                for (const auto& pose : poses) {
                    send(*p, Message{++p->seq, *p->id, pose});
                }
            }
            backend_.tick(scenario_.dt);
            deliver();
            check_invariants("tick at t=" + std::to_string(backend_.time()));
            run_due_steps();
        }

        report_.final_snapshot = backend_.snapshot();
        report_.final_hash = canonical_hash(report_.final_snapshot);
        report_.simulated_seconds = backend_.time();
        report_.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
        for (const auto& s : report_.steps) {
            report_.passed = report_.passed && s.passed;
        }
        report_.passed = report_.passed && report_.failures.empty();
        return report_;
    }

private:
    struct Client {
        ClientDecl decl;
        std::optional<ClientId> id;
        std::uint64_t seq = 0;
        ClientMirror mirror;
        std::vector<Message> inbox;
    };

    Client* primary()
    {
        for (auto& c : clients_) {
            if (c.decl.role == Role::Primary) {
                return &c;
            }
        }
        return nullptr;
    }

    Client& client(const std::string& name)
    {
        for (auto& c : clients_) {
            if (c.decl.name == name) {
                return c;
            }
        }
        throw SelectorError("unknown client " + name);
    }

    Client* client_by_id(ClientId id)
    {
        for (auto& c : clients_) {
            if (c.id && *c.id == id) {
                return &c;
            }
        }
        return nullptr;
    }

    void log(const char* dir, const Client& c, const Message& m)
    {
        ++report_.messages;
        if (options_.message_log) {
            *options_.message_log << json{{"t", backend_.time()},
                                          {"dir", dir},
                                          {"client", c.decl.name},
                                          {"msg", message_to_json(m)}}
                                         .dump()
                                  << '\n';
        }
    }

    void send(Client& c, const Message& m)
    {
        log("send", c, m);
        backend_.send(*c.id, m);
    }

    void deliver()
    {
        for (auto& [to, m] : backend_.drain()) {
            Client* c = client_by_id(to);
            if (!c) {
                continue;
            }
            log("recv", *c, m);
            c->mirror.apply(m);
            c->inbox.push_back(std::move(m));
        }
    }

    void check_invariants(const std::string& where)
    {
        for (const auto& v : backend_.invariant_violations()) {
            report_.failures.push_back(where + ": invariant violated: " + v);
        }
    }

    std::optional<json> variable(const std::string& name)
    {
        if (const auto it = captures_.find(name); it != captures_.end()) {
            return it->second;
        }
        const auto dot = name.find('.');
        const std::string head = name.substr(0, dot);
        for (auto& c : clients_) {
            if (c.decl.name != head || !c.id) {
                continue;
            }
            if (dot == std::string::npos) {
                return json(c.id->value);
            }
            if (name.substr(dot + 1) == "avatar") {
                const json snap = backend_.snapshot();
                for (const auto& s : snap["secondaries"]) {
                    if (s["client"] == c.id->value) {
                        return std::optional<json>(std::in_place, s["avatar"]);
                    }
                }
            }
        }
        return std::nullopt;
    }

    json substitute(const json& j)
    {
        if (j.is_string()) {
            const std::string& s = j.get_ref<const std::string&>();
            if (s.size() > 1 && s[0] == '$') {
                auto v = variable(s.substr(1));
                if (!v) {
                    throw SelectorError("unknown variable " + s);
                }
                return *v;
            }
            return j;
        }
        if (j.is_array() || j.is_object()) {
            json out = j;
            for (auto it = out.begin(); it != out.end(); ++it) {
                *it = substitute(*it);
            }
            return out;
        }
        return j;
    }

    void account(const std::vector<std::string>& tags, bool ok)
    {
        for (const auto& t : tags) {
            auto& entry = report_.tags.try_emplace(t, 0, true).first->second;
            ++entry.first;
            entry.second = entry.second && ok;
        }
    }

    void run_due_steps()
    {
        while (next_step_ < scenario_.steps.size() && scenario_.steps[next_step_].at <= backend_.time() + 1e-9) {
            run_step(next_step_, scenario_.steps[next_step_]);
            ++next_step_;
        }
    }

    void run_step(std::size_t index, const ScenarioStep& step)
    {
        StepReport r{index, step.at, step.client, step.action, step.note, true, {}, step.tags};
        const auto fail = [&](std::string what) {
            r.passed = false;
            r.failures.push_back(std::move(what));
        };
        for (auto& c : clients_) {
            c.inbox.clear();
        }
        Client& c = client(step.client);
        std::optional<std::uint64_t> sent_seq;
        VariableResolver vars = [this](const std::string& name) { return variable(name); };

        try {
            if (step.action == "join") {
                if (c.id) {
                    fail("client already joined");
                } else {
                    const std::uint64_t seq = ++c.seq;
                    sent_seq = seq;
                    try {
                        c.id = backend_.join(c.decl.role, seq);
                    } catch (const Rejected& e) {
                        c.inbox.push_back(Message{0, kServer, msg::Error{e.code(), e.what(), seq}});
                    }
                }
            } else if (step.action != "wait") {
                if (!c.id) {
                    fail("client has not joined");
                } else {
                    json body = substitute(step.args);
                    if ((step.action == "TeleportShort" || step.action == "TeleportPoi") && !body.contains("avatar")) {
                        body["avatar"] = variable(c.decl.name + ".avatar").value_or(json(0));
                    }
                    if (step.action == "HandMapToggle" && !body.contains("secondary")) {
                        body["secondary"] = c.id->value;
                    }
                    const Message m = message_from_json(
                        json{{"seq", ++c.seq}, {"sender", c.id->value}, {"type", step.action}, {"body", body}});
                    sent_seq = m.seq;
                    send(c, m);
                }
            }
        } catch (const std::exception& e) {
            fail(std::string("cannot perform step: ") + e.what());
        }
        deliver();
        if (step.action == "Leave" && r.passed) {
            c.id.reset();
        }

        std::vector<msg::Error> errors;
        for (const auto& m : c.inbox) {
            if (const auto* e = std::get_if<msg::Error>(&m.body); e && sent_seq && e->ref_seq == *sent_seq) {
                errors.push_back(*e);
            }
        }
        if (step.expect_error) {
            const auto& want = *step.expect_error;
            const bool ok = std::any_of(errors.begin(), errors.end(), [&](const msg::Error& e) {
                return e.code == want.code && e.reason.find(want.reason_contains) != std::string::npos;
            });
            if (!ok) {
                std::string got;
                for (const auto& e : errors) {
                    got += " " + e.code + " (" + e.reason + ")";
                }
                fail("expected error " + want.code + (want.reason_contains.empty() ? "" : " \"" + want.reason_contains + "\"") +
                     ", got" + (got.empty() ? " none" : got));
            }
            account(step.tags, ok);
        } else {
            for (const auto& e : errors) {
                if (e.code != "clamped") {
                    fail("unexpected error " + e.code + ": " + e.reason);
                }
            }
        }

        for (const auto& want : step.expect_received) {
            bool ok = false;
            try {
                const json want_body = substitute(want.body);
                for (const auto& m : client(want.client).inbox) {
                    if (type_name(m.body) == want.type && subset_match(message_to_json(m)["body"], want_body)) {
                        ok = true;
                        break;
                    }
                }
            } catch (const std::exception& e) {
                fail(std::string("expect_received: ") + e.what());
            }
            if (!ok) {
                fail(want.client + " did not receive " + want.type + " matching " + want.body.dump());
            }
            account(step.tags, ok);
        }

        const json snap = backend_.snapshot();
        for (const auto& e : step.expect) {
            bool ok = false;
            std::string detail;
            try {
                const json* v = select(snap, e.path, vars);
                const json want = substitute(e.value);
                switch (e.op) {
                case ExpectOp::Eq:
                    ok = v && *v == want;
                    break;
                case ExpectOp::Approx:
                    ok = v && approx_equal(*v, want, e.tol);
                    break;
                case ExpectOp::Exists:
                    ok = v && !v->is_null();
                    break;
                case ExpectOp::Absent:
                    ok = !v || v->is_null();
                    break;
                }
                if (!ok) {
                    static constexpr const char* kOps[] = {"eq", "approx", "exists", "absent"};
                    detail = e.path + " " + kOps[static_cast<int>(e.op)] +
                             (e.op == ExpectOp::Eq || e.op == ExpectOp::Approx ? " " + want.dump() : "") +
                             ": got " + short_dump(v);
                }
            } catch (const std::exception& ex) {
                detail = e.path + ": " + ex.what();
            }
            if (!ok) {
                fail("expect " + detail);
            }
            std::vector<std::string> tags = e.tags;
            tags.insert(tags.end(), step.tags.begin(), step.tags.end());
            account(tags, ok);
        }
        if (step.expect.empty() && !step.expect_error && step.expect_received.empty()) {
            account(step.tags, r.passed);
        }

        for (const auto& [name, sel] : step.capture) {
            try {
                const json* v = select(snap, sel, vars);
                if (!v) {
                    fail("capture " + name + ": " + sel + " did not resolve");
                } else {
                    captures_[name] = *v;
                }
            } catch (const std::exception& e) {
                fail("capture " + name + ": " + e.what());
            }
        }
        for (const auto& v : backend_.invariant_violations()) {
            fail("invariant violated: " + v);
        }
        report_.steps.push_back(std::move(r));
    }

    const Scenario& scenario_;
    ScenarioBackend& backend_;
    RunOptions options_;
    TrackingSim sim_;
    std::vector<Client> clients_;
    std::map<std::string, json> captures_;
    std::size_t next_step_ = 0;
    ScenarioReport report_;
};

} // namespace

json ScenarioReport::to_json() const
{
    json steps_json = json::array();
    for (const auto& s : steps) {
        json j{{"index", s.index}, {"at", s.at},         {"client", s.client}, {"action", s.action},
               {"passed", s.passed}, {"failures", s.failures}, {"tags", s.tags}};
        if (!s.note.empty()) {
            j["note"] = s.note;
        }
        steps_json.push_back(std::move(j));
    }
    json tags_json = json::object();
    for (const auto& [tag, v] : tags) {
        tags_json[tag] = {{"assertions", v.first}, {"passed", v.second}};
    }
    return json{{"scenario", scenario},
                {"passed", passed},
                {"exit_code", exit_code()},
                {"steps", std::move(steps_json)},
                {"failures", failures},
                {"final_snapshot_hash", final_hash},
                {"simulated_seconds", simulated_seconds},
                {"wall_seconds", wall_seconds},
                {"messages", messages},
                {"tags", std::move(tags_json)}};
}

ScenarioReport run_scenario(const Scenario& scenario, const TrackingScript& tracking, ScenarioBackend& backend,
                            const RunOptions& options)
{
    return Runner(scenario, tracking, backend, options).run();
}

ScenarioReport run_scenario_in_process(const Scenario& scenario, const RunOptions& options, std::ostream* event_log)
{
    World world = load_world_file(scenario.world_path);
    TrackingScript tracking;
    if (!scenario.tracking_path.empty()) {
        tracking = load_tracking_script_file(scenario.tracking_path);
    }
    InProcessBackend backend(std::move(world), scenario.config, event_log);
    return run_scenario(scenario, tracking, backend, options);
}

} // namespace cotour
