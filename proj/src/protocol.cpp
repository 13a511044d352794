#include "cotour/protocol.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <initializer_list>

namespace cotour {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::array<std::pair<Role, std::string_view>, 2> kRoleNames{{
    {Role::Primary, "primary"},
    {Role::Secondary, "secondary"},
}};
constexpr std::array<std::pair<CameraMode, std::string_view>, 2> kCameraModeNames{{
    {CameraMode::FollowSecondary, "follow_secondary"},
    {CameraMode::LockedToEnvironment, "locked_to_environment"},
}};
constexpr std::array<std::pair<CommandKind, std::string_view>, 8> kCommandNames{{
    {CommandKind::Text, "text"},
    {CommandKind::Video, "video"},
    {CommandKind::Scale, "scale"},
    {CommandKind::Highlight, "highlight"},
    {CommandKind::Change, "change"},
    {CommandKind::Lock, "lock"},
    {CommandKind::Unlock, "unlock"},
    {CommandKind::Delete, "delete"},
}};

template <class E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value)
{
    for (const auto& [k, n] : table) {
        if (k == value) {
            return n;
        }
    }
    return "unknown";
}

template <class E, std::size_t N>
std::optional<E> value_of(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s)
{
    for (const auto& [k, n] : table) {
        if (n == s) {
            return k;
        }
    }
    return std::nullopt;
}

// --- encoding -------------------------------------------------------------

json ids_to_json(const std::vector<ClientId>& ids)
{
    json out = json::array();
    for (const auto id : ids) {
        out.push_back(id.value);
    }
    return out;
}

json body_to_json(const Body& body)
{
    return std::visit(
        overloaded{
            [](const msg::Join& b) { return json{{"role", to_string(b.role)}}; },
            [](const msg::Welcome& b) {
                return json{{"client", b.client.value}, {"role", to_string(b.role)}, {"snapshot", b.snapshot}};
            },
            [](const msg::MarkerPose& b) { return json{{"marker_id", b.marker_id}, {"pose", to_json(b.pose)}}; },
            [](const msg::EntityLocalPose& b) {
                return json{{"entity", b.entity.value}, {"parent", b.parent.value}, {"local", to_json(b.local)}};
            },
            [](const msg::Pickup& b) {
                json j = json::object();
                if (b.shovel_on_map) {
                    j["shovel_on_map"] = to_json(*b.shovel_on_map);
                }
                return j;
            },
            [](const msg::Release&) { return json::object(); },
            [](const msg::SetScale& b) { return json{{"value", b.value}}; },
            [](const msg::SetCameraMode& b) { return json{{"mode", to_string(b.mode)}}; },
            [](const msg::VoiceToggle& b) { return json{{"on", b.on}}; },
            [](const msg::AudioFrame& b) { return json{{"data", base64_encode(b.data)}}; },
            [](const msg::TeleportShort& b) { return json{{"avatar", b.avatar.value}, {"target", to_json(b.target)}}; },
            [](const msg::TeleportPoi& b) { return json{{"avatar", b.avatar.value}, {"poi", b.poi}}; },
            [](const msg::HandMapToggle& b) { return json{{"secondary", b.secondary.value}, {"visible", b.visible}}; },
            [](const msg::SelectOoi& b) {
                json j{{"ooi", b.ooi.value}};
                if (b.interactions) {
                    json list = json::array();
                    for (const auto k : *b.interactions) {
                        list.push_back(to_string(k));
                    }
                    j["interactions"] = std::move(list);
                }
                return j;
            },
            [](const msg::Interaction& b) {
                json j{{"ooi", b.ooi.value}, {"kind", to_string(b.kind)}};
                if (b.factor) {
                    j["factor"] = *b.factor;
                }
                if (b.on) {
                    j["on"] = *b.on;
                }
                if (b.target) {
                    j["target"] = *b.target;
                }
                if (b.content) {
                    j["content"] = *b.content;
                }
                if (b.panel_pose) {
                    j["panel_pose"] = to_json(*b.panel_pose);
                }
                return j;
            },
            [](const msg::SpawnOoi& b) {
                json j{{"marker_id", b.marker_id}, {"catalog_id", b.catalog_id}};
                if (b.entity) {
                    j["entity"] = b.entity->value;
                }
                return j;
            },
            [](const msg::AttachOoi& b) { return json{{"marker_id", b.marker_id}, {"ooi", b.ooi.value}}; },
            [](const msg::HighlightState& b) {
                return json{{"ooi", b.ooi.value}, {"highlighted", b.highlighted}, {"arrows", ids_to_json(b.arrows)}};
            },
            [](const msg::StateSnapshot& b) {
                return b.state ? json{{"state", *b.state}} : json{{"request", true}};
            },
            [](const msg::Error& b) { return json{{"code", b.code}, {"reason", b.reason}, {"ref_seq", b.ref_seq}}; },
            [](const msg::Leave&) { return json::object(); },
        },
        body);
}

// --- decoding -------------------------------------------------------------

void check_keys(const json& body, std::initializer_list<std::string_view> allowed, const std::string& path)
{
    if (!body.is_object()) {
        throw DecodeError(path, "expected an object");
    }
    for (const auto& [key, value] : body.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw DecodeError(child_path(path, key), "unexpected field");
        }
    }
}

template <class Fn>
auto field(Fn&& fn)
{
    try {
        return fn();
    } catch (const DecodeError&) {
        throw;
    } catch (const DocumentError& e) {
        throw DecodeError(e.where(), std::string(e.what()).substr(e.where().size() + 2));
    }
}

EntityId entity_at(const json& b, std::string_view key, const std::string& path)
{
    return EntityId{field([&] { return require_uint(b, key, path); })};
}

ClientId client_at(const json& b, std::string_view key, const std::string& path)
{
    const std::uint64_t v = field([&] { return require_uint(b, key, path); });
    if (v > UINT32_MAX) {
        throw DecodeError(child_path(path, key), "client id out of range");
    }
    return ClientId{static_cast<std::uint32_t>(v)};
}

std::string string_at(const json& b, std::string_view key, const std::string& path)
{
    return field([&] { return require_string(b, key, path); });
}

std::string nonempty_string_at(const json& b, std::string_view key, const std::string& path)
{
    std::string s = string_at(b, key, path);
    if (s.empty()) {
        throw DecodeError(child_path(path, key), "must not be empty");
    }
    return s;
}

Pose pose_at(const json& b, std::string_view key, const std::string& path)
{
    return field([&] { return pose_from_json(require(b, key, path), child_path(path, key)); });
}

template <class E>
E enum_at(const json& b, std::string_view key, const std::string& path, std::optional<E> (*parse)(std::string_view))
{
    const std::string s = string_at(b, key, path);
    const auto v = parse(s);
    if (!v) {
        throw DecodeError(child_path(path, key), "unknown value \"" + s + "\"");
    }
    return *v;
}

Body body_from_json(std::string_view type, const json& b, const std::string& path)
{
    if (type == "Join") {
        check_keys(b, {"role"}, path);
        return msg::Join{enum_at<Role>(b, "role", path, role_from_string)};
    }
    if (type == "Welcome") {
        check_keys(b, {"client", "role", "snapshot"}, path);
        const json& snap = field([&]() -> const json& { return require(b, "snapshot", path); });
        if (!snap.is_object()) {
            throw DecodeError(child_path(path, "snapshot"), "expected an object");
        }
        return msg::Welcome{client_at(b, "client", path), enum_at<Role>(b, "role", path, role_from_string), snap};
    }
    if (type == "MarkerPose") {
        check_keys(b, {"marker_id", "pose"}, path);
        return msg::MarkerPose{nonempty_string_at(b, "marker_id", path), pose_at(b, "pose", path)};
    }
    if (type == "EntityLocalPose") {
        check_keys(b, {"entity", "parent", "local"}, path);
        return msg::EntityLocalPose{entity_at(b, "entity", path), entity_at(b, "parent", path),
                                    pose_at(b, "local", path)};
    }
    if (type == "Pickup") {
        check_keys(b, {"shovel_on_map"}, path);
        msg::Pickup p;
        if (b.contains("shovel_on_map")) {
            p.shovel_on_map = pose_at(b, "shovel_on_map", path);
        }
        return p;
    }
    if (type == "Release") {
        check_keys(b, {}, path);
        return msg::Release{};
    }
    if (type == "SetScale") {
        check_keys(b, {"value"}, path);
        return msg::SetScale{field([&] { return require_number(b, "value", path); })};
    }
    if (type == "SetCameraMode") {
        check_keys(b, {"mode"}, path);
        return msg::SetCameraMode{enum_at<CameraMode>(b, "mode", path, camera_mode_from_string)};
    }
    if (type == "VoiceToggle") {
        check_keys(b, {"on"}, path);
        return msg::VoiceToggle{field([&] { return require_bool(b, "on", path); })};
    }
    if (type == "AudioFrame") {
        check_keys(b, {"data"}, path);
        const std::string data = string_at(b, "data", path);
        try {
            return msg::AudioFrame{base64_decode(data)};
        } catch (const std::invalid_argument& e) {
            throw DecodeError(child_path(path, "data"), e.what());
        }
    }
    if (type == "TeleportShort") {
        check_keys(b, {"avatar", "target"}, path);
        const Vec3 target =
            field([&] { return vec3_from_json(require(b, "target", path), child_path(path, "target")); });
        return msg::TeleportShort{entity_at(b, "avatar", path), target};
    }
    if (type == "TeleportPoi") {
        check_keys(b, {"avatar", "poi"}, path);
        return msg::TeleportPoi{entity_at(b, "avatar", path), nonempty_string_at(b, "poi", path)};
    }
    if (type == "HandMapToggle") {
        check_keys(b, {"secondary", "visible"}, path);
        return msg::HandMapToggle{client_at(b, "secondary", path),
                                  field([&] { return require_bool(b, "visible", path); })};
    }
    if (type == "SelectOoi") {
        check_keys(b, {"ooi", "interactions"}, path);
        msg::SelectOoi s{entity_at(b, "ooi", path), std::nullopt};
        if (const auto it = b.find("interactions"); it != b.end()) {
            const std::string ipath = child_path(path, "interactions");
            if (!it->is_array()) {
                throw DecodeError(ipath, "expected an array");
            }
            std::vector<InteractionKind> kinds;
            for (std::size_t i = 0; i < it->size(); ++i) {
                const auto& v = (*it)[i];
                const auto k = v.is_string() ? interaction_kind_from_string(v.get<std::string>()) : std::nullopt;
                if (!k) {
                    throw DecodeError(child_path(ipath, i), "unknown interaction");
                }
                kinds.push_back(*k);
            }
            s.interactions = std::move(kinds);
        }
        return s;
    }
    if (type == "Interaction") {
        check_keys(b, {"ooi", "kind", "factor", "on", "target", "content", "panel_pose"}, path);
        msg::Interaction m;
        m.ooi = entity_at(b, "ooi", path);
        m.kind = enum_at<CommandKind>(b, "kind", path, command_kind_from_string);
        if (b.contains("factor")) {
            m.factor = field([&] { return require_number(b, "factor", path); });
        }
        if (b.contains("on")) {
            m.on = field([&] { return require_bool(b, "on", path); });
        }
        if (b.contains("target")) {
            m.target = string_at(b, "target", path);
        }
        if (b.contains("content")) {
            m.content = string_at(b, "content", path);
        }
        if (b.contains("panel_pose")) {
            m.panel_pose = pose_at(b, "panel_pose", path);
        }
        return m;
    }
    if (type == "SpawnOoi") {
        check_keys(b, {"marker_id", "catalog_id", "entity"}, path);
        msg::SpawnOoi s{nonempty_string_at(b, "marker_id", path), nonempty_string_at(b, "catalog_id", path),
                        std::nullopt};
        if (b.contains("entity")) {
            s.entity = entity_at(b, "entity", path);
        }
        return s;
    }
    if (type == "AttachOoi") {
        check_keys(b, {"marker_id", "ooi"}, path);
        return msg::AttachOoi{nonempty_string_at(b, "marker_id", path), entity_at(b, "ooi", path)};
    }
    if (type == "HighlightState") {
        check_keys(b, {"ooi", "highlighted", "arrows"}, path);
        msg::HighlightState h{entity_at(b, "ooi", path), field([&] { return require_bool(b, "highlighted", path); }),
                              {}};
        const json& arrows = field([&]() -> const json& { return require(b, "arrows", path); });
        if (!arrows.is_array()) {
            throw DecodeError(child_path(path, "arrows"), "expected an array");
        }
        for (std::size_t i = 0; i < arrows.size(); ++i) {
            if (!arrows[i].is_number_unsigned() || arrows[i].get<std::uint64_t>() > UINT32_MAX) {
                throw DecodeError(child_path(child_path(path, "arrows"), i), "expected a client id");
            }
            h.arrows.push_back(ClientId{arrows[i].get<std::uint32_t>()});
        }
        return h;
    }
    if (type == "StateSnapshot") {
        check_keys(b, {"request", "state"}, path);
        if (b.contains("state")) {
            if (b.contains("request") || !b["state"].is_object()) {
                throw DecodeError(child_path(path, "state"), "expected a snapshot object without request");
            }
            return msg::StateSnapshot::of(b["state"]);
        }
        if (!field([&] { return require_bool(b, "request", path); })) {
            throw DecodeError(child_path(path, "request"), "must be true");
        }
        return msg::StateSnapshot{};
    }
    if (type == "Error") {
        check_keys(b, {"code", "reason", "ref_seq"}, path);
        return msg::Error{nonempty_string_at(b, "code", path), string_at(b, "reason", path),
                          field([&] { return require_uint(b, "ref_seq", path); })};
    }
    if (type == "Leave") {
        check_keys(b, {}, path);
        return msg::Leave{};
    }
    throw DecodeError("/type", "unknown message type \"" + std::string(type) + "\"");
}

bool is_secondary(const RoleTable& roles, ClientId c)
{
    const auto it = roles.find(c);
    return it != roles.end() && it->second == Role::Secondary;
}

bool is_primary(const RoleTable& roles, ClientId c)
{
    const auto it = roles.find(c);
    return it != roles.end() && it->second == Role::Primary;
}

Authorization owned_by(const OwnershipTable& owners, EntityId e, ClientId sender)
{
    const auto it = owners.find(e);
    if (it == owners.end()) {
        return Authorization::reject("unknown entity " + std::to_string(e.value));
    }
    if (it->second != sender) {
        return Authorization::reject("not owner of entity " + std::to_string(e.value));
    }
    return Authorization::allow();
}

} // namespace

std::string_view to_string(Role role) { return name_of(kRoleNames, role); }
std::string_view to_string(CameraMode mode) { return name_of(kCameraModeNames, mode); }
std::string_view to_string(CommandKind kind) { return name_of(kCommandNames, kind); }
std::optional<Role> role_from_string(std::string_view s) { return value_of(kRoleNames, s); }
std::optional<CameraMode> camera_mode_from_string(std::string_view s) { return value_of(kCameraModeNames, s); }
std::optional<CommandKind> command_kind_from_string(std::string_view s) { return value_of(kCommandNames, s); }

const std::vector<std::string_view>& message_type_names()
{
    static const std::vector<std::string_view> names{
        "Join",      "Welcome",     "MarkerPose",    "EntityLocalPose", "Pickup",         "Release",
        "SetScale",  "SetCameraMode", "VoiceToggle", "AudioFrame",      "TeleportShort",  "TeleportPoi",
        "HandMapToggle", "SelectOoi", "Interaction", "SpawnOoi",        "AttachOoi",      "HighlightState",
        "StateSnapshot", "Error",     "Leave",
    };
    return names;
}

std::string_view type_name(const Body& body) { return message_type_names()[body.index()]; }

json message_to_json(const Message& m)
{
    return json{{"seq", m.seq}, {"sender", m.sender.value}, {"type", type_name(m.body)}, {"body", body_to_json(m.body)}};
}

std::string encode(const Message& m) { return message_to_json(m).dump(); }

Message message_from_json(const json& j)
{
    check_keys(j, {"seq", "sender", "type", "body"}, "");
    Message m;
    m.seq = field([&] { return require_uint(j, "seq", ""); });
    m.sender = client_at(j, "sender", "");
    const std::string type = string_at(j, "type", "");
    const json& body = field([&]() -> const json& { return require(j, "body", ""); });
    m.body = body_from_json(type, body, "/body");
    return m;
}

Message decode(std::string_view bytes)
{
    json j;
    try {
        j = parse_document(bytes);
    } catch (const DocumentError& e) {
        throw DecodeError(e.where(), std::string(e.what()).substr(e.where().size() + 2));
    }
    if (!j.is_object()) {
        throw DecodeError("/", "message must be a JSON object");
    }
    return message_from_json(j);
}

std::string base64_encode(const std::vector<std::uint8_t>& data)
{
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    if (!data.empty()) {
        const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                      static_cast<int>(data.size()));
        out.resize(static_cast<std::size_t>(n));
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    if (text.size() % 4 != 0) {
        throw std::invalid_argument("base64 length must be a multiple of 4");
    }
    if (text.empty()) {
        return {};
    }
    std::vector<std::uint8_t> out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) {
        throw std::invalid_argument("invalid base64");
    }
    std::size_t padding = 0;
    if (text.back() == '=') {
        ++padding;
        if (text[text.size() - 2] == '=') {
            ++padding;
        }
    }
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

Authorization authorize(const OwnershipTable& owners, const RoleTable& roles, ClientId sender, const Body& body)
{
    const bool joined = roles.count(sender) != 0;
    const auto primary_only = [&]() {
        return is_primary(roles, sender) ? Authorization::allow() : Authorization::reject("primary-only");
    };
    return std::visit(
        overloaded{
            [&](const msg::Join&) {
                return joined ? Authorization::reject("already joined") : Authorization::allow();
            },
            [&](const msg::StateSnapshot& b) {
                return b.state ? Authorization::reject("server-only") : Authorization::allow();
            },
            [&](const msg::Welcome&) { return Authorization::reject("server-only"); },
            [&](const msg::HighlightState&) { return Authorization::reject("server-only"); },
            [&](const msg::Error&) { return Authorization::reject("server-only"); },
            [&](const msg::Leave&) { return joined ? Authorization::allow() : Authorization::reject("not joined"); },
            [&](const msg::EntityLocalPose& b) {
                if (!joined) {
                    return Authorization::reject("not joined");
                }
                return owned_by(owners, b.entity, sender);
            },
            [&](const msg::AudioFrame&) {
                return joined ? Authorization::allow() : Authorization::reject("not joined");
            },
            [&](const msg::TeleportShort& b) {
                if (!is_secondary(roles, sender)) {
                    return Authorization::reject("secondary-only");
                }
                return owned_by(owners, b.avatar, sender);
            },
            [&](const msg::TeleportPoi& b) {
                if (!is_secondary(roles, sender)) {
                    return Authorization::reject("secondary-only");
                }
                return owned_by(owners, b.avatar, sender);
            },
            [&](const msg::HandMapToggle& b) {
                if (!is_secondary(roles, sender)) {
                    return Authorization::reject("secondary-only");
                }
                return b.secondary == sender ? Authorization::allow()
                                             : Authorization::reject("hand map belongs to another secondary");
            },
            // Everything else is a primary intent: tracking, pickup, camera,
            // scale, voice, selection, interactions and tangibles.
            [&](const auto&) { return primary_only(); },
        },
        body);
}

msg::EntityLocalPose replicate_tangible_ooi(const FrameTree& tree, EntityId ooi, EntityId env_root)
{
    const Entity& e = tree.at(ooi);
    if (e.kind != EntityKind::Ooi || !e.parent || tree.at(*e.parent).kind != EntityKind::Scaler) {
        throw FrameError("entity " + std::to_string(ooi.value) + " is not attached to a tangible");
    }
    const Pose local = to_local(tree.world_pose(ooi), tree.world_pose(env_root));
    return msg::EntityLocalPose{ooi, env_root, local};
}

} // namespace cotour
