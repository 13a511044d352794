#pragma once

#include "cotour/frame_tree.hpp"
#include "cotour/json_io.hpp"
#include "cotour/world.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cotour {

enum class Role { Primary, Secondary };
enum class CameraMode { FollowSecondary, LockedToEnvironment };
/// Commands the primary can issue on a selected OOI.
enum class CommandKind { Text, Video, Scale, Highlight, Change, Lock, Unlock, Delete };

std::string_view to_string(Role role);
std::string_view to_string(CameraMode mode);
std::string_view to_string(CommandKind kind);
std::optional<Role> role_from_string(std::string_view s);
std::optional<CameraMode> camera_mode_from_string(std::string_view s);
std::optional<CommandKind> command_kind_from_string(std::string_view s);

namespace msg {

struct Join {
    Role role = Role::Secondary;
    friend bool operator==(const Join&, const Join&) = default;
};

struct Welcome {
    ClientId client;
    Role role = Role::Secondary;
    json snapshot;
    friend bool operator==(const Welcome&, const Welcome&) = default;
};

struct MarkerPose {
    std::string marker_id;
    Pose pose;
    friend bool operator==(const MarkerPose&, const MarkerPose&) = default;
};

/// Always a pose relative to `parent`, never a world pose.
struct EntityLocalPose {
    EntityId entity;
    EntityId parent;
    Pose local;
    friend bool operator==(const EntityLocalPose&, const EntityLocalPose&) = default;
};

struct Pickup {
    /// Explicit shovel pose in the Map-Hub frame; when absent the tracked shovel is used.
    std::optional<Pose> shovel_on_map;
    friend bool operator==(const Pickup&, const Pickup&) = default;
};

struct Release {
    friend bool operator==(const Release&, const Release&) = default;
};

struct SetScale {
    double value = 1.0;
    friend bool operator==(const SetScale&, const SetScale&) = default;
};

struct SetCameraMode {
    CameraMode mode = CameraMode::FollowSecondary;
    friend bool operator==(const SetCameraMode&, const SetCameraMode&) = default;
};

struct VoiceToggle {
    bool on = false;
    friend bool operator==(const VoiceToggle&, const VoiceToggle&) = default;
};

/// Opaque audio payload; base64 on the wire.
struct AudioFrame {
    std::vector<std::uint8_t> data;
    friend bool operator==(const AudioFrame&, const AudioFrame&) = default;
};

struct TeleportShort {
    EntityId avatar;
    Vec3 target;
    friend bool operator==(const TeleportShort&, const TeleportShort&) = default;
};

struct TeleportPoi {
    EntityId avatar;
    std::string poi;
    friend bool operator==(const TeleportPoi&, const TeleportPoi&) = default;
};

struct HandMapToggle {
    ClientId secondary;
    bool visible = true;
    friend bool operator==(const HandMapToggle&, const HandMapToggle&) = default;
};

/// Request carries only `ooi`; the reply lists the available interactions.
struct SelectOoi {
    EntityId ooi;
    std::optional<std::vector<InteractionKind>> interactions;
    friend bool operator==(const SelectOoi&, const SelectOoi&) = default;
};

/// Primary command. The server echoes accepted Text/Video commands with
/// `content` and `panel_pose` filled in.
struct Interaction {
    EntityId ooi;
    CommandKind kind = CommandKind::Text;
    std::optional<double> factor;
    std::optional<bool> on;
    std::optional<std::string> target;
    std::optional<std::string> content;
    std::optional<Pose> panel_pose;
    friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct SpawnOoi {
    std::string marker_id;
    std::string catalog_id;
    /// Filled by the server in the acknowledgement.
    std::optional<EntityId> entity;
    friend bool operator==(const SpawnOoi&, const SpawnOoi&) = default;
};

struct AttachOoi {
    std::string marker_id;
    EntityId ooi;
    friend bool operator==(const AttachOoi&, const AttachOoi&) = default;
};

struct HighlightState {
    EntityId ooi;
    bool highlighted = false;
    std::vector<ClientId> arrows;
    friend bool operator==(const HighlightState&, const HighlightState&) = default;
};

/// Without `state` this is a snapshot request.
struct StateSnapshot {
    std::optional<json> state;

    static StateSnapshot of(json s)
    {
        StateSnapshot m;
        m.state.emplace(std::move(s));
        return m;
    }
    friend bool operator==(const StateSnapshot&, const StateSnapshot&) = default;
};

struct Error {
    std::string code;
    std::string reason;
    std::uint64_t ref_seq = 0;
    friend bool operator==(const Error&, const Error&) = default;
};

struct Leave {
    friend bool operator==(const Leave&, const Leave&) = default;
};

} // namespace msg

using Body = std::variant<msg::Join, msg::Welcome, msg::MarkerPose, msg::EntityLocalPose, msg::Pickup, msg::Release,
                          msg::SetScale, msg::SetCameraMode, msg::VoiceToggle, msg::AudioFrame, msg::TeleportShort,
                          msg::TeleportPoi, msg::HandMapToggle, msg::SelectOoi, msg::Interaction, msg::SpawnOoi,
                          msg::AttachOoi, msg::HighlightState, msg::StateSnapshot, msg::Error, msg::Leave>;

struct Message {
    std::uint64_t seq = 0;
    ClientId sender = kServer;
    Body body;

    friend bool operator==(const Message&, const Message&) = default;
};

std::string_view type_name(const Body& body);
/// All wire type names, in variant order.
const std::vector<std::string_view>& message_type_names();

class DecodeError : public DocumentError {
public:
    using DocumentError::DocumentError;
};

/// One JSON object, no trailing newline. Framing is up to the transport.
std::string encode(const Message& m);
Message decode(std::string_view bytes);
json message_to_json(const Message& m);
Message message_from_json(const json& j);

std::string base64_encode(const std::vector<std::uint8_t>& data);
std::vector<std::uint8_t> base64_decode(std::string_view text);

using RoleTable = std::map<ClientId, Role>;

struct Authorization {
    bool allowed = true;
    std::string reason;

    static Authorization allow() { return {}; }
    static Authorization reject(std::string why) { return {false, std::move(why)}; }
};

/// Role and ownership gate applied before any state is touched. `sender` is
/// the transport-authenticated client, not the message's self-declared field.
Authorization authorize(const OwnershipTable& owners, const RoleTable& roles, ClientId sender, const Body& body);

/// Pose of a tangible-attached OOI expressed in the environment root's frame.
msg::EntityLocalPose replicate_tangible_ooi(const FrameTree& tree, EntityId ooi, EntityId env_root);

} // namespace cotour
