#pragma once

#include "cotour/frame_tree.hpp"
#include "cotour/protocol.hpp"
#include "cotour/world.hpp"

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cotour {

struct ArrowConfig {
    double near_distance = 5.0;
    double facing_half_angle_deg = 30.0;

    friend bool operator==(const ArrowConfig&, const ArrowConfig&) = default;
};

struct SessionConfig {
    /// Map-Hub frame, physical meters.
    double pickup_threshold = 0.03;
    /// City meters, inclusive.
    double short_teleport_limit = 10.0;
    double env_scale_min = 0.0005;
    double env_scale_max = 0.01;
    double env_scale_default = 0.001;
    double ooi_scale_min = 0.1;
    double ooi_scale_max = 10.0;
    ArrowConfig arrow;
    /// Physical meters between an empty tangible and a locked OOI.
    double reattach_threshold = 0.05;
    /// Seconds a marker may go unseen before dependent actions are rejected.
    double tracking_timeout = 2.0;
    double panel_distance = 1.5;
    double panel_height = 1.6;
    /// Tell the secondary when it is picked up or released.
    bool notify_pickup = false;
    /// City pose of newly joined avatars.
    Pose spawn;

    friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

json to_json(const SessionConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
SessionConfig session_config_from_json(const json& j, const std::string& path = "");
/// Throws DocumentError when a value is out of its domain.
void validate(const SessionConfig& c);

/// An operation's precondition failed. Nothing was mutated.
class Rejected : public std::runtime_error {
public:
    Rejected(std::string code, const std::string& reason) : std::runtime_error(reason), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

enum class PropKind { MapHub, PickupShovel, Tangible };
std::string_view to_string(PropKind kind);

struct AugmentationEntity {
    std::string marker_id;
    PropKind prop = PropKind::Tangible;
    EntityId anchor;
    EntityId scaler;
    std::optional<double> last_seen;
};

enum class AttachmentKind { Tangible, LockedInEnvironment, StaticScene };
std::string_view to_string(AttachmentKind kind);

struct OoiInstance {
    EntityId entity;
    std::string catalog_id;
    AttachmentKind attachment = AttachmentKind::StaticScene;
    /// Set when attached to a tangible.
    std::string marker_id;
    bool highlighted = false;
};

struct SecondaryInfo {
    ClientId client;
    EntityId avatar;
    Pose city_pose;
    bool hand_map_visible = true;
};

struct Outgoing {
    ClientId to;
    Message message;
};

/// True when the avatar stands within `near_distance` of the OOI and faces it.
bool arrow_dismissed(const Pose& avatar, const Vec3& ooi_position, const ArrowConfig& cfg);

/// Panel placement `distance` in front of the avatar (horizontal forward is
/// +Z), raised by `height`, turned to face the avatar.
Pose panel_pose(const Pose& avatar, double distance, double height);

/// Authoritative session state machine. Single-threaded; every state change
/// happens through join/leave/handle/tick and is answered through the outbox.
class Session {
public:
    static constexpr int kSnapshotSchema = 1;

    explicit Session(World world, SessionConfig config = {});

    /// Throws Rejected ("role occupied"). Queues the Welcome.
    ClientId join(Role role, std::uint64_t seq = 0);
    /// No-op for unknown clients.
    void leave(ClientId client);
    /// Processes one message from a joined client. Rejections become Error
    /// replies; stale seqs are dropped.
    void handle(ClientId sender, const Message& message);
    /// Advances the clock, refreshes arrows and queues pose deltas.
    void tick(double dt);

    json snapshot() const;
    std::vector<Outgoing> take_outbox();
    /// Empty when every session invariant holds.
    std::vector<std::string> check_invariants() const;

    const World& world() const { return world_; }
    const SessionConfig& config() const { return config_; }
    const FrameTree& tree() const { return tree_; }
    double time() const { return time_; }
    std::optional<ClientId> primary() const { return primary_; }
    const std::map<ClientId, SecondaryInfo>& secondaries() const { return secondaries_; }
    std::optional<ClientId> pickup() const { return pickup_; }
    CameraMode camera_mode() const { return camera_mode_; }
    double env_scale() const { return env_scale_; }
    bool voice_on() const { return voice_on_; }
    std::optional<EntityId> environment_root() const { return env_root_; }
    const std::vector<AugmentationEntity>& augmentation() const { return augmentation_; }
    const std::map<EntityId, OoiInstance>& oois() const { return oois_; }
    const std::map<EntityId, std::set<ClientId>>& arrows() const { return arrows_; }
    RoleTable roles() const;

    const AugmentationEntity* find_marker(std::string_view marker_id) const;
    bool tracked(const AugmentationEntity& a) const;
    /// Pose in the secondaries' city frame (avatars and OOIs).
    Pose city_pose(EntityId id) const;

private:
    // session.cpp
    void spawn_environment();
    void despawn_secondary(ClientId client);
    void dispatch(ClientId sender, const Message& m);
    void on_marker_pose(const msg::MarkerPose& b);
    void on_entity_local_pose(ClientId sender, const msg::EntityLocalPose& b);
    void on_pickup(const msg::Pickup& b);
    void release();
    void on_set_scale(ClientId sender, std::uint64_t seq, const msg::SetScale& b);
    void on_camera_mode(const msg::SetCameraMode& b);
    void on_voice(const msg::VoiceToggle& b);
    void on_audio(ClientId sender, const Message& m);
    void on_teleport_short(ClientId sender, const msg::TeleportShort& b);
    void on_teleport_poi(ClientId sender, const msg::TeleportPoi& b);
    void on_hand_map(const msg::HandMapToggle& b);
    void set_city_pose(SecondaryInfo& s, const Pose& city);
    void place_held_avatar(const SecondaryInfo& s);
    const AugmentationEntity& marker(std::string_view marker_id) const;
    const AugmentationEntity& prop(PropKind kind) const;
    void require_tracked(const AugmentationEntity& a) const;
    SecondaryInfo& secondary_by_avatar(EntityId avatar);
    EntityId new_entity_id();

    // interactions.cpp
    void on_select(ClientId sender, const msg::SelectOoi& b);
    void on_interaction(ClientId sender, std::uint64_t seq, const msg::Interaction& b);
    void on_spawn(ClientId sender, const msg::SpawnOoi& b);
    void on_attach(const msg::AttachOoi& b);
    void set_highlight(OoiInstance& o, bool on);
    void lock(OoiInstance& o);
    void attach_to_tangible(OoiInstance& o, const AugmentationEntity& tangible);
    void delete_ooi(OoiInstance& o);
    void update_arrows();
    void broadcast_highlight(const OoiInstance& o);
    OoiInstance& ooi(EntityId id);
    const CatalogEntry& entry_of(const OoiInstance& o) const;
    const OoiInstance* ooi_on(std::string_view marker_id) const;

    // replication
    void send(ClientId to, Body body);
    void send_as(ClientId to, const Message& m);
    void broadcast(const Body& body);
    void broadcast_snapshot();
    void reset_pose_caches();
    void emit_pose_deltas();
    std::map<EntityId, Pose> city_frame_poses() const;

    World world_;
    SessionConfig config_;
    FrameTree tree_;
    double time_ = 0.0;
    std::uint64_t next_entity_ = 1;
    std::uint32_t next_client_ = 1;
    std::uint64_t out_seq_ = 0;

    std::optional<ClientId> primary_;
    std::map<ClientId, SecondaryInfo> secondaries_;
    std::optional<ClientId> pickup_;
    CameraMode camera_mode_ = CameraMode::FollowSecondary;
    double env_scale_;
    bool voice_on_ = false;
    std::optional<EntityId> env_root_;
    std::vector<AugmentationEntity> augmentation_;
    std::map<EntityId, OoiInstance> oois_;
    std::map<EntityId, std::set<ClientId>> arrows_;

    std::map<ClientId, std::uint64_t> last_seq_;
    bool dirty_ = false;
    std::vector<bool> tracked_sent_;
    std::vector<Outgoing> outbox_;
    std::map<EntityId, std::pair<std::optional<EntityId>, Pose>> sent_raw_;
    std::map<EntityId, Pose> sent_city_;
};

} // namespace cotour
