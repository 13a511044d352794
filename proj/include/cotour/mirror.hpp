#pragma once

#include "cotour/frame_tree.hpp"
#include "cotour/protocol.hpp"

#include <optional>

namespace cotour {

/// Client-side replica built from snapshots and pose deltas.
class ClientMirror {
public:
    /// Consumes Welcome, StateSnapshot replies, EntityLocalPose and
    /// MarkerPose. Other messages are ignored.
    void apply(const Message& m);

    bool has_state() const { return !snapshot_.is_null(); }
    /// Last full snapshot received (deltas are applied to the tree only).
    const json& snapshot() const { return snapshot_; }
    const FrameTree& tree() const { return tree_; }
    std::optional<ClientId> self() const { return self_; }

    Pose world_pose(EntityId id) const { return tree_.world_pose(id); }
    /// Pose in the city frame: avatars on the Map-Hub use their local pose,
    /// everything else is expressed relative to the environment root.
    Pose city_pose(EntityId id) const;
    std::optional<EntityId> environment_root() const { return env_root_; }

private:
    void rebuild(const json& snapshot);
    void apply_pose(const msg::EntityLocalPose& p);

    json snapshot_;
    FrameTree tree_;
    std::optional<ClientId> self_;
    std::optional<EntityId> env_root_;
    std::optional<EntityId> hub_scaler_;
    std::map<std::string, EntityId> anchors_;
};

} // namespace cotour
