#pragma once

#include "cotour/math.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cotour {

class FrameError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EntityId {
    std::uint64_t value = 0;
    friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

struct ClientId {
    std::uint32_t value = 0;
    friend auto operator<=>(const ClientId&, const ClientId&) = default;
};

/// Owner of everything no client owns: scene content, anchors, the environment root.
inline constexpr ClientId kServer{0};

enum class EntityKind { Avatar, Ooi, AugAnchor, Scaler, EnvironmentRoot, Poi };

std::string_view to_string(EntityKind kind);
std::optional<EntityKind> entity_kind_from_string(std::string_view s);

struct Entity {
    EntityId id;
    EntityKind kind = EntityKind::Ooi;
    std::optional<EntityId> parent;
    Pose local;
    ClientId owner = kServer;
    std::string name;
    bool visible = true;

    friend bool operator==(const Entity&, const Entity&) = default;
};

using OwnershipTable = std::map<EntityId, ClientId>;

/// Hierarchical frame tree. Entities are kept ordered by id so iteration is
/// deterministic.
class FrameTree {
public:
    /// Throws on duplicate id, unknown parent, or a non-finite / degenerate pose.
    void add(Entity e);
    /// Removes the entity and its whole subtree. Returns the removed ids.
    std::vector<EntityId> remove(EntityId id);

    bool contains(EntityId id) const { return entities_.count(id) != 0; }
    const Entity& at(EntityId id) const;
    std::size_t size() const { return entities_.size(); }
    const std::map<EntityId, Entity>& entities() const { return entities_; }

    std::vector<EntityId> roots() const;
    std::vector<EntityId> children(EntityId id) const;
    /// True if `ancestor` lies on the parent chain of `id` (or equals it).
    bool is_ancestor_or_self(EntityId ancestor, EntityId id) const;

    void set_local(EntityId id, const Pose& local);
    void set_visible(EntityId id, bool visible);
    void set_owner(EntityId id, ClientId owner);

    Pose world_pose(EntityId id) const;

    /// Moves `id` under `new_parent` (nullopt = root) keeping its world pose.
    /// Returns the new local pose.
    Pose reparent_preserving_world(EntityId id, std::optional<EntityId> new_parent);

    /// Moves `id` under `new_parent` with an explicit local pose.
    void attach(EntityId id, std::optional<EntityId> new_parent, const Pose& local);

    /// Sets the local pose of the Scaler child of `anchor`. Scalers carry uniform scale only.
    void set_scaler(EntityId anchor, const Pose& offset);
    std::optional<EntityId> scaler_of(EntityId anchor) const;

    OwnershipTable ownership() const;

private:
    Entity& mutable_at(EntityId id);
    void check_reparent(EntityId id, std::optional<EntityId> new_parent) const;

    std::map<EntityId, Entity> entities_;
};

} // namespace cotour
