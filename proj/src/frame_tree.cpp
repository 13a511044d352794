#include "cotour/frame_tree.hpp"

#include <algorithm>
#include <array>

namespace cotour {

namespace {

constexpr std::array<std::pair<EntityKind, std::string_view>, 6> kKindNames{{
    {EntityKind::Avatar, "avatar"},
    {EntityKind::Ooi, "ooi"},
    {EntityKind::AugAnchor, "aug_anchor"},
    {EntityKind::Scaler, "scaler"},
    {EntityKind::EnvironmentRoot, "environment_root"},
    {EntityKind::Poi, "poi"},
}};

std::string id_text(EntityId id) { return std::to_string(id.value); }

void check_pose(const Pose& p, EntityId id)
{
    if (!is_finite(p)) {
        throw FrameError("non-finite pose for entity " + id_text(id));
    }
    if (!has_positive_scale(p)) {
        throw FrameError("non-positive scale for entity " + id_text(id));
    }
}

} // namespace

std::string_view to_string(EntityKind kind)
{
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) {
            return name;
        }
    }
    return "unknown";
}

std::optional<EntityKind> entity_kind_from_string(std::string_view s)
{
    for (const auto& [k, name] : kKindNames) {
        if (name == s) {
            return k;
        }
    }
    return std::nullopt;
}

void FrameTree::add(Entity e)
{
    if (contains(e.id)) {
        throw FrameError("duplicate entity " + id_text(e.id));
    }
    if (e.parent && !contains(*e.parent)) {
        throw FrameError("unknown parent " + id_text(*e.parent));
    }
    check_pose(e.local, e.id);
    e.local.rotation = e.local.rotation.normalized();
    const EntityId id = e.id;
    entities_.emplace(id, std::move(e));
}

std::vector<EntityId> FrameTree::remove(EntityId id)
{
    if (!contains(id)) {
        throw FrameError("unknown entity " + id_text(id));
    }
    std::vector<EntityId> removed{id};
    for (std::size_t i = 0; i < removed.size(); ++i) {
        for (const EntityId child : children(removed[i])) {
            removed.push_back(child);
        }
    }
    for (const EntityId r : removed) {
        entities_.erase(r);
    }
    return removed;
}

const Entity& FrameTree::at(EntityId id) const
{
    const auto it = entities_.find(id);
    if (it == entities_.end()) {
        throw FrameError("unknown entity " + id_text(id));
    }
    return it->second;
}

Entity& FrameTree::mutable_at(EntityId id)
{
    const auto it = entities_.find(id);
    if (it == entities_.end()) {
        throw FrameError("unknown entity " + id_text(id));
    }
    return it->second;
}

std::vector<EntityId> FrameTree::roots() const
{
    std::vector<EntityId> out;
    for (const auto& [id, e] : entities_) {
        if (!e.parent) {
            out.push_back(id);
        }
    }
    return out;
}

std::vector<EntityId> FrameTree::children(EntityId id) const
{
    std::vector<EntityId> out;
    for (const auto& [cid, e] : entities_) {
        if (e.parent == id) {
            out.push_back(cid);
        }
    }
    return out;
}

bool FrameTree::is_ancestor_or_self(EntityId ancestor, EntityId id) const
{
    std::optional<EntityId> cur = id;
    while (cur) {
        if (*cur == ancestor) {
            return true;
        }
        cur = at(*cur).parent;
    }
    return false;
}

void FrameTree::set_local(EntityId id, const Pose& local)
{
    check_pose(local, id);
    Entity& e = mutable_at(id);
    e.local = local;
    e.local.rotation = local.rotation.normalized();
}

void FrameTree::set_visible(EntityId id, bool visible) { mutable_at(id).visible = visible; }

void FrameTree::set_owner(EntityId id, ClientId owner) { mutable_at(id).owner = owner; }

Pose FrameTree::world_pose(EntityId id) const
{
    std::vector<const Pose*> chain;
    std::optional<EntityId> cur = id;
    while (cur) {
        const Entity& e = at(*cur);
        chain.push_back(&e.local);
        cur = e.parent;
    }
    Pose world = *chain.back();
    for (auto it = std::next(chain.rbegin()); it != chain.rend(); ++it) {
        world = compose(world, **it);
    }
    return world;
}

void FrameTree::check_reparent(EntityId id, std::optional<EntityId> new_parent) const
{
    if (!contains(id)) {
        throw FrameError("unknown entity " + id_text(id));
    }
    if (new_parent) {
        if (!contains(*new_parent)) {
            throw FrameError("unknown parent " + id_text(*new_parent));
        }
        if (is_ancestor_or_self(id, *new_parent)) {
            throw FrameError("reparenting " + id_text(id) + " under " + id_text(*new_parent) +
                             " would create a cycle");
        }
    }
}

Pose FrameTree::reparent_preserving_world(EntityId id, std::optional<EntityId> new_parent)
{
    check_reparent(id, new_parent);
    const Pose world = world_pose(id);
    const Pose local = new_parent ? to_local(world, world_pose(*new_parent)) : world;
    check_pose(local, id);
    Entity& e = mutable_at(id);
    e.parent = new_parent;
    e.local = local;
    return local;
}

void FrameTree::attach(EntityId id, std::optional<EntityId> new_parent, const Pose& local)
{
    check_reparent(id, new_parent);
    check_pose(local, id);
    Entity& e = mutable_at(id);
    e.parent = new_parent;
    e.local = local;
    e.local.rotation = local.rotation.normalized();
}

std::optional<EntityId> FrameTree::scaler_of(EntityId anchor) const
{
    for (const EntityId c : children(anchor)) {
        if (at(c).kind == EntityKind::Scaler) {
            return c;
        }
    }
    return std::nullopt;
}

void FrameTree::set_scaler(EntityId anchor, const Pose& offset)
{
    if (at(anchor).kind != EntityKind::AugAnchor) {
        throw FrameError("entity " + id_text(anchor) + " is not an augmentation anchor");
    }
    const auto scaler = scaler_of(anchor);
    if (!scaler) {
        throw FrameError("anchor " + id_text(anchor) + " has no Scaler child");
    }
    if (!is_uniform_scale(offset.scale)) {
        throw FrameError("scaler scale must be uniform");
    }
    set_local(*scaler, offset);
}

OwnershipTable FrameTree::ownership() const
{
    OwnershipTable table;
    for (const auto& [id, e] : entities_) {
        table.emplace(id, e.owner);
    }
    return table;
}

} // namespace cotour
