#include "cotour/mirror.hpp"

namespace cotour {

void ClientMirror::apply(const Message& m)
{
    if (const auto* w = std::get_if<msg::Welcome>(&m.body)) {
        self_ = w->client;
        rebuild(w->snapshot);
    } else if (const auto* s = std::get_if<msg::StateSnapshot>(&m.body); s && s->state) {
        rebuild(*s->state);
    } else if (const auto* p = std::get_if<msg::EntityLocalPose>(&m.body)) {
        apply_pose(*p);
    } else if (const auto* mp = std::get_if<msg::MarkerPose>(&m.body)) {
        if (const auto it = anchors_.find(mp->marker_id); it != anchors_.end()) {
            tree_.set_local(it->second, mp->pose);
        }
    }
}

void ClientMirror::rebuild(const json& snapshot)
{
    FrameTree tree;
    std::vector<Entity> pending;
    for (const auto& e : require(snapshot, "entities", "")) {
        Entity entity;
        entity.id = EntityId{e.at("id").get<std::uint64_t>()};
        const auto kind = entity_kind_from_string(e.at("kind").get<std::string>());
        if (!kind) {
            throw DocumentError("/entities", "unknown entity kind");
        }
        entity.kind = *kind;
        if (!e.at("parent").is_null()) {
            entity.parent = EntityId{e.at("parent").get<std::uint64_t>()};
        }
        entity.local = pose_from_json(e.at("local"), "/entities/local");
        entity.owner = ClientId{e.at("owner").get<std::uint32_t>()};
        entity.visible = e.at("visible").get<bool>();
        entity.name = e.at("name").get<std::string>();
        pending.push_back(std::move(entity));
    }
    // Parents may carry larger ids than their children after reparenting.
    while (!pending.empty()) {
        std::vector<Entity> next;
        for (auto& e : pending) {
            if (!e.parent || tree.contains(*e.parent)) {
                tree.add(std::move(e));
            } else {
                next.push_back(std::move(e));
            }
        }
        if (next.size() == pending.size()) {
            throw DocumentError("/entities", "dangling parent reference");
        }
        pending = std::move(next);
    }

    anchors_.clear();
    hub_scaler_.reset();
    for (const auto& a : require(snapshot, "augmentation", "")) {
        anchors_[a.at("marker_id").get<std::string>()] = EntityId{a.at("anchor").get<std::uint64_t>()};
        if (a.at("prop") == "map_hub") {
            hub_scaler_ = EntityId{a.at("scaler").get<std::uint64_t>()};
        }
    }
    env_root_.reset();
    if (const json& env = require(snapshot, "environment", ""); !env.is_null()) {
        env_root_ = EntityId{env.at("root").get<std::uint64_t>()};
    }
    tree_ = std::move(tree);
    snapshot_ = snapshot;
}

void ClientMirror::apply_pose(const msg::EntityLocalPose& p)
{
    if (!tree_.contains(p.entity) || !tree_.contains(p.parent)) {
        return;
    }
    const Entity& e = tree_.at(p.entity);
    if (e.parent == p.parent) {
        tree_.set_local(p.entity, p.local);
        return;
    }
    if (env_root_ && p.parent == *env_root_ && hub_scaler_ && e.parent == *hub_scaler_) {
        // The Map-Hub scaler is another instance of the city frame.
        tree_.set_local(p.entity, p.local);
        return;
    }
    if (!e.parent) {
        tree_.set_local(p.entity, compose(tree_.world_pose(p.parent), p.local));
        return;
    }
    const Pose world = compose(tree_.world_pose(p.parent), p.local);
    tree_.set_local(p.entity, to_local(world, tree_.world_pose(*e.parent)));
}

Pose ClientMirror::city_pose(EntityId id) const
{
    const Entity& e = tree_.at(id);
    if (hub_scaler_ && e.parent == *hub_scaler_) {
        return e.local;
    }
    if (!env_root_) {
        throw FrameError("no environment");
    }
    if (e.parent == *env_root_) {
        return e.local;
    }
    return to_local(tree_.world_pose(id), tree_.world_pose(*env_root_));
}

} // namespace cotour
