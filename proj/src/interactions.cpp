#include "cotour/session.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cotour {

bool arrow_dismissed(const Pose& avatar, const Vec3& ooi_position, const ArrowConfig& cfg)
{
    const Vec3 d = ooi_position - avatar.position;
    const double dist = norm(d);
    if (dist > cfg.near_distance) {
        return false;
    }
    if (dist < 1e-12) {
        return true;
    }
    const Vec3 forward = avatar.rotation.rotate({0.0, 0.0, 1.0});
    const double c = std::clamp(dot(forward, d) / (norm(forward) * dist), -1.0, 1.0);
    const double angle = std::acos(c);
    return angle <= cfg.facing_half_angle_deg * std::numbers::pi / 180.0 + 1e-12;
}

Pose panel_pose(const Pose& avatar, double distance, double height)
{
    Vec3 forward = avatar.rotation.rotate({0.0, 0.0, 1.0});
    forward.y = 0.0;
    if (norm(forward) < 1e-9) {
        // Looking straight up or down: fall back to the avatar's up vector
        // projected onto the ground, which points where the head is tilted.
        forward = avatar.rotation.rotate({0.0, 1.0, 0.0});
        forward.y = 0.0;
        if (norm(forward) < 1e-9) {
            forward = {0.0, 0.0, 1.0};
        }
    }
    forward *= 1.0 / norm(forward);
    Pose p;
    p.position = avatar.position + forward * distance + Vec3{0.0, height, 0.0};
    p.rotation = Quat::yaw(std::atan2(forward.x, forward.z) + std::numbers::pi);
    return p;
}

OoiInstance& Session::ooi(EntityId id)
{
    const auto it = oois_.find(id);
    if (it == oois_.end()) {
        throw Rejected("not_found", "unknown ooi " + std::to_string(id.value));
    }
    return it->second;
}

const CatalogEntry& Session::entry_of(const OoiInstance& o) const
{
    const CatalogEntry* e = world_.find_entry(o.catalog_id);
    if (!e) {
        throw Rejected("not_found", "unknown catalog id \"" + o.catalog_id + "\"");
    }
    return *e;
}

const OoiInstance* Session::ooi_on(std::string_view marker_id) const
{
    for (const auto& [id, o] : oois_) {
        if (o.attachment == AttachmentKind::Tangible && o.marker_id == marker_id) {
            return &o;
        }
    }
    return nullptr;
}

void Session::on_select(ClientId sender, const msg::SelectOoi& b)
{
    const OoiInstance& o = ooi(b.ooi);
    send(sender, msg::SelectOoi{b.ooi, entry_of(o).enabled_interactions});
}

void Session::on_interaction(ClientId sender, std::uint64_t seq, const msg::Interaction& b)
{
    OoiInstance& o = ooi(b.ooi);
    const CatalogEntry& entry = entry_of(o);
    const auto need = [&](InteractionKind k) {
        if (!entry.enables(k)) {
            throw Rejected("disabled",
                           std::string(to_string(k)) + " is not enabled for \"" + entry.catalog_id + "\"");
        }
    };
    const auto held_city_pose = [&]() {
        if (!pickup_) {
            throw Rejected("precondition", "no secondary picked up");
        }
        return secondaries_.at(*pickup_).city_pose;
    };

    switch (b.kind) {
    case CommandKind::Text:
    case CommandKind::Video: {
        const bool text = b.kind == CommandKind::Text;
        need(text ? InteractionKind::Text : InteractionKind::Video);
        const Pose avatar = held_city_pose();
        msg::Interaction event{b.ooi, b.kind, std::nullopt, std::nullopt, std::nullopt,
                               text ? entry.text_content : entry.video_ref,
                               panel_pose(avatar, config_.panel_distance, config_.panel_height)};
        broadcast(event);
        return;
    }
    case CommandKind::Scale: {
        need(InteractionKind::Scale);
        if (!b.factor) {
            throw Rejected("invalid", "scale needs a factor");
        }
        const double factor = std::clamp(*b.factor, config_.ooi_scale_min, config_.ooi_scale_max);
        Pose local = tree_.at(o.entity).local;
        local.scale = Vec3::uniform(factor);
        tree_.set_local(o.entity, local);
        dirty_ = true;
        if (factor != *b.factor) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g", factor);
            send(sender, msg::Error{"clamped", std::string("ooi scale clamped to ") + buf, seq});
        }
        return;
    }
    case CommandKind::Highlight:
        need(InteractionKind::Highlight);
        if (!b.on) {
            throw Rejected("invalid", "highlight needs on");
        }
        set_highlight(o, *b.on);
        return;
    case CommandKind::Change: {
        need(InteractionKind::Change);
        if (!b.target) {
            throw Rejected("invalid", "change needs a target");
        }
        if (std::find(entry.change_targets.begin(), entry.change_targets.end(), *b.target) ==
            entry.change_targets.end()) {
            throw Rejected("invalid", "\"" + *b.target + "\" is not a change target of \"" + entry.catalog_id + "\"");
        }
        o.catalog_id = *b.target;
        dirty_ = true;
        return;
    }
    case CommandKind::Lock:
        need(InteractionKind::Lock);
        if (o.attachment == AttachmentKind::StaticScene) {
            throw Rejected("precondition", "static scene OOIs cannot be locked");
        }
        if (o.attachment == AttachmentKind::LockedInEnvironment) {
            throw Rejected("conflict", "already locked");
        }
        lock(o);
        return;
    case CommandKind::Unlock: {
        need(InteractionKind::Lock);
        if (o.attachment != AttachmentKind::LockedInEnvironment) {
            throw Rejected("precondition", "only locked OOIs can be reattached");
        }
        const Vec3 at = tree_.world_pose(o.entity).position;
        const AugmentationEntity* best = nullptr;
        bool untracked_in_range = false;
        double best_distance = std::numeric_limits<double>::infinity();
        for (const auto& a : augmentation_) {
            if (a.prop != PropKind::Tangible || ooi_on(a.marker_id)) {
                continue;
            }
            const double d = distance(tree_.world_pose(a.scaler).position, at);
            if (d > config_.reattach_threshold) {
                continue;
            }
            if (!tracked(a)) {
                untracked_in_range = true;
                continue;
            }
            if (d < best_distance) {
                best = &a;
                best_distance = d;
            }
        }
        if (!best) {
            if (untracked_in_range) {
                throw Rejected("not_tracked", "marker not tracked");
            }
            throw Rejected("out_of_range", "no empty tangible within the reattach threshold");
        }
        attach_to_tangible(o, *best);
        return;
    }
    case CommandKind::Delete:
        if (o.attachment == AttachmentKind::StaticScene) {
            throw Rejected("precondition", "static scene OOIs cannot be deleted");
        }
        if (o.attachment == AttachmentKind::Tangible) {
            throw Rejected("precondition", "lock the OOI before deleting it");
        }
        delete_ooi(o);
        return;
    }
}

void Session::on_spawn(ClientId sender, const msg::SpawnOoi& b)
{
    const AugmentationEntity& t = marker(b.marker_id);
    if (t.prop != PropKind::Tangible) {
        throw Rejected("invalid", "\"" + b.marker_id + "\" is not a tangible");
    }
    const CatalogEntry* entry = world_.find_entry(b.catalog_id);
    if (!entry) {
        throw Rejected("not_found", "unknown catalog id \"" + b.catalog_id + "\"");
    }
    if (!entry->spawnable) {
        throw Rejected("precondition", "\"" + b.catalog_id + "\" cannot be spawned");
    }
    require_tracked(t);
    if (ooi_on(t.marker_id)) {
        throw Rejected("conflict", "one OOI per tangible");
    }
    const EntityId id = new_entity_id();
    tree_.add(Entity{id, EntityKind::Ooi, t.scaler, Pose::identity(), sender, "", true});
    oois_.emplace(id, OoiInstance{id, b.catalog_id, AttachmentKind::Tangible, t.marker_id, false});
    send(sender, msg::SpawnOoi{b.marker_id, b.catalog_id, id});
    dirty_ = true;
}

void Session::on_attach(const msg::AttachOoi& b)
{
    const AugmentationEntity& t = marker(b.marker_id);
    if (t.prop != PropKind::Tangible) {
        throw Rejected("invalid", "\"" + b.marker_id + "\" is not a tangible");
    }
    OoiInstance& o = ooi(b.ooi);
    if (o.attachment != AttachmentKind::LockedInEnvironment) {
        throw Rejected("precondition", "only locked OOIs can be reattached");
    }
    require_tracked(t);
    if (ooi_on(t.marker_id)) {
        throw Rejected("conflict", "one OOI per tangible");
    }
    const double d = distance(tree_.world_pose(t.scaler).position, tree_.world_pose(o.entity).position);
    if (d > config_.reattach_threshold) {
        throw Rejected("out_of_range", "tangible too far from the OOI to reattach");
    }
    attach_to_tangible(o, t);
}

void Session::set_highlight(OoiInstance& o, bool on)
{
    o.highlighted = on;
    if (on) {
        auto& clients = arrows_[o.entity];
        clients.clear();
        for (const auto& [id, s] : secondaries_) {
            clients.insert(id);
        }
    } else {
        arrows_.erase(o.entity);
    }
    broadcast_highlight(o);
    dirty_ = true;
}

void Session::lock(OoiInstance& o)
{
    tree_.reparent_preserving_world(o.entity, *env_root_);
    o.attachment = AttachmentKind::LockedInEnvironment;
    o.marker_id.clear();
    dirty_ = true;
}

void Session::attach_to_tangible(OoiInstance& o, const AugmentationEntity& tangible)
{
    tree_.reparent_preserving_world(o.entity, tangible.scaler);
    o.attachment = AttachmentKind::Tangible;
    o.marker_id = tangible.marker_id;
    dirty_ = true;
}

void Session::delete_ooi(OoiInstance& o)
{
    const EntityId id = o.entity;
    if (o.highlighted) {
        o.highlighted = false;
        arrows_.erase(id);
        broadcast_highlight(o);
    }
    tree_.remove(id);
    oois_.erase(id);
    dirty_ = true;
}

void Session::broadcast_highlight(const OoiInstance& o)
{
    msg::HighlightState state{o.entity, o.highlighted, {}};
    if (const auto it = arrows_.find(o.entity); it != arrows_.end()) {
        state.arrows.assign(it->second.begin(), it->second.end());
    }
    broadcast(state);
}

void Session::update_arrows()
{
    if (!env_root_) {
        return;
    }
    for (auto& [ooi_id, clients] : arrows_) {
        const Vec3 target = city_pose(ooi_id).position;
        bool changed = false;
        for (auto it = clients.begin(); it != clients.end();) {
            if (arrow_dismissed(secondaries_.at(*it).city_pose, target, config_.arrow)) {
                it = clients.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
        if (changed) {
            broadcast_highlight(oois_.at(ooi_id));
            dirty_ = true;
        }
    }
}

} // namespace cotour
