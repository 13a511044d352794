#include "cotour/session.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cotour {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Pose with_unit_scale(Pose p)
{
    p.scale = Vec3::ones();
    return p;
}

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

json optional_id(const std::optional<EntityId>& id) { return id ? json(id->value) : json(nullptr); }

} // namespace

std::string_view to_string(PropKind kind)
{
    switch (kind) {
    case PropKind::MapHub:
        return "map_hub";
    case PropKind::PickupShovel:
        return "pickup_shovel";
    case PropKind::Tangible:
        return "tangible";
    }
    return "unknown";
}

std::string_view to_string(AttachmentKind kind)
{
    switch (kind) {
    case AttachmentKind::Tangible:
        return "tangible";
    case AttachmentKind::LockedInEnvironment:
        return "locked";
    case AttachmentKind::StaticScene:
        return "static";
    }
    return "unknown";
}

// --- config ---------------------------------------------------------------

json to_json(const SessionConfig& c)
{
    return json{
        {"pickup_threshold", c.pickup_threshold},
        {"short_teleport_limit", c.short_teleport_limit},
        {"env_scale_min", c.env_scale_min},
        {"env_scale_max", c.env_scale_max},
        {"env_scale_default", c.env_scale_default},
        {"ooi_scale_min", c.ooi_scale_min},
        {"ooi_scale_max", c.ooi_scale_max},
        {"arrow_near_distance", c.arrow.near_distance},
        {"arrow_half_angle_deg", c.arrow.facing_half_angle_deg},
        {"reattach_threshold", c.reattach_threshold},
        {"tracking_timeout", c.tracking_timeout},
        {"panel_distance", c.panel_distance},
        {"panel_height", c.panel_height},
        {"notify_pickup", c.notify_pickup},
        {"spawn", to_json(c.spawn)},
    };
}

SessionConfig session_config_from_json(const json& j, const std::string& path)
{
    if (!j.is_object()) {
        throw DocumentError(path.empty() ? "/" : path, "expected an object");
    }
    SessionConfig c;
    const std::map<std::string, double*> numbers{
        {"pickup_threshold", &c.pickup_threshold},
        {"short_teleport_limit", &c.short_teleport_limit},
        {"env_scale_min", &c.env_scale_min},
        {"env_scale_max", &c.env_scale_max},
        {"env_scale_default", &c.env_scale_default},
        {"ooi_scale_min", &c.ooi_scale_min},
        {"ooi_scale_max", &c.ooi_scale_max},
        {"arrow_near_distance", &c.arrow.near_distance},
        {"arrow_half_angle_deg", &c.arrow.facing_half_angle_deg},
        {"reattach_threshold", &c.reattach_threshold},
        {"tracking_timeout", &c.tracking_timeout},
        {"panel_distance", &c.panel_distance},
        {"panel_height", &c.panel_height},
    };
    for (const auto& [key, value] : j.items()) {
        if (const auto it = numbers.find(key); it != numbers.end()) {
            *it->second = as_number(value, child_path(path, key));
        } else if (key == "notify_pickup") {
            c.notify_pickup = require_bool(j, key, path);
        } else if (key == "spawn") {
            c.spawn = with_unit_scale(pose_from_json(value, child_path(path, key)));
        } else {
            throw DocumentError(child_path(path, key), "unknown setting");
        }
    }
    try {
        validate(c);
    } catch (const DocumentError& e) {
        throw DocumentError(path + e.where(), std::string(e.what()).substr(e.where().size() + 2));
    }
    return c;
}

void validate(const SessionConfig& c)
{
    const auto positive = [](double v, const char* key) {
        if (!(v > 0.0)) {
            throw DocumentError(std::string("/") + key, "must be > 0");
        }
    };
    positive(c.pickup_threshold, "pickup_threshold");
    positive(c.short_teleport_limit, "short_teleport_limit");
    positive(c.env_scale_min, "env_scale_min");
    positive(c.ooi_scale_min, "ooi_scale_min");
    positive(c.arrow.near_distance, "arrow_near_distance");
    positive(c.arrow.facing_half_angle_deg, "arrow_half_angle_deg");
    positive(c.reattach_threshold, "reattach_threshold");
    positive(c.tracking_timeout, "tracking_timeout");
    positive(c.panel_distance, "panel_distance");
    if (c.env_scale_max < c.env_scale_min) {
        throw DocumentError("/env_scale_max", "must be >= env_scale_min");
    }
    if (c.env_scale_default < c.env_scale_min || c.env_scale_default > c.env_scale_max) {
        throw DocumentError("/env_scale_default", "must lie in [env_scale_min, env_scale_max]");
    }
    if (c.ooi_scale_max < c.ooi_scale_min) {
        throw DocumentError("/ooi_scale_max", "must be >= ooi_scale_min");
    }
    if (c.arrow.facing_half_angle_deg > 180.0) {
        throw DocumentError("/arrow_half_angle_deg", "must be <= 180");
    }
}

// --- construction ---------------------------------------------------------

Session::Session(World world, SessionConfig config)
    : world_(std::move(world)), config_(std::move(config)), env_scale_(config_.env_scale_default)
{
    validate(config_);
    const auto add_prop = [&](const std::string& marker_id, PropKind kind, const Pose& scaler_local) {
        AugmentationEntity a{marker_id, kind, new_entity_id(), {}, std::nullopt};
        tree_.add(Entity{a.anchor, EntityKind::AugAnchor, std::nullopt, Pose::identity(), kServer, marker_id, true});
        a.scaler = new_entity_id();
        tree_.add(Entity{a.scaler, EntityKind::Scaler, a.anchor, scaler_local, kServer, marker_id + "/scaler", true});
        augmentation_.push_back(std::move(a));
    };
    add_prop(world_.markers.map_hub, PropKind::MapHub, world_.calibration.scaler_pose());
    add_prop(world_.markers.pickup_shovel, PropKind::PickupShovel, Pose{{}, {}, Vec3::uniform(env_scale_)});
    for (const auto& t : world_.tangibles) {
        add_prop(t.marker_id, PropKind::Tangible, Pose{{}, {}, Vec3::uniform(t.scaler_scale)});
    }
    tracked_sent_.assign(augmentation_.size(), false);
    reset_pose_caches();
}

EntityId Session::new_entity_id() { return EntityId{next_entity_++}; }

void Session::spawn_environment()
{
    if (env_root_) {
        return;
    }
    const EntityId root = new_entity_id();
    tree_.add(Entity{root, EntityKind::EnvironmentRoot, prop(PropKind::PickupShovel).scaler, Pose::identity(), kServer,
                     "environment", false});
    env_root_ = root;
    for (const auto& entry : world_.catalog) {
        for (const auto& placement : entry.placements) {
            const EntityId id = new_entity_id();
            tree_.add(Entity{id, EntityKind::Ooi, root, placement, kServer, "", true});
            oois_.emplace(id, OoiInstance{id, entry.catalog_id, AttachmentKind::StaticScene, "", false});
        }
    }
    for (const auto& poi : world_.pois) {
        tree_.add(Entity{new_entity_id(), EntityKind::Poi, root, poi.spawn_pose, kServer, poi.poi_id, true});
    }
}

// --- membership -----------------------------------------------------------

RoleTable Session::roles() const
{
    RoleTable roles;
    if (primary_) {
        roles[*primary_] = Role::Primary;
    }
    for (const auto& [id, s] : secondaries_) {
        roles[id] = Role::Secondary;
    }
    return roles;
}

ClientId Session::join(Role role, std::uint64_t seq)
{
    if (role == Role::Primary && primary_) {
        throw Rejected("role_occupied", "role occupied");
    }
    const ClientId id{next_client_++};
    spawn_environment();
    if (role == Role::Primary) {
        primary_ = id;
        for (auto& [eid, o] : oois_) {
            if (o.attachment != AttachmentKind::StaticScene) {
                tree_.set_owner(eid, id);
            }
        }
    } else {
        const EntityId avatar = new_entity_id();
        const Pose city = with_unit_scale(config_.spawn);
        tree_.add(Entity{avatar, EntityKind::Avatar, prop(PropKind::MapHub).scaler, city, id,
                         "avatar-" + std::to_string(id.value), true});
        secondaries_.emplace(id, SecondaryInfo{id, avatar, city, true});
        for (auto& [ooi_id, clients] : arrows_) {
            clients.insert(id);
        }
    }
    last_seq_[id] = seq;
    update_arrows();

    const json snap = snapshot();
    send(id, msg::Welcome{id, role, snap});
    for (const auto& [other, r] : roles()) {
        if (other != id) {
            send(other, msg::StateSnapshot::of(snap));
        }
    }
    reset_pose_caches();
    dirty_ = false;
    return id;
}

void Session::leave(ClientId client)
{
    if (primary_ && *primary_ == client) {
        release();
        voice_on_ = false;
        primary_.reset();
        for (auto& [eid, o] : oois_) {
            if (o.attachment != AttachmentKind::StaticScene) {
                tree_.set_owner(eid, kServer);
            }
        }
    } else if (secondaries_.count(client)) {
        despawn_secondary(client);
    } else {
        return;
    }
    last_seq_.erase(client);
    dirty_ = true;
    broadcast_snapshot();
}

void Session::despawn_secondary(ClientId client)
{
    if (pickup_ && *pickup_ == client) {
        release();
    }
    tree_.remove(secondaries_.at(client).avatar);
    secondaries_.erase(client);
    for (auto& [ooi_id, clients] : arrows_) {
        clients.erase(client);
    }
}

// --- message handling -----------------------------------------------------

void Session::handle(ClientId sender, const Message& m)
{
    const auto reply_error = [&](const std::string& code, const std::string& reason) {
        send(sender, msg::Error{code, reason, m.seq});
    };
    const RoleTable role_table = roles();
    if (!role_table.count(sender)) {
        reply_error("unauthorized", "not joined");
        return;
    }
    if (m.seq <= last_seq_[sender]) {
        return;
    }
    last_seq_[sender] = m.seq;
    if (m.sender != sender) {
        reply_error("unauthorized", "sender mismatch");
        return;
    }
    if (const auto* req = std::get_if<msg::StateSnapshot>(&m.body); req && !req->state) {
        send(sender, msg::StateSnapshot::of(snapshot()));
        return;
    }
    const Authorization auth = authorize(tree_.ownership(), role_table, sender, m.body);
    if (!auth.allowed) {
        reply_error("unauthorized", auth.reason);
        return;
    }
    try {
        dispatch(sender, m);
    } catch (const Rejected& r) {
        reply_error(r.code(), r.what());
        return;
    } catch (const FrameError& e) {
        reply_error("invalid", e.what());
        return;
    }
    update_arrows();
    if (dirty_) {
        broadcast_snapshot();
    }
}

void Session::dispatch(ClientId sender, const Message& m)
{
    std::visit(overloaded{
                   [&](const msg::MarkerPose& b) { on_marker_pose(b); },
                   [&](const msg::EntityLocalPose& b) { on_entity_local_pose(sender, b); },
                   [&](const msg::Pickup& b) { on_pickup(b); },
                   [&](const msg::Release&) { release(); },
                   [&](const msg::SetScale& b) { on_set_scale(sender, m.seq, b); },
                   [&](const msg::SetCameraMode& b) { on_camera_mode(b); },
                   [&](const msg::VoiceToggle& b) { on_voice(b); },
                   [&](const msg::AudioFrame&) { on_audio(sender, m); },
                   [&](const msg::TeleportShort& b) { on_teleport_short(sender, b); },
                   [&](const msg::TeleportPoi& b) { on_teleport_poi(sender, b); },
                   [&](const msg::HandMapToggle& b) { on_hand_map(b); },
                   [&](const msg::SelectOoi& b) { on_select(sender, b); },
                   [&](const msg::Interaction& b) { on_interaction(sender, m.seq, b); },
                   [&](const msg::SpawnOoi& b) { on_spawn(sender, b); },
                   [&](const msg::AttachOoi& b) { on_attach(b); },
                   [&](const msg::Leave&) { leave(sender); },
                   [&](const auto&) { throw Rejected("invalid", std::string(type_name(m.body)) + " is not a request"); },
               },
               m.body);
}

const AugmentationEntity* Session::find_marker(std::string_view marker_id) const
{
    for (const auto& a : augmentation_) {
        if (a.marker_id == marker_id) {
            return &a;
        }
    }
    return nullptr;
}

const AugmentationEntity& Session::marker(std::string_view marker_id) const
{
    const auto* a = find_marker(marker_id);
    if (!a) {
        throw Rejected("not_found", "unknown marker \"" + std::string(marker_id) + "\"");
    }
    return *a;
}

const AugmentationEntity& Session::prop(PropKind kind) const
{
    for (const auto& a : augmentation_) {
        if (a.prop == kind) {
            return a;
        }
    }
    throw FrameError("missing augmentation entity");
}

bool Session::tracked(const AugmentationEntity& a) const
{
    return a.last_seen && time_ - *a.last_seen <= config_.tracking_timeout + 1e-9;
}

void Session::require_tracked(const AugmentationEntity& a) const
{
    if (!tracked(a)) {
        throw Rejected("not_tracked", "marker not tracked");
    }
}

SecondaryInfo& Session::secondary_by_avatar(EntityId avatar)
{
    for (auto& [id, s] : secondaries_) {
        if (s.avatar == avatar) {
            return s;
        }
    }
    throw Rejected("not_found", "unknown avatar " + std::to_string(avatar.value));
}

void Session::on_marker_pose(const msg::MarkerPose& b)
{
    const std::string& id = marker(b.marker_id).marker_id;
    for (auto& a : augmentation_) {
        if (a.marker_id == id) {
            tree_.set_local(a.anchor, with_unit_scale(b.pose));
            a.last_seen = time_;
        }
    }
}

void Session::on_entity_local_pose(ClientId, const msg::EntityLocalPose& b)
{
    const Entity& e = tree_.at(b.entity);
    if (!is_finite(b.local) || !has_positive_scale(b.local)) {
        throw Rejected("invalid", "degenerate pose");
    }
    if (e.kind == EntityKind::Avatar) {
        if (!env_root_ || b.parent != *env_root_) {
            throw Rejected("invalid", "avatar poses are relative to the environment root");
        }
        SecondaryInfo& s = secondary_by_avatar(b.entity);
        if (distance(b.local.position, s.city_pose.position) > config_.short_teleport_limit) {
            throw Rejected("out_of_range", "move exceeds the short-range limit");
        }
        set_city_pose(s, with_unit_scale(b.local));
        return;
    }
    if (e.kind != EntityKind::Ooi) {
        throw Rejected("invalid", "entity is not client-movable");
    }
    if (!e.parent || b.parent != *e.parent) {
        throw Rejected("invalid", "parent does not match the entity's current parent");
    }
    if (!is_uniform_scale(b.local.scale, 1e-9)) {
        throw Rejected("invalid", "OOI scale must be uniform");
    }
    tree_.set_local(b.entity, b.local);
}

void Session::set_city_pose(SecondaryInfo& s, const Pose& city)
{
    s.city_pose = with_unit_scale(city);
    s.city_pose.rotation = s.city_pose.rotation.normalized();
    if (pickup_ && *pickup_ == s.client) {
        place_held_avatar(s);
    } else {
        tree_.set_local(s.avatar, s.city_pose);
    }
}

void Session::place_held_avatar(const SecondaryInfo& s)
{
    Pose env = tree_.at(*env_root_).local;
    if (camera_mode_ == CameraMode::FollowSecondary) {
        env = Pose::at(-s.city_pose.position);
        tree_.set_local(*env_root_, env);
    }
    tree_.set_local(s.avatar, compose(env, s.city_pose));
}

void Session::on_pickup(const msg::Pickup& b)
{
    if (pickup_) {
        throw Rejected("conflict", "a secondary is already picked up");
    }
    const AugmentationEntity& hub = prop(PropKind::MapHub);
    const AugmentationEntity& shovel = prop(PropKind::PickupShovel);
    const Pose hub_world = tree_.world_pose(hub.anchor);
    Vec3 shovel_on_map;
    if (b.shovel_on_map) {
        shovel_on_map = b.shovel_on_map->position;
    } else {
        require_tracked(hub);
        require_tracked(shovel);
        shovel_on_map = to_local(tree_.world_pose(shovel.anchor), hub_world).position;
    }
    std::optional<ClientId> best;
    double best_distance = std::numeric_limits<double>::infinity();
    for (const auto& [id, s] : secondaries_) {
        const Vec3 on_map = to_local(tree_.world_pose(s.avatar), hub_world).position;
        const double d = distance(on_map, shovel_on_map);
        if (d < config_.pickup_threshold && d < best_distance) {
            best = id;
            best_distance = d;
        }
    }
    if (!best) {
        throw Rejected("not_found", "no secondary within the pickup threshold");
    }

    SecondaryInfo& s = secondaries_.at(*best);
    const Pose on_shovel = tree_.reparent_preserving_world(s.avatar, shovel.scaler);
    tree_.set_local(*env_root_, Pose::at(on_shovel.position - s.city_pose.position));
    tree_.set_visible(*env_root_, true);
    pickup_ = *best;
    camera_mode_ = CameraMode::FollowSecondary;
    place_held_avatar(s);
    if (config_.notify_pickup) {
        send(s.client, msg::Pickup{});
    }
    dirty_ = true;
}

void Session::release()
{
    if (!pickup_) {
        return;
    }
    const SecondaryInfo& s = secondaries_.at(*pickup_);
    tree_.attach(s.avatar, prop(PropKind::MapHub).scaler, s.city_pose);
    tree_.set_visible(*env_root_, false);
    if (config_.notify_pickup) {
        send(s.client, msg::Release{});
    }
    pickup_.reset();
    voice_on_ = false;
    camera_mode_ = CameraMode::FollowSecondary;
    dirty_ = true;
}

void Session::on_set_scale(ClientId sender, std::uint64_t seq, const msg::SetScale& b)
{
    if (!pickup_) {
        throw Rejected("precondition", "no secondary picked up");
    }
    const double value = std::clamp(b.value, config_.env_scale_min, config_.env_scale_max);
    tree_.set_scaler(prop(PropKind::PickupShovel).anchor, Pose{{}, {}, Vec3::uniform(value)});
    env_scale_ = value;
    dirty_ = true;
    if (value != b.value) {
        send(sender, msg::Error{"clamped", "env_scale clamped to " + format_number(value), seq});
    }
}

void Session::on_camera_mode(const msg::SetCameraMode& b)
{
    if (!pickup_) {
        throw Rejected("precondition", "no secondary picked up");
    }
    camera_mode_ = b.mode;
    place_held_avatar(secondaries_.at(*pickup_));
    dirty_ = true;
}

void Session::on_voice(const msg::VoiceToggle& b)
{
    voice_on_ = b.on;
    dirty_ = true;
}

void Session::on_audio(ClientId sender, const Message& m)
{
    if (!voice_on_ || !pickup_ || !primary_) {
        return;
    }
    if (sender == *primary_) {
        send_as(*pickup_, m);
    } else if (sender == *pickup_) {
        send_as(*primary_, m);
    }
}

void Session::on_teleport_short(ClientId, const msg::TeleportShort& b)
{
    SecondaryInfo& s = secondary_by_avatar(b.avatar);
    if (distance(b.target, s.city_pose.position) > config_.short_teleport_limit) {
        throw Rejected("out_of_range", "teleport exceeds the short-range limit");
    }
    Pose city = s.city_pose;
    city.position = b.target;
    set_city_pose(s, city);
    dirty_ = true;
}

void Session::on_teleport_poi(ClientId, const msg::TeleportPoi& b)
{
    SecondaryInfo& s = secondary_by_avatar(b.avatar);
    if (!s.hand_map_visible) {
        throw Rejected("map_hidden", "map hidden");
    }
    const PoiSpec* poi = world_.find_poi(b.poi);
    if (!poi) {
        throw Rejected("not_found", "unknown poi \"" + b.poi + "\"");
    }
    set_city_pose(s, poi->spawn_pose);
    dirty_ = true;
}

void Session::on_hand_map(const msg::HandMapToggle& b)
{
    secondaries_.at(b.secondary).hand_map_visible = b.visible;
    dirty_ = true;
}

// --- clock and replication ------------------------------------------------

void Session::tick(double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("tick dt must be > 0");
    }
    time_ += dt;
    update_arrows();
    for (std::size_t i = 0; i < augmentation_.size(); ++i) {
        if (tracked(augmentation_[i]) != tracked_sent_[i]) {
            dirty_ = true;
        }
    }
    if (dirty_) {
        broadcast_snapshot();
    } else {
        emit_pose_deltas();
    }
}

std::vector<Outgoing> Session::take_outbox()
{
    std::vector<Outgoing> out;
    out.swap(outbox_);
    return out;
}

void Session::send(ClientId to, Body body) { outbox_.push_back({to, Message{++out_seq_, kServer, std::move(body)}}); }

void Session::send_as(ClientId to, const Message& m) { outbox_.push_back({to, m}); }

void Session::broadcast(const Body& body)
{
    for (const auto& [id, role] : roles()) {
        send(id, body);
    }
}

void Session::broadcast_snapshot()
{
    broadcast(msg::StateSnapshot::of(snapshot()));
    reset_pose_caches();
    for (std::size_t i = 0; i < augmentation_.size(); ++i) {
        tracked_sent_[i] = tracked(augmentation_[i]);
    }
    dirty_ = false;
}

Pose Session::city_pose(EntityId id) const
{
    const Entity& e = tree_.at(id);
    if (e.kind == EntityKind::Avatar) {
        for (const auto& [cid, s] : secondaries_) {
            if (s.avatar == id) {
                return s.city_pose;
            }
        }
    }
    if (!env_root_) {
        throw FrameError("no environment");
    }
    if (e.parent == env_root_) {
        return e.local;
    }
    return to_local(tree_.world_pose(id), tree_.world_pose(*env_root_));
}

std::map<EntityId, Pose> Session::city_frame_poses() const
{
    std::map<EntityId, Pose> out;
    for (const auto& [id, s] : secondaries_) {
        out[s.avatar] = s.city_pose;
    }
    for (const auto& [id, o] : oois_) {
        if (o.attachment == AttachmentKind::Tangible) {
            out[id] = replicate_tangible_ooi(tree_, id, *env_root_).local;
        } else {
            out[id] = tree_.at(id).local;
        }
    }
    return out;
}

void Session::reset_pose_caches()
{
    sent_raw_.clear();
    for (const auto& [id, e] : tree_.entities()) {
        sent_raw_[id] = {e.parent, e.local};
    }
    sent_city_ = env_root_ ? city_frame_poses() : std::map<EntityId, Pose>{};
}

void Session::emit_pose_deltas()
{
    if (primary_) {
        for (const auto& [id, e] : tree_.entities()) {
            auto& cached = sent_raw_[id];
            if (cached.first == e.parent && cached.second == e.local) {
                continue;
            }
            cached = {e.parent, e.local};
            if (e.parent) {
                send(*primary_, msg::EntityLocalPose{id, *e.parent, e.local});
            } else {
                for (const auto& a : augmentation_) {
                    if (a.anchor == id) {
                        send(*primary_, msg::MarkerPose{a.marker_id, e.local});
                    }
                }
            }
        }
    }
    if (!secondaries_.empty() && env_root_) {
        for (const auto& [id, city] : city_frame_poses()) {
            auto it = sent_city_.find(id);
            if (it != sent_city_.end() && it->second == city) {
                continue;
            }
            sent_city_[id] = city;
            for (const auto& [cid, s] : secondaries_) {
                send(cid, msg::EntityLocalPose{id, *env_root_, city});
            }
        }
    }
}

// --- snapshot -------------------------------------------------------------

json Session::snapshot() const
{
    json secondaries = json::array();
    for (const auto& [id, s] : secondaries_) {
        const bool held = pickup_ && *pickup_ == id;
        secondaries.push_back({{"client", id.value},
                               {"avatar", s.avatar.value},
                               {"hand_map_visible", s.hand_map_visible},
                               {"city_pose", to_json(s.city_pose)},
                               {"placement", held ? "shovel" : "map_hub"}});
    }
    json augmentation = json::array();
    for (const auto& a : augmentation_) {
        augmentation.push_back({{"marker_id", a.marker_id},
                                {"prop", to_string(a.prop)},
                                {"anchor", a.anchor.value},
                                {"scaler", a.scaler.value},
                                {"tracked", tracked(a)},
                                {"last_seen", a.last_seen ? json(*a.last_seen) : json(nullptr)}});
    }
    json entities = json::array();
    for (const auto& [id, e] : tree_.entities()) {
        json& entry = entities.emplace_back(json::value_t::object);
        entry["id"] = id.value;
        entry["kind"] = to_string(e.kind);
        entry["parent"] = optional_id(e.parent);
        entry["local"] = to_json(e.local);
        entry["owner"] = e.owner.value;
        entry["visible"] = e.visible;
        entry["name"] = e.name;
    }
    json oois = json::array();
    for (const auto& [id, o] : oois_) {
        json attachment{{"kind", to_string(o.attachment)}};
        if (o.attachment == AttachmentKind::Tangible) {
            attachment["marker"] = o.marker_id;
        }
        oois.push_back({{"entity", id.value},
                        {"catalog_id", o.catalog_id},
                        {"attachment", std::move(attachment)},
                        {"highlighted", o.highlighted}});
    }
    json arrows = json::array();
    for (const auto& [ooi, clients] : arrows_) {
        json list = json::array();
        for (const auto c : clients) {
            list.push_back(c.value);
        }
        arrows.push_back({{"ooi", ooi.value}, {"secondaries", std::move(list)}});
    }
    json environment = nullptr;
    if (env_root_) {
        environment = {{"root", env_root_->value}, {"visible_to_primary", tree_.at(*env_root_).visible}};
    }
    return json{
        {"schema", kSnapshotSchema},
        {"time", time_},
        {"next_entity_id", next_entity_},
        {"primary", primary_ ? json(primary_->value) : json(nullptr)},
        {"secondaries", std::move(secondaries)},
        {"pickup", pickup_ ? json(pickup_->value) : json(nullptr)},
        {"camera_mode", to_string(camera_mode_)},
        {"env_scale", env_scale_},
        {"voice_on", voice_on_},
        {"environment", std::move(environment)},
        {"augmentation", std::move(augmentation)},
        {"entities", std::move(entities)},
        {"oois", std::move(oois)},
        {"arrows", std::move(arrows)},
    };
}

// --- invariants -----------------------------------------------------------

std::vector<std::string> Session::check_invariants() const
{
    std::vector<std::string> problems;
    const auto fail = [&](std::string what) { problems.push_back(std::move(what)); };
    const RoleTable role_table = roles();

    if (primary_ && secondaries_.count(*primary_)) {
        fail("primary is also a secondary");
    }
    if (pickup_ && !secondaries_.count(*pickup_)) {
        fail("pickup is not a secondary");
    }
    const EntityId hub_scaler = prop(PropKind::MapHub).scaler;
    const EntityId shovel_scaler = prop(PropKind::PickupShovel).scaler;
    for (const auto& [id, s] : secondaries_) {
        if (!tree_.contains(s.avatar)) {
            fail("avatar of client " + std::to_string(id.value) + " missing");
            continue;
        }
        const Entity& avatar = tree_.at(s.avatar);
        const bool held = pickup_ && *pickup_ == id;
        const EntityId expected = held ? shovel_scaler : hub_scaler;
        if (avatar.parent != expected) {
            fail("avatar " + std::to_string(s.avatar.value) + " has the wrong parent");
        }
        if (avatar.owner != id) {
            fail("avatar " + std::to_string(s.avatar.value) + " not owned by its secondary");
        }
        if (held && camera_mode_ == CameraMode::FollowSecondary && norm(avatar.local.position) >= 1e-6) {
            fail("held avatar is off the shovel origin in follow mode");
        }
        if (!held && avatar.local != s.city_pose) {
            fail("map-hub avatar does not match its city pose");
        }
    }
    if (env_root_) {
        const bool visible = tree_.at(*env_root_).visible;
        if (visible != pickup_.has_value()) {
            fail("environment visibility does not match pickup state");
        }
    }
    std::map<std::string, int> per_tangible;
    for (const auto& [id, o] : oois_) {
        if (!tree_.contains(id)) {
            fail("ooi " + std::to_string(id.value) + " missing from the tree");
            continue;
        }
        const Entity& e = tree_.at(id);
        switch (o.attachment) {
        case AttachmentKind::Tangible: {
            const auto* t = find_marker(o.marker_id);
            if (!t || t->prop != PropKind::Tangible || e.parent != t->scaler) {
                fail("tangible ooi " + std::to_string(id.value) + " is not under its tangible scaler");
            }
            ++per_tangible[o.marker_id];
            break;
        }
        case AttachmentKind::LockedInEnvironment:
        case AttachmentKind::StaticScene:
            if (e.parent != env_root_) {
                fail("ooi " + std::to_string(id.value) + " is not under the environment root");
            }
            break;
        }
        if (!world_.find_entry(o.catalog_id)) {
            fail("ooi " + std::to_string(id.value) + " has an unknown catalog id");
        }
        if (o.highlighted != (arrows_.count(id) != 0)) {
            fail("arrow state of ooi " + std::to_string(id.value) + " disagrees with its highlight");
        }
    }
    for (const auto& [marker_id, n] : per_tangible) {
        if (n > 1) {
            fail("tangible " + marker_id + " carries more than one OOI");
        }
    }
    for (const auto& [ooi, clients] : arrows_) {
        for (const auto c : clients) {
            if (!secondaries_.count(c)) {
                fail("arrow for departed client " + std::to_string(c.value));
            }
        }
    }
    for (const auto& [id, e] : tree_.entities()) {
        if (e.owner != kServer && !role_table.count(e.owner)) {
            fail("entity " + std::to_string(id.value) + " owned by an absent client");
        }
        if (std::abs(e.local.rotation.norm() - 1.0) > 1e-9) {
            fail("entity " + std::to_string(id.value) + " has a non-unit rotation");
        }
        if (!is_finite(e.local) || !has_positive_scale(e.local)) {
            fail("entity " + std::to_string(id.value) + " has a degenerate pose");
        }
        if (e.id.value >= next_entity_) {
            fail("entity id beyond the allocation counter");
        }
    }
    if (!(env_scale_ >= config_.env_scale_min && env_scale_ <= config_.env_scale_max)) {
        fail("env_scale out of range");
    }
    return problems;
}

} // namespace cotour
