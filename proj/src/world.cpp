#include "cotour/world.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace cotour {

namespace {

constexpr std::array<std::pair<InteractionKind, std::string_view>, 6> kInteractionNames{{
    {InteractionKind::Text, "text"},
    {InteractionKind::Video, "video"},
    {InteractionKind::Scale, "scale"},
    {InteractionKind::Highlight, "highlight"},
    {InteractionKind::Change, "change"},
    {InteractionKind::Lock, "lock"},
}};

std::optional<std::string> optional_string(const json& obj, std::string_view key, const std::string& path)
{
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw DocumentError(child_path(path, key), "expected a string");
    }
    return it->get<std::string>();
}

std::string entry_label(const std::string& path, const std::string& id) { return path + " (\"" + id + "\")"; }

CatalogEntry load_entry(const json& j, const std::string& path)
{
    CatalogEntry e;
    e.catalog_id = require_string(j, "catalog_id", path);
    if (e.catalog_id.empty()) {
        throw DocumentError(child_path(path, "catalog_id"), "must not be empty");
    }
    const std::string label = entry_label(path, e.catalog_id);
    e.display_name = j.contains("display_name") ? require_string(j, "display_name", path) : e.catalog_id;

    const json& enabled = require(j, "enabled_interactions", path);
    if (!enabled.is_array()) {
        throw DocumentError(child_path(path, "enabled_interactions"), "expected an array");
    }
    for (std::size_t i = 0; i < enabled.size(); ++i) {
        const std::string ipath = child_path(child_path(path, "enabled_interactions"), i);
        if (!enabled[i].is_string()) {
            throw DocumentError(ipath, "expected an interaction name");
        }
        const auto kind = interaction_kind_from_string(enabled[i].get<std::string>());
        if (!kind) {
            throw DocumentError(ipath, "unknown interaction \"" + enabled[i].get<std::string>() + "\"");
        }
        if (std::find(e.enabled_interactions.begin(), e.enabled_interactions.end(), *kind) !=
            e.enabled_interactions.end()) {
            throw DocumentError(ipath, "duplicate interaction");
        }
        e.enabled_interactions.push_back(*kind);
    }

    e.text_content = optional_string(j, "text_content", path);
    e.video_ref = optional_string(j, "video_ref", path);
    if (e.enables(InteractionKind::Text) && !e.text_content) {
        throw DocumentError(label, "Text enabled without text_content");
    }
    if (e.enables(InteractionKind::Video) && !e.video_ref) {
        throw DocumentError(label, "Video enabled without video_ref");
    }

    if (const auto it = j.find("change_targets"); it != j.end()) {
        if (!it->is_array()) {
            throw DocumentError(child_path(path, "change_targets"), "expected an array");
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            if (!(*it)[i].is_string()) {
                throw DocumentError(child_path(child_path(path, "change_targets"), i), "expected a catalog id");
            }
            e.change_targets.push_back((*it)[i].get<std::string>());
        }
    }
    if (const auto it = j.find("placements"); it != j.end()) {
        if (!it->is_array()) {
            throw DocumentError(child_path(path, "placements"), "expected an array");
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            e.placements.push_back(pose_from_json((*it)[i], child_path(child_path(path, "placements"), i)));
        }
    }
    if (j.contains("spawnable")) {
        e.spawnable = require_bool(j, "spawnable", path);
    }
    return e;
}

json save_entry(const CatalogEntry& e)
{
    json j{{"catalog_id", e.catalog_id}, {"display_name", e.display_name}, {"spawnable", e.spawnable}};
    json enabled = json::array();
    for (const auto k : e.enabled_interactions) {
        enabled.push_back(std::string(to_string(k)));
    }
    j["enabled_interactions"] = std::move(enabled);
    if (e.text_content) {
        j["text_content"] = *e.text_content;
    }
    if (e.video_ref) {
        j["video_ref"] = *e.video_ref;
    }
    j["change_targets"] = e.change_targets;
    json placements = json::array();
    for (const auto& p : e.placements) {
        placements.push_back(to_json(p));
    }
    j["placements"] = std::move(placements);
    return j;
}

} // namespace

std::string_view to_string(InteractionKind kind)
{
    for (const auto& [k, name] : kInteractionNames) {
        if (k == kind) {
            return name;
        }
    }
    return "unknown";
}

std::optional<InteractionKind> interaction_kind_from_string(std::string_view s)
{
    for (const auto& [k, name] : kInteractionNames) {
        if (name == s) {
            return k;
        }
    }
    return std::nullopt;
}

bool CatalogEntry::enables(InteractionKind kind) const
{
    return std::find(enabled_interactions.begin(), enabled_interactions.end(), kind) != enabled_interactions.end();
}

Pose MapCalibration::scaler_pose() const
{
    return Pose{image_center_to_env_origin.position, image_center_to_env_origin.rotation, Vec3::uniform(map_scale)};
}

const CatalogEntry* World::find_entry(std::string_view catalog_id) const
{
    const auto it = std::find_if(catalog.begin(), catalog.end(),
                                 [&](const CatalogEntry& e) { return e.catalog_id == catalog_id; });
    return it == catalog.end() ? nullptr : &*it;
}

const PoiSpec* World::find_poi(std::string_view poi_id) const
{
    const auto it = std::find_if(pois.begin(), pois.end(), [&](const PoiSpec& p) { return p.poi_id == poi_id; });
    return it == pois.end() ? nullptr : &*it;
}

World load_world(const json& doc)
{
    if (!doc.is_object()) {
        throw DocumentError("/", "world document must be an object");
    }
    const json& schema = require(doc, "schema", "");
    if (!schema.is_number_integer() || schema.get<int>() != World::kSchema) {
        throw DocumentError("/schema", "unsupported schema (expected " + std::to_string(World::kSchema) + ")");
    }

    World w;
    const json& catalog = require(doc, "catalog", "");
    if (!catalog.is_array()) {
        throw DocumentError("/catalog", "expected an array");
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        const std::string path = child_path("/catalog", i);
        CatalogEntry e = load_entry(catalog[i], path);
        if (!ids.insert(e.catalog_id).second) {
            throw DocumentError(entry_label(path, e.catalog_id), "duplicate catalog_id");
        }
        w.catalog.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < w.catalog.size(); ++i) {
        for (const auto& target : w.catalog[i].change_targets) {
            if (!ids.count(target)) {
                throw DocumentError(entry_label(child_path("/catalog", i), w.catalog[i].catalog_id),
                                    "change target \"" + target + "\" is not in the catalog");
            }
        }
    }

    if (const auto it = doc.find("pois"); it != doc.end()) {
        if (!it->is_array()) {
            throw DocumentError("/pois", "expected an array");
        }
        std::set<std::string> poi_ids;
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string path = child_path("/pois", i);
            PoiSpec p;
            p.poi_id = require_string((*it)[i], "poi_id", path);
            p.name = (*it)[i].contains("name") ? require_string((*it)[i], "name", path) : p.poi_id;
            p.spawn_pose = pose_from_json(require((*it)[i], "spawn_pose", path), child_path(path, "spawn_pose"));
            if (!poi_ids.insert(p.poi_id).second) {
                throw DocumentError(entry_label(path, p.poi_id), "duplicate poi_id");
            }
            w.pois.push_back(std::move(p));
        }
    }

    if (const auto it = doc.find("calibration"); it != doc.end()) {
        const std::string path = "/calibration";
        w.calibration.image_center_to_env_origin =
            pose_from_json(require(*it, "image_center_to_env_origin", path),
                           child_path(path, "image_center_to_env_origin"));
        w.calibration.map_scale = require_number(*it, "map_scale", path);
        if (w.calibration.map_scale <= 0.0) {
            throw DocumentError("/calibration/map_scale", "map_scale must be > 0");
        }
    }

    if (const auto it = doc.find("markers"); it != doc.end()) {
        if (it->contains("map_hub")) {
            w.markers.map_hub = require_string(*it, "map_hub", "/markers");
        }
        if (it->contains("pickup_shovel")) {
            w.markers.pickup_shovel = require_string(*it, "pickup_shovel", "/markers");
        }
    }

    if (const auto it = doc.find("tangibles"); it != doc.end()) {
        if (!it->is_array()) {
            throw DocumentError("/tangibles", "expected an array");
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string path = child_path("/tangibles", i);
            TangibleSpec t;
            t.marker_id = require_string((*it)[i], "marker_id", path);
            if ((*it)[i].contains("scaler_scale")) {
                t.scaler_scale = require_number((*it)[i], "scaler_scale", path);
                if (t.scaler_scale <= 0.0) {
                    throw DocumentError(child_path(path, "scaler_scale"), "must be > 0");
                }
            }
            w.tangibles.push_back(std::move(t));
        }
    } else {
        for (int i = 1; i <= 3; ++i) {
            w.tangibles.push_back({"tangible-" + std::to_string(i), 0.001});
        }
    }

    std::set<std::string> markers{w.markers.map_hub, w.markers.pickup_shovel};
    if (markers.size() != 2) {
        throw DocumentError("/markers", "marker ids must be pairwise distinct");
    }
    for (std::size_t i = 0; i < w.tangibles.size(); ++i) {
        if (!markers.insert(w.tangibles[i].marker_id).second) {
            throw DocumentError(child_path("/tangibles", i), "marker ids must be pairwise distinct");
        }
    }
    return w;
}

World load_world_file(const std::string& path) { return load_world(read_document_file(path)); }

json serialize_world(const World& world)
{
    json catalog = json::array();
    for (const auto& e : world.catalog) {
        catalog.push_back(save_entry(e));
    }
    json pois = json::array();
    for (const auto& p : world.pois) {
        pois.push_back({{"poi_id", p.poi_id}, {"name", p.name}, {"spawn_pose", to_json(p.spawn_pose)}});
    }
    json tangibles = json::array();
    for (const auto& t : world.tangibles) {
        tangibles.push_back({{"marker_id", t.marker_id}, {"scaler_scale", t.scaler_scale}});
    }
    return json{
        {"schema", World::kSchema},
        {"catalog", std::move(catalog)},
        {"pois", std::move(pois)},
        {"calibration",
         {{"image_center_to_env_origin", to_json(world.calibration.image_center_to_env_origin)},
          {"map_scale", world.calibration.map_scale}}},
        {"markers", {{"map_hub", world.markers.map_hub}, {"pickup_shovel", world.markers.pickup_shovel}}},
        {"tangibles", std::move(tangibles)},
    };
}

Vec3 map_hub_position(const MapCalibration& calibration, const Vec3& env_position)
{
    return compose(calibration.scaler_pose(), Pose::at(env_position)).position;
}

} // namespace cotour
