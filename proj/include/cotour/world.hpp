#pragma once

#include "cotour/json_io.hpp"
#include "cotour/math.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cotour {

/// Interactions an OOI can have enabled, in the order the menu shows them.
enum class InteractionKind { Text, Video, Scale, Highlight, Change, Lock };

std::string_view to_string(InteractionKind kind);
std::optional<InteractionKind> interaction_kind_from_string(std::string_view s);

struct CatalogEntry {
    std::string catalog_id;
    std::string display_name;
    std::vector<InteractionKind> enabled_interactions;
    std::optional<std::string> text_content;
    std::optional<std::string> video_ref;
    std::vector<std::string> change_targets;
    /// City-frame poses of static scene instances (buildings already in the city).
    std::vector<Pose> placements;
    /// Whether the tangible dropdown offers this entry.
    bool spawnable = true;

    bool enables(InteractionKind kind) const;
    friend bool operator==(const CatalogEntry&, const CatalogEntry&) = default;
};

struct PoiSpec {
    std::string poi_id;
    std::string name;
    Pose spawn_pose;
    friend bool operator==(const PoiSpec&, const PoiSpec&) = default;
};

/// Offset from the Map-Hub image center to the city origin, plus the
/// city-to-map scale (map meters per city meter).
struct MapCalibration {
    Pose image_center_to_env_origin;
    double map_scale = 1.0;

    /// Local pose for the Map-Hub Scaler.
    Pose scaler_pose() const;
    friend bool operator==(const MapCalibration&, const MapCalibration&) = default;
};

struct TangibleSpec {
    std::string marker_id;
    /// Uniform scale of the tangible's Scaler (physical meters per city meter).
    double scaler_scale = 0.001;
    friend bool operator==(const TangibleSpec&, const TangibleSpec&) = default;
};

struct MarkerIds {
    std::string map_hub = "map-hub";
    std::string pickup_shovel = "pickup-shovel";
    friend bool operator==(const MarkerIds&, const MarkerIds&) = default;
};

struct World {
    static constexpr int kSchema = 1;

    std::vector<CatalogEntry> catalog;
    std::vector<PoiSpec> pois;
    MapCalibration calibration;
    std::vector<TangibleSpec> tangibles;
    MarkerIds markers;

    const CatalogEntry* find_entry(std::string_view catalog_id) const;
    const PoiSpec* find_poi(std::string_view poi_id) const;
    friend bool operator==(const World&, const World&) = default;
};

/// Validates and loads a world document. Errors name the offending entry/field.
World load_world(const json& doc);
World load_world_file(const std::string& path);
json serialize_world(const World& world);

/// Position of a city-frame point on the Map-Hub, relative to the map image center.
Vec3 map_hub_position(const MapCalibration& calibration, const Vec3& env_position);

} // namespace cotour
