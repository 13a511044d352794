#pragma once

#include "cotour/json_io.hpp"
#include "cotour/protocol.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cotour {

struct Waypoint {
    double t = 0.0;
    Pose pose;
};

struct Occlusion {
    std::string marker_id;
    double start = 0.0;
    double duration = 0.0;
};

struct TrackingScript {
    static constexpr int kSchema = 1;

    double declared_duration = 0.0;
    /// Waypoints per marker, strictly increasing in time.
    std::map<std::string, std::vector<Waypoint>> markers;
    std::vector<Occlusion> occlusions;

    /// max(declared duration, last waypoint, last occlusion end)
    double duration() const;
};

TrackingScript load_tracking_script(const json& doc);
TrackingScript load_tracking_script_file(const std::string& path);
json serialize_tracking_script(const TrackingScript& script);

/// Deterministic marker source. Markers are lost before their first
/// waypoint and while occluded; after the last waypoint they hold still.
class TrackingSim {
public:
    explicit TrackingSim(TrackingScript script);

    double time() const { return time_; }
    /// Pose of `marker_id` at time t, or nullopt when lost.
    std::optional<Pose> sample(const std::string& marker_id, double t) const;
    /// Advances the clock by dt and returns poses for every tracked marker,
    /// ordered by marker id.
    std::vector<msg::MarkerPose> step(double dt);
    bool finished() const { return time_ >= script_.duration() - 1e-9; }
    const TrackingScript& script() const { return script_; }

private:
    TrackingScript script_;
    double time_ = 0.0;
};

} // namespace cotour
