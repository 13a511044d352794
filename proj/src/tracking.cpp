#include "cotour/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cotour {

double TrackingScript::duration() const
{
    double d = declared_duration;
    for (const auto& [id, wps] : markers) {
        if (!wps.empty()) {
            d = std::max(d, wps.back().t);
        }
    }
    for (const auto& o : occlusions) {
        d = std::max(d, o.start + o.duration);
    }
    return d;
}

TrackingScript load_tracking_script(const json& doc)
{
    if (!doc.is_object()) {
        throw DocumentError("/", "tracking script must be an object");
    }
    TrackingScript s;
    if (doc.contains("schema")) {
        const json& schema = doc["schema"];
        if (!schema.is_number_integer() || schema.get<int>() != TrackingScript::kSchema) {
            throw DocumentError("/schema", "unsupported schema");
        }
    }
    if (doc.contains("duration")) {
        s.declared_duration = require_number(doc, "duration", "");
        if (s.declared_duration < 0.0) {
            throw DocumentError("/duration", "must be >= 0");
        }
    }
    if (const auto it = doc.find("markers"); it != doc.end()) {
        if (!it->is_object()) {
            throw DocumentError("/markers", "expected an object keyed by marker id");
        }
        for (const auto& [marker_id, track] : it->items()) {
            const std::string path = child_path("/markers", marker_id);
            const json& wps = require(track, "waypoints", path);
            const std::string wpath = child_path(path, "waypoints");
            if (!wps.is_array()) {
                throw DocumentError(wpath, "expected an array");
            }
            std::vector<Waypoint> out;
            for (std::size_t i = 0; i < wps.size(); ++i) {
                const std::string ipath = child_path(wpath, i);
                Waypoint w;
                w.t = require_number(wps[i], "t", ipath);
                if (w.t < 0.0) {
                    throw DocumentError(child_path(ipath, "t"), "time must be >= 0");
                }
                if (!out.empty() && w.t == out.back().t) {
                    throw DocumentError(child_path(ipath, "t"), "duplicate waypoint timestamp");
                }
                if (!out.empty() && w.t < out.back().t) {
                    throw DocumentError(child_path(ipath, "t"), "waypoints must be in time order");
                }
                json pose = wps[i];
                pose.erase("t");
                w.pose = pose_from_json(pose, ipath);
                out.push_back(w);
            }
            s.markers[marker_id] = std::move(out);
        }
    }
    if (const auto it = doc.find("occlusions"); it != doc.end()) {
        if (!it->is_array()) {
            throw DocumentError("/occlusions", "expected an array");
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string path = child_path("/occlusions", i);
            Occlusion o;
            o.marker_id = require_string((*it)[i], "marker", path);
            o.start = require_number((*it)[i], "start", path);
            o.duration = require_number((*it)[i], "duration", path);
            if (o.duration <= 0.0) {
                throw DocumentError(child_path(path, "duration"), "must be > 0");
            }
            s.occlusions.push_back(o);
        }
    }
    return s;
}

TrackingScript load_tracking_script_file(const std::string& path)
{
    return load_tracking_script(read_document_file(path));
}

json serialize_tracking_script(const TrackingScript& script)
{
    json markers = json::object();
    for (const auto& [id, wps] : script.markers) {
        json list = json::array();
        for (const auto& w : wps) {
            json j = to_json(w.pose);
            j["t"] = w.t;
            list.push_back(std::move(j));
        }
        markers[id] = {{"waypoints", std::move(list)}};
    }
    json occlusions = json::array();
    for (const auto& o : script.occlusions) {
        occlusions.push_back({{"marker", o.marker_id}, {"start", o.start}, {"duration", o.duration}});
    }
    return json{{"schema", TrackingScript::kSchema},
                {"duration", script.declared_duration},
                {"markers", std::move(markers)},
                {"occlusions", std::move(occlusions)}};
}

TrackingSim::TrackingSim(TrackingScript script) : script_(std::move(script)) {}

std::optional<Pose> TrackingSim::sample(const std::string& marker_id, double t) const
{
    const auto it = script_.markers.find(marker_id);
    if (it == script_.markers.end() || it->second.empty()) {
        return std::nullopt;
    }
    for (const auto& o : script_.occlusions) {
        if (o.marker_id == marker_id && t >= o.start && t < o.start + o.duration) {
            return std::nullopt;
        }
    }
    const auto& wps = it->second;
    if (t < wps.front().t) {
        return std::nullopt;
    }
    if (t >= wps.back().t) {
        return wps.back().pose;
    }
    const auto next = std::upper_bound(wps.begin(), wps.end(), t, [](double v, const Waypoint& w) { return v < w.t; });
    const Waypoint& b = *next;
    const Waypoint& a = *(next - 1);
    const double u = (t - a.t) / (b.t - a.t);
    Pose p;
    p.position = a.pose.position + (b.pose.position - a.pose.position) * u;
    p.rotation = slerp(a.pose.rotation, b.pose.rotation, u);
    p.scale = a.pose.scale + (b.pose.scale - a.pose.scale) * u;
    return p;
}

std::vector<msg::MarkerPose> TrackingSim::step(double dt)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("step dt must be > 0");
    }
    time_ += dt;
    std::vector<msg::MarkerPose> out;
    for (const auto& [id, wps] : script_.markers) {
        if (auto p = sample(id, time_)) {
            out.push_back({id, *p});
        }
    }
    return out;
}

} // namespace cotour
