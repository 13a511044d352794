#include "cotour/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cotour {

namespace {

std::string line_column(std::string_view text, std::size_t byte)
{
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

std::string with_path(const std::string& path) { return path.empty() ? "/" : path; }

} // namespace

json parse_document(std::string_view text)
{
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // e.byte is 1-based and points just past the offending character.
        const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
        std::string what = e.what();
        const auto pos = what.find("; ");
        if (pos != std::string::npos) {
            what = what.substr(pos + 2);
        }
        throw DocumentError(line_column(text, byte), what);
    }
}

json read_document_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DocumentError(path, "cannot open file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_document(ss.str());
    } catch (const DocumentError& e) {
        throw DocumentError(path + ": " + e.where(), std::string(e.what()).substr(e.where().size() + 2));
    }
}

std::string child_path(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }

std::string child_path(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

const json& require(const json& obj, std::string_view key, const std::string& path)
{
    if (!obj.is_object()) {
        throw DocumentError(with_path(path), "expected an object");
    }
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw DocumentError(child_path(path, key), "missing required field");
    }
    return *it;
}

double as_number(const json& j, const std::string& path)
{
    if (!j.is_number()) {
        throw DocumentError(with_path(path), "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw DocumentError(with_path(path), "number is not finite");
    }
    return v;
}

double require_number(const json& obj, std::string_view key, const std::string& path)
{
    return as_number(require(obj, key, path), child_path(path, key));
}

std::string require_string(const json& obj, std::string_view key, const std::string& path)
{
    const json& v = require(obj, key, path);
    if (!v.is_string()) {
        throw DocumentError(child_path(path, key), "expected a string");
    }
    return v.get<std::string>();
}

bool require_bool(const json& obj, std::string_view key, const std::string& path)
{
    const json& v = require(obj, key, path);
    if (!v.is_boolean()) {
        throw DocumentError(child_path(path, key), "expected a boolean");
    }
    return v.get<bool>();
}

std::uint64_t require_uint(const json& obj, std::string_view key, const std::string& path)
{
    const json& v = require(obj, key, path);
    if (!v.is_number_unsigned()) {
        throw DocumentError(child_path(path, key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

Vec3 vec3_from_json(const json& j, const std::string& path)
{
    if (!j.is_array() || j.size() != 3) {
        throw DocumentError(with_path(path), "expected an array of 3 numbers");
    }
    return {as_number(j[0], child_path(path, 0)), as_number(j[1], child_path(path, 1)),
            as_number(j[2], child_path(path, 2))};
}

Quat quat_from_json(const json& j, const std::string& path)
{
    if (!j.is_array() || j.size() != 4) {
        throw DocumentError(with_path(path), "expected [w, x, y, z]");
    }
    const Quat q{as_number(j[0], child_path(path, 0)), as_number(j[1], child_path(path, 1)),
                 as_number(j[2], child_path(path, 2)), as_number(j[3], child_path(path, 3))};
    if (std::abs(q.norm() - 1.0) > 1e-6) {
        throw DocumentError(with_path(path), "rotation is not a unit quaternion");
    }
    return q;
}

Pose pose_from_json(const json& j, const std::string& path)
{
    if (!j.is_object()) {
        throw DocumentError(with_path(path), "expected a pose object");
    }
    Pose p;
    p.position = vec3_from_json(require(j, "position", path), child_path(path, "position"));
    if (const auto it = j.find("rotation"); it != j.end()) {
        p.rotation = quat_from_json(*it, child_path(path, "rotation"));
    }
    if (const auto it = j.find("scale"); it != j.end()) {
        p.scale = vec3_from_json(*it, child_path(path, "scale"));
        if (!has_positive_scale(p)) {
            throw DocumentError(child_path(path, "scale"), "scale components must be > 0");
        }
    }
    return p;
}

namespace {

json numbers(std::initializer_list<double> values)
{
    json a(json::value_t::array);
    auto& arr = a.get_ref<json::array_t&>();
    arr.reserve(values.size());
    for (const double v : values) {
        arr.emplace_back(v);
    }
    return a;
}

} // namespace

json to_json(const Vec3& v) { return numbers({v.x, v.y, v.z}); }

json to_json(const Quat& q) { return numbers({q.w, q.x, q.y, q.z}); }

json to_json(const Pose& p)
{
    json j(json::value_t::object);
    j["position"] = to_json(p.position);
    j["rotation"] = to_json(p.rotation);
    j["scale"] = to_json(p.scale);
    return j;
}

} // namespace cotour
