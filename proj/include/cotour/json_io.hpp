#pragma once

#include "cotour/frame_tree.hpp"
#include "cotour/math.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace cotour {

using json = nlohmann::json;

/// Structural error in a JSON document; `where()` is a JSON-pointer-like path
/// (or "line L, column C" for syntax errors).
class DocumentError : public std::runtime_error {
public:
    DocumentError(std::string where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(std::move(where))
    {
    }
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

/// Parses text, turning syntax errors into DocumentError with line/column.
json parse_document(std::string_view text);
json read_document_file(const std::string& path);

std::string child_path(const std::string& path, std::string_view key);
std::string child_path(const std::string& path, std::size_t index);

const json& require(const json& obj, std::string_view key, const std::string& path);
double require_number(const json& obj, std::string_view key, const std::string& path);
std::string require_string(const json& obj, std::string_view key, const std::string& path);
bool require_bool(const json& obj, std::string_view key, const std::string& path);
std::uint64_t require_uint(const json& obj, std::string_view key, const std::string& path);

double as_number(const json& j, const std::string& path);
Vec3 vec3_from_json(const json& j, const std::string& path);
/// Rotation as [w, x, y, z]; must be within 1e-6 of unit norm.
Quat quat_from_json(const json& j, const std::string& path);
/// Pose object; "rotation" and "scale" may be omitted (identity / ones).
Pose pose_from_json(const json& j, const std::string& path);

json to_json(const Vec3& v);
json to_json(const Quat& q);
json to_json(const Pose& p);

} // namespace cotour
