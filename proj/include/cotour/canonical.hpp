#pragma once

#include "cotour/json_io.hpp"

#include <string>

namespace cotour {

/// Canonical text of a snapshot: sorted keys, no whitespace, floats printed
/// with 9 significant digits, negative zero printed as 0.
std::string canonical_dump(const json& j);

/// Lowercase hex SHA-256 of canonical_dump(j).
std::string canonical_hash(const json& j);

std::string sha256_hex(std::string_view bytes);

} // namespace cotour
