#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace zara {

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of the canonical (sorted-key, compact) JSON serialization, so the
/// digest does not depend on the order keys were inserted.
std::string json_digest(const nlohmann::json& value);

}  // namespace zara
