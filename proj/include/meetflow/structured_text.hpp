#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace meetflow {

using Json = nlohmann::json;

// Returns the first balanced `{...}` or `[...]` span in `text` that parses as
// JSON. Surrounding prose and code fences are skipped; spans that do not parse
// (e.g. "[No prose]") are passed over.
std::optional<Json> extract_first_json(std::string_view text);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool contains_icase(std::string_view haystack, std::string_view needle);

// "Bluetooth 5.0" -> "bluetooth-5-0"
std::string slugify(std::string_view name);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// Canonical single-line serialization used for hashing, logs and byte-compare tests.
std::string canonical_dump(const Json& value);

}  // namespace meetflow
