#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace svstest {

class IoFailure : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// UTC timestamp, ISO 8601 with millisecond precision (`2025-01-31T12:00:00.000Z`).
std::string utc_timestamp_now();

/// Version string of the tool itself.
std::string_view tool_version();

} // namespace svstest
