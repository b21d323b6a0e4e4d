#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace svstest::identifiers {

class MalformedPurl : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Parsed package URL. Components are held percent-decoded.
struct Purl
{
    std::string type; ///< always lowercase
    std::optional<std::string> namespace_;
    std::string name;
    std::optional<std::string> version; ///< opaque, stored verbatim
    std::map<std::string, std::string> qualifiers;
    std::optional<std::string> subpath;

    bool operator==(const Purl&) const = default;
};

/// Accepts `pkg:`, `pkg:/` and `pkg://` prefixes (any number of slashes after
/// the scheme is ignored).
Purl parse_purl(std::string_view input);

std::string canonicalize_purl(const Purl& purl);

/// Copy of `purl` without version, qualifiers and subpath.
Purl coordinates_of(const Purl& purl);

/// Type, namespace and name equality; namespace and name compare
/// case-insensitively. Versions, qualifiers and subpaths are ignored.
bool purl_coordinates_match(const Purl& component, const Purl& criterion);

} // namespace svstest::identifiers
