#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace svstest::sbom {

class SbomError : public std::runtime_error
{
public:
    enum class Kind { NotJson, NotCycloneDx };

    SbomError(Kind kind, const std::string& what)
        : std::runtime_error(what)
        , kind_(kind)
    {
    }

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

enum class IssueCode { RootOrder, UnknownRootKey, Schema };

std::string_view to_string(IssueCode code);

struct ValidationIssue
{
    IssueCode code;
    std::string detail;
    std::string location; ///< JSON pointer or root key name, never empty

    bool operator==(const ValidationIssue&) const = default;
};

/// Ordinal positions of the `cpe` and `purl` keys inside a component object.
struct IdentifierKeyOrder
{
    std::optional<std::size_t> cpe;
    std::optional<std::size_t> purl;

    bool operator==(const IdentifierKeyOrder&) const = default;
};

struct Component
{
    std::size_t index = 0; ///< 1-based position in the flattened component list
    std::optional<std::string> bom_ref;
    std::string type;
    std::optional<std::string> publisher;
    std::string name;
    std::optional<std::string> version_field;
    std::optional<std::string> cpe;
    std::optional<std::string> purl;
    IdentifierKeyOrder raw_order;

    /// bom-ref when present, `#<index>` otherwise.
    std::string reference() const;

    bool operator==(const Component&) const = default;
};

enum class VersionStatus { Affected, Unaffected, Unknown };

struct AffectedVersion
{
    std::string version;
    VersionStatus status = VersionStatus::Unknown;

    bool operator==(const AffectedVersion&) const = default;
};

struct VexAffects
{
    std::string ref;
    std::vector<AffectedVersion> versions;

    bool operator==(const VexAffects&) const = default;
};

struct VexStatement
{
    std::string vuln_id;
    std::optional<std::string> source_name;
    std::optional<std::string> analysis_state;
    std::vector<VexAffects> affects;

    bool operator==(const VexStatement&) const = default;
};

struct DependencyEdge
{
    std::string ref;
    std::vector<std::string> depends_on;

    bool operator==(const DependencyEdge&) const = default;
};

struct Metadata
{
    std::optional<std::string> timestamp;
    std::optional<std::string> component_name;

    bool operator==(const Metadata&) const = default;
};

struct Bom
{
    std::string spec_version;
    std::optional<std::string> serial_number;
    std::optional<Metadata> metadata;
    std::vector<Component> components; ///< nested components flattened depth-first
    std::vector<DependencyEdge> dependencies;
    std::vector<VexStatement> vulnerabilities;
    std::vector<ValidationIssue> validation_issues;
    std::vector<std::string> root_keys; ///< in document order

    bool has_issue(IssueCode code) const;
    const Component* find_by_ref(std::string_view bom_ref) const;

    bool operator==(const Bom&) const = default;
};

/// Normative root-element order of a CycloneDX 1.6 JSON document.
const std::vector<std::string_view>& cyclonedx_root_order();

/// Lenient parse: structural problems become validation issues, not errors.
/// Throws SbomError for undecodable input or a missing `bomFormat: "CycloneDX"`.
Bom parse_bom(std::string_view raw);

/// version field, else the purl version, else a wildcard-free literal CPE version.
std::optional<std::string> effective_version(const Component& component);

enum class VexDisposition { Suppressed, Confirmed };

struct DanglingVexRef
{
    std::string vuln_id;
    std::string ref;

    bool operator==(const DanglingVexRef&) const = default;
};

struct VexIndex
{
    /// (component reference, vulnerability id) -> disposition
    std::map<std::pair<std::string, std::string>, VexDisposition> dispositions;
    std::vector<DanglingVexRef> dangling;
};

/// Resolves embedded VEX statements against the BOM's components. A
/// confirming statement wins over a suppressing one for the same pair.
VexIndex vex_suppressions(const Bom& bom);

} // namespace svstest::sbom
