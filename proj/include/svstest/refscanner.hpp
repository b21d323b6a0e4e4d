#pragma once

#include "svstest/identifiers/cpe.hpp"
#include "svstest/sbom.hpp"
#include "svstest/vulndb.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace svstest::refscanner {

class UnknownProfile : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

struct ScanConfig
{
    bool use_cpe = true;
    bool use_purl = true;
    vulndb::VersionlessPolicy versionless_purl_policy = vulndb::VersionlessPolicy::Wildcard;
    identifiers::NaVersionPolicy na_version_policy = identifiers::NaVersionPolicy::TreatNaVersionAsUnknown;
    /// Build `cpe:2.3:a:<publisher>:<name>:<version>` for components without identifiers.
    bool reconstruct_cpe_if_none = true;
    /// Take versions from the CycloneDX `version` field only; components without it are skipped.
    bool require_version_field = false;
    bool process_vex = true;
    bool reject_invalid_root = true;
    bool reject_root_order = true;

    /// Throws std::invalid_argument when neither identifier family is enabled.
    void validate() const;
};

struct Profile
{
    std::string name;
    std::string description;
    ScanConfig config;
};

/// IDEAL, PURL_ONLY, VERSION_FIELD_DEPENDENT, NO_VEX, LENIENT.
const std::vector<Profile>& profiles();
const Profile& find_profile(std::string_view name);

enum class MatchedVia { Cpe, Purl };

std::string_view to_string(MatchedVia via);

struct Finding
{
    std::string vuln_id;
    std::string component_ref;
    std::string component_name;
    MatchedVia matched_via = MatchedVia::Purl;
    bool suppressed_by_vex = false;

    bool operator==(const Finding&) const = default;
};

struct ScanWarning
{
    std::string code;
    std::optional<std::string> component_ref;
    std::string message;

    bool operator==(const ScanWarning&) const = default;
};

struct ScanStats
{
    std::size_t components_total = 0;
    std::size_t components_tested = 0;
    std::size_t components_skipped = 0;

    bool operator==(const ScanStats&) const = default;
};

struct ScanReport
{
    std::vector<Finding> findings;   ///< active, sorted by (vuln_id, component_ref)
    std::vector<Finding> suppressed; ///< silenced by VEX, same order
    std::vector<ScanWarning> warnings;
    ScanStats stats;
    std::optional<std::string> rejected;

    bool operator==(const ScanReport&) const = default;
};

ScanReport scan(const sbom::Bom& bom, const vulndb::Snapshot& snapshot, const ScanConfig& config);

/// Deterministic JSON with keys findings, suppressed, warnings, stats, rejected.
std::string serialize_report(const ScanReport& report);
/// Inverse of serialize_report. Throws std::invalid_argument on other input.
ScanReport parse_report(std::string_view json_text);

/// Human-readable rendering; every warning line starts with `WARN:`.
std::string render_report_text(const ScanReport& report);
/// Only the `WARN:` lines of render_report_text.
std::string render_warning_lines(const ScanReport& report);

} // namespace svstest::refscanner
