#pragma once

#include "svstest/identifiers/cpe.hpp"
#include "svstest/identifiers/purl.hpp"

#include <compare>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace svstest::vulndb {

inline constexpr std::string_view kSnapshotSchema = "svs-test/vulndb/1";

class MalformedOsvRecord : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class MalformedSnapshot : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// House version ordering. Versions split on `.` and `-`; all-digit segments
/// compare numerically and sort above any other segment, other segments
/// compare case-insensitively. When one version is a prefix of the other, the
/// longer one is smaller if its next segment is non-numeric (`1.0.0-rc1` <
/// `1.0.0`) and larger otherwise (`1.0` < `1.0.1`).
std::weak_ordering compare_versions(std::string_view a, std::string_view b);

struct VersionRange
{
    std::string introduced = "0"; ///< "0" means unbounded below
    std::optional<std::string> fixed;
    std::optional<std::string> last_affected;

    bool contains(std::string_view version) const;

    bool operator==(const VersionRange&) const = default;
};

struct CpeCriterion
{
    identifiers::Wfn pattern;
    /// Applies when the component supplies a concrete version.
    std::optional<VersionRange> version_range;

    bool operator==(const CpeCriterion&) const = default;
};

struct PurlCriterion
{
    identifiers::Purl coordinates; ///< version-free
    std::vector<VersionRange> ranges;
    std::optional<std::vector<std::string>> explicit_versions;

    bool operator==(const PurlCriterion&) const = default;
};

struct VulnRecord
{
    std::string id;
    std::vector<std::string> aliases;
    std::string summary;
    std::vector<CpeCriterion> cpe_criteria;
    std::vector<PurlCriterion> purl_criteria;

    bool operator==(const VulnRecord&) const = default;
};

struct Snapshot
{
    std::string snapshot_id;
    std::string created_at;
    std::vector<VulnRecord> records; ///< sorted by id, canonical

    /// Canonicalizes the records (sorted, deduplicated) and computes the
    /// content digest. Throws MalformedSnapshot on duplicate ids or alias
    /// collisions.
    static Snapshot build(std::vector<VulnRecord> records, std::string created_at);

    const VulnRecord* find(std::string_view id) const;
};

std::string serialize_snapshot(const Snapshot& snapshot);
/// Parses and verifies a snapshot file; the stored id must match the content.
Snapshot load_snapshot(std::string_view json_text);
Snapshot load_snapshot_file(const std::filesystem::path& path);

/// Ground-truth snapshot matching the bundled test-case library.
const Snapshot& seed_snapshot();

enum class VersionlessPolicy { Wildcard, Skip };

struct CpeHit
{
    const VulnRecord* record;
    const CpeCriterion* criterion;
};

struct PurlHit
{
    const VulnRecord* record;
    const PurlCriterion* criterion;
};

/// At most one hit per record, ordered by record id.
std::vector<CpeHit> lookup_by_cpe(const Snapshot& snapshot, const identifiers::Wfn& component,
                                  identifiers::NaVersionPolicy policy);

std::vector<PurlHit> lookup_by_purl(const Snapshot& snapshot, const identifiers::Purl& component,
                                    VersionlessPolicy versionless_policy);

struct IngestReportEntry
{
    std::string source;
    std::string error;
};

struct OsvDocument
{
    std::string source; ///< file name or label, used in the ingest report
    std::string text;
};

/// Builds a snapshot from OSV JSON documents (one record or an array of
/// records per document). Malformed records are skipped and listed in
/// `report` when given.
Snapshot ingest_osv(const std::vector<OsvDocument>& documents, std::string created_at,
                    std::vector<IngestReportEntry>* report = nullptr);

} // namespace svstest::vulndb
