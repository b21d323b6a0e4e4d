#include "svstest/vulndb.hpp"

namespace svstest::vulndb {

// Vendor tokens are repo-chosen and must stay in sync with the CPEs used by
// the test-case library (testlib.cpp).
const Snapshot& seed_snapshot()
{
    static const Snapshot snapshot = [] {
        using identifiers::parse_cpe;
        using identifiers::parse_purl;

        VulnRecord dicer;
        dicer.id = "CVE-2022-24434";
        dicer.aliases = {"GHSA-wm7h-9275-46v2"};
        dicer.summary = "Crash in HeaderParser in dicer";
        dicer.cpe_criteria.push_back(
            {parse_cpe("cpe:2.3:a:dicer_project:dicer:*:*:*:*:*:*:*:*"), VersionRange{"0", std::nullopt, std::nullopt}});
        dicer.purl_criteria.push_back({parse_purl("pkg:npm/dicer"), {VersionRange{"0", std::nullopt, std::nullopt}}, std::nullopt});

        VulnRecord lucene;
        lucene.id = "CVE-2024-45772";
        lucene.summary = "Deserialization of untrusted data in Apache Lucene Replicator";
        const VersionRange affected{"6.0.0", "9.12.0", std::nullopt};
        lucene.cpe_criteria.push_back({parse_cpe("cpe:2.3:a:apache:lucene-replicator:*:*:*:*:*:*:*:*"), affected});
        lucene.purl_criteria.push_back({parse_purl("pkg:maven/org.apache.lucene/lucene-replicator"), {affected}, std::nullopt});

        return Snapshot::build({dicer, lucene}, "2025-01-01T00:00:00.000Z");
    }();
    return snapshot;
}

} // namespace svstest::vulndb
