#include "svstest/refscanner.hpp"
#include "svstest/testlib.hpp"

#include "expected_findings.hpp"
#include "fixture_ops.hpp"

#include <doctest.h>

#include <random>

using namespace svstest;
using namespace svstest::refscanner;
using svstest::testsupport::finding_keys;

namespace {

const std::vector<std::string> kProfileNames{"IDEAL", "PURL_ONLY", "VERSION_FIELD_DEPENDENT", "NO_VEX", "LENIENT"};

ScanReport scan_bytes(const std::string& bytes, const std::string& profile)
{
    return scan(sbom::parse_bom(bytes), vulndb::seed_snapshot(), find_profile(profile).config);
}

ScanReport scan_case(const std::string& id, const std::string& profile)
{
    return scan_bytes(testlib::find_case(id).bom_bytes, profile);
}

const std::string kTwoComponents = R"({"bomFormat": "CycloneDX", "specVersion": "1.6", "version": 1, "components": [
    {"type": "library", "bom-ref": "a", "name": "dicer", "cpe": "not-a-cpe", "purl": "pkg:npm/dicer@0.3.0"},
    {"type": "library", "bom-ref": "b", "name": "mystery"}
]})";

} // namespace

TEST_CASE("profile registry")
{
    REQUIRE(profiles().size() == kProfileNames.size());
    for (std::size_t i = 0; i < kProfileNames.size(); ++i)
        CHECK(profiles()[i].name == kProfileNames[i]);
    CHECK_THROWS_AS(find_profile("FAST"), UnknownProfile);

    const auto& ideal = find_profile("IDEAL").config;
    CHECK(ideal.use_cpe);
    CHECK(ideal.use_purl);
    CHECK(ideal.process_vex);
    CHECK(ideal.reject_root_order);
    CHECK(ideal.reject_invalid_root);
    CHECK_FALSE(find_profile("PURL_ONLY").config.use_cpe);
    CHECK(find_profile("VERSION_FIELD_DEPENDENT").config.require_version_field);
    CHECK_FALSE(find_profile("NO_VEX").config.process_vex);
    CHECK_FALSE(find_profile("LENIENT").config.reject_root_order);

    ScanConfig neither;
    neither.use_cpe = false;
    neither.use_purl = false;
    CHECK_THROWS_AS(neither.validate(), std::invalid_argument);
}

TEST_CASE("findings on every fixture match the hand-derived table")
{
    for (const auto& profile : kProfileNames) {
        const auto expected = testsupport::expected_findings(profile);
        REQUIRE(expected.size() == testlib::build_library().size());
        for (const auto& c : testlib::build_library()) {
            CAPTURE(profile);
            CAPTURE(c.id);
            CHECK(finding_keys(scan_bytes(c.bom_bytes, profile).findings) == expected.at(c.id));
        }
    }
}

TEST_CASE("VEX suppression and rejection")
{
    const auto vex = scan_case("0vo0efli", "IDEAL");
    CHECK(vex.findings.empty());
    REQUIRE(vex.suppressed.size() == 1);
    CHECK(vex.suppressed[0].vuln_id == "CVE-2024-45772");
    CHECK(vex.suppressed[0].suppressed_by_vex);

    const auto ignored = scan_case("0vo0efli", "NO_VEX");
    CHECK(ignored.suppressed.empty());
    CHECK(std::any_of(ignored.warnings.begin(), ignored.warnings.end(), [](const ScanWarning& w) {
        return w.code == "VEX_IGNORED" && w.component_ref == "maven-lucene-replicator";
    }));

    const auto confirmed = scan_case("qbqy99do", "IDEAL");
    CHECK(confirmed.suppressed.empty());

    for (const auto* id : {"omwcmwv1", "3fvslnon"}) {
        CAPTURE(id);
        const auto r = scan_case(id, "IDEAL");
        REQUIRE(r.rejected);
        CHECK(r.stats.components_skipped == r.stats.components_total);
        CHECK_FALSE(scan_case(id, "LENIENT").rejected);
    }
}

TEST_CASE("CPE and purl findings are merged per component, preferring purl provenance")
{
    const auto r = scan_case("qbqy99do", "IDEAL");
    REQUIRE(r.findings.size() == 1);
    CHECK(r.findings[0].matched_via == MatchedVia::Purl);
    const auto cpe_only = scan_case("an7esfjj", "IDEAL");
    REQUIRE(cpe_only.findings.size() == 1);
    CHECK(cpe_only.findings[0].matched_via == MatchedVia::Cpe);
}

TEST_CASE("components without identifiers get a reconstructed CPE")
{
    const auto r = scan_case("sqs4tbob", "IDEAL");
    CHECK(r.stats.components_tested == 2);
    REQUIRE(r.findings.size() == 1);
    CHECK(r.findings[0].matched_via == MatchedVia::Cpe);

    auto no_reconstruct = find_profile("IDEAL").config;
    no_reconstruct.reconstruct_cpe_if_none = false;
    const auto skipped = scan(sbom::parse_bom(testlib::find_case("sqs4tbob").bom_bytes), vulndb::seed_snapshot(),
                              no_reconstruct);
    CHECK(skipped.findings.empty());
    CHECK(skipped.stats.components_skipped == 2);
}

TEST_CASE("invalid identifiers are reported, unusable components are skipped with a warning")
{
    const auto r = scan_bytes(kTwoComponents, "IDEAL");
    CHECK(r.stats.components_total == 2);
    CHECK(r.stats.components_tested == 1);
    CHECK(r.stats.components_skipped == 1);
    CHECK(finding_keys(r.findings) == std::set<testsupport::FindingKey>{{"CVE-2022-24434", "a"}});
    CHECK(std::any_of(r.warnings.begin(), r.warnings.end(),
                      [](const ScanWarning& w) { return w.code == "INVALID_CPE" && w.component_ref == "a"; }));
    CHECK(std::any_of(r.warnings.begin(), r.warnings.end(),
                      [](const ScanWarning& w) { return w.code == "NO_IDENTIFIER" && w.component_ref == "b"; }));
}

TEST_CASE("no component is skipped without a warning naming it")
{
    std::vector<std::string> documents;
    for (const auto& c : testlib::build_library())
        documents.push_back(c.bom_bytes);
    documents.push_back(kTwoComponents);

    for (const auto& profile : kProfileNames) {
        for (const auto& doc : documents) {
            const auto bom = sbom::parse_bom(doc);
            const auto r = scan(bom, vulndb::seed_snapshot(), find_profile(profile).config);
            CAPTURE(profile);
            CHECK(r.stats.components_total == bom.components.size());
            CHECK(r.stats.components_tested + r.stats.components_skipped == r.stats.components_total);

            std::set<std::string> warned;
            for (const auto& w : r.warnings) {
                if (w.component_ref && w.message.find(*w.component_ref) != std::string::npos)
                    warned.insert(*w.component_ref);
            }
            CHECK(warned.size() >= r.stats.components_skipped);
            for (const auto& c : bom.components) {
                // components that cannot be tested under this profile must all be named
                const bool untestable = r.rejected || (profile == "VERSION_FIELD_DEPENDENT" && !c.version_field)
                                        || (!c.purl && !c.cpe && profile == "PURL_ONLY");
                if (untestable)
                    CHECK(warned.contains(c.reference()));
            }
        }
    }
}

TEST_CASE("identifier key order never changes findings")
{
    std::mt19937 rng(7321);
    for (int round = 0; round < 4; ++round) {
        for (const auto& c : testlib::build_library()) {
            const auto permuted = testsupport::permute_component_keys(c.bom_bytes, rng);
            for (const auto& profile : kProfileNames) {
                CAPTURE(c.id);
                CAPTURE(profile);
                CHECK(finding_keys(scan_bytes(permuted, profile).findings)
                      == finding_keys(scan_bytes(c.bom_bytes, profile).findings));
            }
        }
    }
}

TEST_CASE("profiles only remove behaviour relative to IDEAL")
{
    for (const auto& c : testlib::build_library()) {
        CAPTURE(c.id);
        const auto ideal = finding_keys(scan_bytes(c.bom_bytes, "IDEAL").findings);
        for (const auto* weaker : {"PURL_ONLY", "VERSION_FIELD_DEPENDENT"}) {
            const auto fewer = finding_keys(scan_bytes(c.bom_bytes, weaker).findings);
            CHECK(std::includes(ideal.begin(), ideal.end(), fewer.begin(), fewer.end()));
        }
        for (const auto* looser : {"NO_VEX", "LENIENT"}) {
            const auto more = finding_keys(scan_bytes(c.bom_bytes, looser).findings);
            CHECK(std::includes(more.begin(), more.end(), ideal.begin(), ideal.end()));
        }
    }
}

TEST_CASE("report serialization is deterministic and reversible")
{
    for (const auto& c : testlib::build_library()) {
        for (const auto& profile : kProfileNames) {
            const auto r = scan_bytes(c.bom_bytes, profile);
            const auto text = serialize_report(r);
            CHECK(text == serialize_report(scan_bytes(c.bom_bytes, profile)));
            CHECK(parse_report(text) == r);
        }
    }
    CHECK_THROWS_AS(parse_report("not json"), std::invalid_argument);
    CHECK_THROWS_AS(parse_report(R"({"bomFormat": "CycloneDX"})"), std::invalid_argument);
}

TEST_CASE("text rendering prefixes every warning line")
{
    const auto r = scan_case("an7esfjj", "PURL_ONLY");
    REQUIRE_FALSE(r.warnings.empty());
    const auto lines = render_warning_lines(r);
    std::size_t count = 0;
    for (std::size_t pos = 0; pos < lines.size(); pos = lines.find('\n', pos) + 1) {
        CHECK(lines.compare(pos, 5, "WARN:") == 0);
        ++count;
    }
    CHECK(count == r.warnings.size());
    CHECK(render_report_text(r).find("SUMMARY: 0 tested, 1 skipped, 1 total") != std::string::npos);
}
