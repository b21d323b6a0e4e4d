#include "svstest/sbom.hpp"
#include "svstest/testlib.hpp"
#include "svstest/util.hpp"

#include "fixture_ops.hpp"
#include "temp_dir.hpp"

#include <doctest.h>

#include <json.hpp>

#include <map>
#include <set>

using namespace svstest;
using namespace svstest::testlib;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json doc_of(std::string_view id)
{
    return ordered_json::parse(find_case(id).bom_bytes);
}

ordered_json only_component(std::string_view id)
{
    const auto doc = doc_of(id);
    REQUIRE(doc.at("components").size() == 1);
    return doc["components"][0];
}

std::vector<std::string> keys_of(const ordered_json& object)
{
    std::vector<std::string> keys;
    for (const auto& [k, v] : object.items())
        keys.push_back(k);
    return keys;
}

// Documents equal once serialNumber is dropped.
bool same_apart_from_serial(ordered_json a, ordered_json b)
{
    a.erase("serialNumber");
    b.erase("serialNumber");
    return a == b;
}

} // namespace

TEST_CASE("library holds 16 uniquely named cases grouped into 8 scenarios")
{
    const auto& lib = build_library();
    REQUIRE(lib.size() == 16);
    std::set<std::string> ids;
    std::map<int, int> per_scenario;
    for (const auto& c : lib) {
        ids.insert(c.id);
        ++per_scenario[c.scenario];
        CHECK(c.id.size() == 8);
        CHECK_FALSE(c.title.empty());
        CHECK_FALSE(c.rationale.empty());
    }
    CHECK(ids.size() == 16);
    CHECK(per_scenario == std::map<int, int>{{1, 2}, {2, 3}, {3, 1}, {4, 4}, {5, 1}, {6, 1}, {7, 2}, {8, 2}});

    REQUIRE(scenarios().size() == 8);
    std::size_t listed = 0;
    for (const auto& s : scenarios()) {
        listed += s.case_ids.size();
        for (const auto& id : s.case_ids)
            CHECK(find_case(id).scenario == s.number);
    }
    CHECK(listed == 16);
    CHECK_THROWS_AS(find_case("zzzzzzzz"), std::out_of_range);
}

TEST_CASE("every fixture is CycloneDX 1.6 and only Scenario 8 has structural issues")
{
    for (const auto& c : build_library()) {
        CAPTURE(c.id);
        const auto bom = sbom::parse_bom(c.bom_bytes);
        CHECK(bom.spec_version == "1.6");
        REQUIRE(bom.serial_number);
        CHECK(bom.serial_number->rfind("urn:uuid:", 0) == 0);
        CHECK(bom.validation_issues.empty() == (c.scenario != 8));
        CHECK(testsupport::in_normative_order(testsupport::root_keys_of(c.bom_bytes)) == (c.id != "omwcmwv1"));

        const auto& e = c.expectation;
        CHECK((!e.required_findings.empty() || !e.forbidden_findings.empty() || e.rejection_accepted));
        REQUIRE_FALSE(e.subjects.empty());
        for (const auto& s : e.subjects) {
            const auto* comp = bom.find_by_ref(s.ref);
            REQUIRE(comp);
            CHECK(comp->name == s.name);
        }
    }
}

TEST_CASE("Scenario 1 and 2 fixtures differ only in the identifier")
{
    const auto by_cpe = only_component("an7esfjj");
    const auto by_purl = only_component("dmszq6mv");
    CHECK(by_cpe.contains("cpe"));
    CHECK_FALSE(by_cpe.contains("purl"));
    CHECK(by_purl.at("purl") == "pkg:npm/dicer@0.3.0");
    CHECK_FALSE(by_purl.contains("cpe"));

    const std::map<std::string, std::string> versions{
        {"an7esfjj", "0.3.0"}, {"u8h8dnoj", ""}, {"fayptrma", "*"}, {"b5mxq45i", "-"}};
    for (const auto& [id, version] : versions) {
        CAPTURE(id);
        const auto c = only_component(id);
        CHECK(c.at("cpe") == "cpe:2.3:a:dicer_project:dicer:" + version + ":*:*:*:*:*:*:*");
        CHECK_FALSE(c.contains("version"));
        auto rest = doc_of(id);
        rest["components"][0].erase("cpe");
        auto base = doc_of("an7esfjj");
        base["components"][0].erase("cpe");
        CHECK(same_apart_from_serial(rest, base));
    }
    CHECK(only_component("9a7iknu4").at("purl") == "pkg:npm/dicer");
}

TEST_CASE("Scenario 4 pairs swap identifier key order only")
{
    const std::vector<std::pair<std::string, std::string>> pairs{{"2lb5zfps", "9xhb7rgj"}, {"pq3cy9or", "5q46iw4f"}};
    for (const auto& [first, second] : pairs) {
        CAPTURE(first);
        const auto a = only_component(first);
        const auto b = only_component(second);
        CHECK(a.at("cpe") == b.at("cpe"));
        CHECK(a.at("purl") == b.at("purl"));
        auto ka = keys_of(a);
        auto kb = keys_of(b);
        CHECK(ka != kb);
        std::swap(*std::find(ka.begin(), ka.end(), "cpe"), *std::find(ka.begin(), ka.end(), "purl"));
        CHECK(ka == kb);
    }
    CHECK(keys_of(only_component("2lb5zfps")).back() == "purl");
    CHECK(std::string(only_component("2lb5zfps").at("cpe")).find(":8.11.4:") != std::string::npos);
    CHECK(only_component("2lb5zfps").at("purl") == "pkg:maven/org.apache.lucene/lucene-replicator@9.12.0");
    CHECK(only_component("pq3cy9or").at("purl") == "pkg:maven/org.apache.lucene/lucene-replicator@8.11.4");
}

TEST_CASE("remaining scenarios carry their distinguishing feature")
{
    const auto none = doc_of("sqs4tbob")["components"];
    REQUIRE(none.size() == 2);
    for (const auto& c : none) {
        CHECK_FALSE(c.contains("cpe"));
        CHECK_FALSE(c.contains("purl"));
        CHECK(c.contains("publisher"));
        CHECK(c.contains("version"));
    }
    CHECK(std::string(only_component("hawmnwbz").at("purl")).rfind("pkg://", 0) == 0);

    const auto confirms = doc_of("qbqy99do");
    const auto denies = doc_of("0vo0efli");
    CHECK(confirms["vulnerabilities"][0]["affects"][0]["versions"][0]["status"] == "affected");
    CHECK(denies["vulnerabilities"][0]["affects"][0]["versions"][0]["status"] == "unaffected");
    CHECK(denies["vulnerabilities"][0]["analysis"]["state"] == "not_affected");
    CHECK(denies.at("components") == confirms.at("components"));
    CHECK(find_case("0vo0efli").expectation.forbidden_findings == std::vector<std::string>{"CVE-2024-45772"});

    const auto unknown = sbom::parse_bom(find_case("3fvslnon").bom_bytes);
    CHECK(unknown.has_issue(sbom::IssueCode::UnknownRootKey));
    CHECK_FALSE(unknown.has_issue(sbom::IssueCode::RootOrder));
    const auto disorder = sbom::parse_bom(find_case("omwcmwv1").bom_bytes);
    CHECK(disorder.has_issue(sbom::IssueCode::RootOrder));
    CHECK_FALSE(disorder.has_issue(sbom::IssueCode::UnknownRootKey));
    for (const auto* id : {"omwcmwv1", "3fvslnon"})
        CHECK(find_case(id).expectation.rejection_accepted);
}

TEST_CASE("emitted files round-trip through manifest and expectations")
{
    testsupport::TempDir dir;
    const auto manifest = emit_sbom_files(dir.path());
    REQUIRE(manifest.entries.size() == 16);
    const auto loaded = load_manifest(dir.path());
    CHECK(loaded.entries == manifest.entries);
    for (const auto& e : loaded.entries) {
        const auto bytes = read_file(dir.path() / e.file);
        CHECK(sha256_hex(bytes) == e.sha256);
        CHECK(bytes == find_case(e.id).bom_bytes);
    }

    const auto expectations = load_expectations(dir.path());
    REQUIRE(expectations.cases.size() == 16);
    for (const auto& c : build_library()) {
        const auto* info = expectations.find(c.id);
        REQUIRE(info);
        CHECK(info->expectation == c.expectation);
        CHECK(info->scenario == c.scenario);
    }
    CHECK(expectations.scenarios == scenarios());
    CHECK(expectations.find("nope") == nullptr);

    testsupport::TempDir again;
    emit_sbom_files(again.path());
    for (const auto* name : {"manifest.json", "expectations.json"})
        CHECK(read_file(dir.path() / name) == read_file(again.path() / name));
    CHECK(library_id() == "sha256:" + sha256_hex(read_file(dir.path() / "manifest.json")));
    CHECK_THROWS_AS(parse_expectations("[]"), std::invalid_argument);
}
