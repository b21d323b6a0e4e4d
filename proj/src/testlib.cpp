#include "svstest/testlib.hpp"

#include "svstest/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <stdexcept>

namespace svstest::testlib {

using ordered_json = nlohmann::ordered_json;

namespace {

// CPE vendor tokens here must stay in sync with the seed snapshot.
constexpr std::string_view kDicerCpe = "cpe:2.3:a:dicer_project:dicer:{v}:*:*:*:*:*:*:*";
constexpr std::string_view kLuceneCpe = "cpe:2.3:a:apache:lucene-replicator:{v}:*:*:*:*:*:*:*";
constexpr std::string_view kLucenePurl = "pkg:maven/org.apache.lucene/lucene-replicator@";

constexpr std::string_view kDicerCve = "CVE-2022-24434";
constexpr std::string_view kDicerGhsa = "GHSA-wm7h-9275-46v2";
constexpr std::string_view kLuceneCve = "CVE-2024-45772";

const Subject kDicer{"npm-dicer", "dicer"};
const Subject kMulter{"npm-multer", "multer"};
const Subject kLucene{"maven-lucene-replicator", "lucene-replicator"};

std::string cpe_with_version(std::string_view pattern, std::string_view version)
{
    std::string out(pattern);
    out.replace(out.find("{v}"), 3, version);
    return out;
}

std::string serial_for(std::string_view id)
{
    auto hex = sha256_hex("svs-test case " + std::string(id)).substr(0, 32);
    hex[12] = '5';
    hex[16] = "89ab"[hex[16] % 4];
    return "urn:uuid:" + hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) + "-" + hex.substr(16, 4)
        + "-" + hex.substr(20);
}

ordered_json metadata()
{
    ordered_json m;
    m["timestamp"] = "2025-01-01T00:00:00Z";
    m["component"] = {{"type", "application"}, {"bom-ref", "svs-test-root"}, {"name", "svs-test-fixture"}, {"version", "1.0.0"}};
    return m;
}

/// Component object; `identifiers` is a list of (key, value) in document order.
ordered_json component(const Subject& s, std::optional<std::string> publisher, std::optional<std::string> version,
                       std::vector<std::pair<std::string, std::string>> identifiers)
{
    ordered_json c;
    c["type"] = "library";
    c["bom-ref"] = s.ref;
    if (publisher)
        c["publisher"] = *publisher;
    c["name"] = s.name;
    if (version)
        c["version"] = *version;
    for (auto& [k, v] : identifiers)
        c[k] = v;
    return c;
}

ordered_json dependencies(const std::vector<ordered_json>& components)
{
    ordered_json root{{"ref", "svs-test-root"}, {"dependsOn", ordered_json::array()}};
    ordered_json out = ordered_json::array();
    for (const auto& c : components)
        root["dependsOn"].push_back(c["bom-ref"]);
    out.push_back(root);
    for (const auto& c : components)
        out.push_back({{"ref", c["bom-ref"]}, {"dependsOn", ordered_json::array()}});
    return out;
}

/// Root keys in CycloneDX order: header, metadata, components, dependencies.
ordered_json standard_bom(std::string_view id, const std::vector<ordered_json>& components)
{
    ordered_json b;
    b["bomFormat"] = "CycloneDX";
    b["specVersion"] = "1.6";
    b["serialNumber"] = serial_for(id);
    b["version"] = 1;
    b["metadata"] = metadata();
    b["components"] = components;
    b["dependencies"] = dependencies(components);
    return b;
}

std::string bytes_of(const ordered_json& bom)
{
    return bom.dump(2) + "\n";
}

const std::string kComponentWarning = R"(\b(warn|warning|error)\b)";

Expectation expect_finding(std::vector<std::string> alternatives, std::vector<Subject> subjects)
{
    Expectation e;
    e.required_findings.push_back(std::move(alternatives));
    e.accepted_warnings.push_back({kComponentWarning, true});
    e.subjects = std::move(subjects);
    return e;
}

Expectation expect_dicer(std::vector<Subject> subjects = {kDicer})
{
    return expect_finding({std::string(kDicerCve), std::string(kDicerGhsa)}, std::move(subjects));
}

Expectation expect_lucene()
{
    return expect_finding({std::string(kLuceneCve)}, {kLucene});
}

void add_rejection_matchers(Expectation& e)
{
    e.rejection_accepted = true;
    for (const char* phrase : {R"(\binvalid\s+BOM\b)", R"(\bBOM\s+is\s+invalid\b)", R"(\brejected\b)",
                               R"(\bschema\s+validation\b)", R"(\bnot\s+a\s+valid\s+CycloneDX\b)"})
        e.accepted_warnings.push_back({phrase, false});
}

ordered_json vex_statement(std::string_view status, std::string_view state)
{
    ordered_json analysis{{"state", state}};
    if (state == "not_affected")
        analysis["justification"] = "code_not_reachable";
    ordered_json v;
    v["id"] = kLuceneCve;
    v["source"] = {{"name", "NVD"}, {"url", "https://nvd.nist.gov/vuln/detail/CVE-2024-45772"}};
    v["analysis"] = analysis;
    v["affects"] = ordered_json::array(
        {{{"ref", kLucene.ref}, {"versions", ordered_json::array({{{"version", "8.11.4"}, {"status", status}}})}}});
    return v;
}

std::vector<TestCase> make_library()
{
    std::vector<TestCase> lib;
    const auto add = [&](std::string id, int scenario, std::string title, const ordered_json& bom, Expectation e,
                         std::string rationale) {
        lib.push_back({std::move(id), scenario, std::move(title), bytes_of(bom), std::move(e), std::move(rationale)});
    };
    const auto dicer_cpe = [](std::string_view v) {
        return component(kDicer, std::nullopt, std::nullopt, {{"cpe", cpe_with_version(kDicerCpe, v)}});
    };
    const auto lucene = [](std::optional<std::string> version, std::vector<std::pair<std::string, std::string>> ids) {
        return component(kLucene, std::nullopt, std::move(version), std::move(ids));
    };

    // Scenario 1: each identifier family on its own.
    add("an7esfjj", 1, "dicer identified by CPE only", standard_bom("an7esfjj", {dicer_cpe("0.3.0")}), expect_dicer(),
        "A vulnerable component carrying only a CPE must be matched through CPE.");
    add("dmszq6mv", 1, "dicer identified by purl only",
        standard_bom("dmszq6mv", {component(kDicer, std::nullopt, std::nullopt, {{"purl", "pkg:npm/dicer@0.3.0"}})}),
        expect_dicer(), "A vulnerable component carrying only a versioned purl must be matched through purl.");

    // Scenario 2: logical values in the CPE version attribute.
    add("u8h8dnoj", 2, "CPE with blank version", standard_bom("u8h8dnoj", {dicer_cpe("")}), expect_dicer(),
        "A blank attribute is logical ANY, so every affected version matches.");
    add("fayptrma", 2, "CPE with asterisk version", standard_bom("fayptrma", {dicer_cpe("*")}), expect_dicer(),
        "An asterisk is logical ANY, so every affected version matches.");
    add("b5mxq45i", 2, "CPE with hyphen version", standard_bom("b5mxq45i", {dicer_cpe("-")}), expect_dicer(),
        "A hyphen is logical NA; an unknown version must not hide a vulnerability that affects all versions.");

    // Scenario 3: versionless purl.
    add("9a7iknu4", 3, "purl without version",
        standard_bom("9a7iknu4", {component(kDicer, std::nullopt, std::nullopt, {{"purl", "pkg:npm/dicer"}})}),
        expect_dicer(), "The purl version is optional; every dicer version is affected, so the finding is expected.");

    // Scenario 4: conflicting CPE and purl, both key orders.
    const std::string cpe_vuln = cpe_with_version(kLuceneCpe, "8.11.4");
    const std::string cpe_safe = cpe_with_version(kLuceneCpe, "9.12.0");
    const std::string purl_vuln = std::string(kLucenePurl) + "8.11.4";
    const std::string purl_safe = std::string(kLucenePurl) + "9.12.0";
    add("2lb5zfps", 4, "vulnerable CPE before unaffected purl",
        standard_bom("2lb5zfps", {lucene(std::nullopt, {{"cpe", cpe_vuln}, {"purl", purl_safe}})}), expect_lucene(),
        "The CPE names an affected version; it must be used even though the purl names a fixed one.");
    add("9xhb7rgj", 4, "unaffected purl before vulnerable CPE",
        standard_bom("9xhb7rgj", {lucene(std::nullopt, {{"purl", purl_safe}, {"cpe", cpe_vuln}})}), expect_lucene(),
        "Same identifiers as 2lb5zfps with the key order swapped.");
    add("pq3cy9or", 4, "unaffected CPE before vulnerable purl",
        standard_bom("pq3cy9or", {lucene(std::nullopt, {{"cpe", cpe_safe}, {"purl", purl_vuln}})}), expect_lucene(),
        "The purl names an affected version; it must be used even though the CPE names a fixed one.");
    add("5q46iw4f", 4, "vulnerable purl before unaffected CPE",
        standard_bom("5q46iw4f", {lucene(std::nullopt, {{"purl", purl_vuln}, {"cpe", cpe_safe}})}), expect_lucene(),
        "Same identifiers as pq3cy9or with the key order swapped.");

    // Scenario 5: no identifiers, but enough data to build a CPE.
    add("sqs4tbob", 5, "components without identifiers",
        standard_bom("sqs4tbob", {component(kDicer, "dicer_project", "0.3.0", {}),
                                  component(kMulter, "expressjs", "1.4.4", {})}),
        expect_dicer({kDicer, kMulter}),
        "Publisher, name and version are enough to reconstruct a CPE for dicer.");

    // Scenario 6: purl spelled with extra slashes.
    add("hawmnwbz", 6, "purl with pkg:// prefix",
        standard_bom("hawmnwbz", {lucene(std::nullopt, {{"purl", "pkg://maven/org.apache.lucene/lucene-replicator@8.11.4"}})}),
        expect_lucene(), "Slashes after the scheme are insignificant and must be ignored.");

    // Scenario 7: embedded VEX.
    {
        auto bom = standard_bom("qbqy99do", {lucene("8.11.4", {{"cpe", cpe_vuln}, {"purl", purl_vuln}})});
        bom["vulnerabilities"] = ordered_json::array({vex_statement("affected", "exploitable")});
        add("qbqy99do", 7, "VEX confirms the vulnerability", bom, expect_lucene(),
            "The VEX statement marks 8.11.4 as affected; the finding must still be reported.");
    }
    {
        auto bom = standard_bom("0vo0efli", {lucene("8.11.4", {{"cpe", cpe_vuln}, {"purl", purl_vuln}})});
        bom["vulnerabilities"] = ordered_json::array({vex_statement("unaffected", "not_affected")});
        Expectation e;
        e.forbidden_findings.push_back(std::string(kLuceneCve));
        e.accepted_warnings.push_back({kComponentWarning, true});
        e.accepted_warnings.push_back({R"(\bVEX\b)", true});
        e.subjects = {kLucene};
        add("0vo0efli", 7, "VEX marks the version unaffected", bom, e,
            "The VEX statement marks 8.11.4 as unaffected; the finding must be suppressed.");
    }

    // Scenario 8: malformed root structure.
    const auto dicer_full = component(kDicer, std::nullopt, "0.3.0",
                                      {{"cpe", cpe_with_version(kDicerCpe, "0.3.0")}, {"purl", "pkg:npm/dicer@0.3.0"}});
    const auto multer_full = component(kMulter, std::nullopt, "1.4.4", {{"purl", "pkg:npm/multer@1.4.4"}});
    {
        ordered_json bom;
        bom["bomFormat"] = "CycloneDX";
        bom["specVersion"] = "1.6";
        bom["serialNumber"] = serial_for("omwcmwv1");
        bom["version"] = 1;
        auto meta = metadata();
        meta["licenses"] = ordered_json::array({{{"license", {{"id", "Apache-2.0"}}}}});
        meta["properties"] = ordered_json::array({{{"name", "svs-test:layout"}, {"value", "out-of-order"}}});
        bom["metadata"] = meta;
        bom["vulnerabilities"] = ordered_json::array();
        bom["dependencies"] = dependencies({dicer_full, multer_full});
        bom["components"] = ordered_json::array({dicer_full, multer_full});
        auto e = expect_dicer({kDicer, kMulter});
        add_rejection_matchers(e);
        add("omwcmwv1", 8, "root elements out of order", bom, e,
            "Root elements violate the normative order; rejecting the BOM or still reporting the finding are both accepted.");
    }
    {
        ordered_json bom;
        bom["bomFormat"] = "CycloneDX";
        bom["specVersion"] = "1.6";
        bom["serialNumber"] = serial_for("3fvslnon");
        bom["version"] = 1;
        bom["metadata"] = metadata();
        bom["licenses"] = ordered_json::array({{{"license", {{"id", "Apache-2.0"}}}}});
        bom["components"] = ordered_json::array({dicer_full, multer_full});
        bom["dependencies"] = dependencies({dicer_full, multer_full});
        bom["properties"] = ordered_json::array({{{"name", "svs-test:layout"}, {"value", "root-level"}}});
        Expectation e;
        e.accepted_warnings.push_back({kComponentWarning, true});
        e.subjects = {kDicer, kMulter};
        add_rejection_matchers(e);
        add("3fvslnon", 8, "unknown root element", bom, e,
            "'licenses' is not a root element of the format; the document must be rejected.");
    }
    return lib;
}

ordered_json expectation_to_json(const Expectation& e)
{
    ordered_json j;
    j["required_findings"] = e.required_findings;
    j["forbidden_findings"] = e.forbidden_findings;
    j["accepted_warnings"] = ordered_json::array();
    for (const auto& m : e.accepted_warnings)
        j["accepted_warnings"].push_back({{"pattern", m.pattern}, {"must_reference_component", m.must_reference_component}});
    j["rejection_accepted"] = e.rejection_accepted;
    j["subjects"] = ordered_json::array();
    for (const auto& s : e.subjects)
        j["subjects"].push_back({{"ref", s.ref}, {"name", s.name}});
    return j;
}

Expectation expectation_from_json(const nlohmann::json& j)
{
    Expectation e;
    e.required_findings = j.at("required_findings").get<std::vector<std::vector<std::string>>>();
    e.forbidden_findings = j.at("forbidden_findings").get<std::vector<std::string>>();
    for (const auto& m : j.at("accepted_warnings"))
        e.accepted_warnings.push_back({m.at("pattern").get<std::string>(), m.value("must_reference_component", false)});
    e.rejection_accepted = j.value("rejection_accepted", false);
    for (const auto& s : j.value("subjects", nlohmann::json::array()))
        e.subjects.push_back({s.at("ref").get<std::string>(), s.value("name", std::string{})});
    return e;
}

} // namespace

const CaseInfo* ExpectationSet::find(std::string_view id) const
{
    const auto it = std::find_if(cases.begin(), cases.end(), [&](const CaseInfo& c) { return c.id == id; });
    return it == cases.end() ? nullptr : &*it;
}

const std::vector<TestCase>& build_library()
{
    static const std::vector<TestCase> library = make_library();
    return library;
}

const TestCase& find_case(std::string_view id)
{
    for (const auto& c : build_library()) {
        if (c.id == id)
            return c;
    }
    throw std::out_of_range("no test case '" + std::string(id) + "'");
}

const std::vector<Scenario>& scenarios()
{
    static const std::vector<Scenario> all{
        {1, "Identifier families", {"an7esfjj", "dmszq6mv"},
         "Shows whether CPE and purl identifiers are each used for matching."},
        {2, "CPE logical values", {"u8h8dnoj", "fayptrma", "b5mxq45i"},
         "Shows how blank, asterisk and hyphen version attributes are interpreted."},
        {3, "Versionless purl", {"9a7iknu4"},
         "Shows whether a purl without version is still matched."},
        {4, "Identifier priority and order", {"2lb5zfps", "9xhb7rgj", "pq3cy9or", "5q46iw4f"},
         "Shows which identifier wins when CPE and purl disagree, and whether key order matters."},
        {5, "Missing identifiers", {"sqs4tbob"},
         "Shows whether identifiers are reconstructed from name, publisher and version."},
        {6, "Non-canonical purl", {"hawmnwbz"},
         "Shows whether purls are normalized before matching."},
        {7, "Embedded VEX", {"qbqy99do", "0vo0efli"},
         "Shows whether VEX statements embedded in the BOM suppress or confirm findings."},
        {8, "Root structure validation", {"omwcmwv1", "3fvslnon"},
         "Shows whether malformed root structure is detected."},
    };
    return all;
}

Manifest manifest_of(const std::vector<TestCase>& cases)
{
    Manifest m;
    for (const auto& c : cases)
        m.entries.push_back({c.id, c.scenario, c.id + ".cdx.json", sha256_hex(c.bom_bytes)});
    return m;
}

std::string manifest_json(const Manifest& manifest)
{
    ordered_json j;
    j["schema"] = "svs-test/cases/1";
    j["cases"] = ordered_json::array();
    for (const auto& e : manifest.entries)
        j["cases"].push_back({{"id", e.id}, {"scenario", e.scenario}, {"file", e.file}, {"sha256", e.sha256}});
    return j.dump(2) + "\n";
}

Manifest load_manifest(const std::filesystem::path& cases_dir)
{
    const auto text = read_file(cases_dir / "manifest.json");
    try {
        const auto j = nlohmann::json::parse(text);
        Manifest m;
        for (const auto& e : j.at("cases"))
            m.entries.push_back({e.at("id").get<std::string>(), e.at("scenario").get<int>(), e.at("file").get<std::string>(),
                                 e.at("sha256").get<std::string>()});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoFailure("invalid manifest in " + cases_dir.string() + ": " + e.what());
    }
}

std::string library_id()
{
    return "sha256:" + sha256_hex(manifest_json(manifest_of(build_library())));
}

std::string expectations_json(const std::vector<TestCase>& cases)
{
    ordered_json j;
    j["schema"] = "svs-test/expectations/1";
    j["cases"] = ordered_json::array();
    for (const auto& c : cases) {
        ordered_json entry;
        entry["id"] = c.id;
        entry["scenario"] = c.scenario;
        entry["title"] = c.title;
        entry["expectation"] = expectation_to_json(c.expectation);
        j["cases"].push_back(std::move(entry));
    }
    j["scenarios"] = ordered_json::array();
    for (const auto& s : scenarios()) {
        ordered_json entry;
        entry["number"] = s.number;
        entry["name"] = s.name;
        entry["case_ids"] = s.case_ids;
        entry["interpretation_note"] = s.interpretation_note;
        j["scenarios"].push_back(std::move(entry));
    }
    return j.dump(2) + "\n";
}

ExpectationSet parse_expectations(std::string_view json_text)
{
    try {
        const auto j = nlohmann::json::parse(json_text);
        ExpectationSet set;
        for (const auto& c : j.at("cases"))
            set.cases.push_back({c.at("id").get<std::string>(), c.at("scenario").get<int>(), c.value("title", std::string{}),
                                 expectation_from_json(c.at("expectation"))});
        for (const auto& s : j.value("scenarios", nlohmann::json::array()))
            set.scenarios.push_back({s.at("number").get<int>(), s.value("name", std::string{}),
                                     s.at("case_ids").get<std::vector<std::string>>(),
                                     s.value("interpretation_note", std::string{})});
        return set;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("invalid expectations document: ") + e.what());
    }
}

ExpectationSet load_expectations(const std::filesystem::path& cases_dir)
{
    return parse_expectations(read_file(cases_dir / "expectations.json"));
}

Manifest emit_sbom_files(const std::filesystem::path& dir)
{
    const auto& library = build_library();
    for (const auto& c : library)
        write_file(dir / (c.id + ".cdx.json"), c.bom_bytes);
    const auto manifest = manifest_of(library);
    write_file(dir / "manifest.json", manifest_json(manifest));
    write_file(dir / "expectations.json", expectations_json(library));
    return manifest;
}

} // namespace svstest::testlib
