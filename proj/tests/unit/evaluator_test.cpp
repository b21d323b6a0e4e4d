#include "svstest/evaluator.hpp"
#include "svstest/refscanner.hpp"
#include "svstest/testlib.hpp"
#include "svstest/util.hpp"

#include "temp_dir.hpp"

#include <doctest.h>

#include <json.hpp>

#include <random>

using namespace svstest;
using namespace svstest::evaluator;

namespace {

const std::vector<std::string> kProfileNames{"IDEAL", "PURL_ONLY", "VERSION_FIELD_DEPENDENT", "NO_VEX", "LENIENT"};

testlib::CaseInfo info(std::string_view id)
{
    const auto& c = testlib::find_case(id);
    return {c.id, c.scenario, c.title, c.expectation};
}

harness::RunRecord record(std::string report, std::string stderr_text = {}, std::optional<int> exit = 0)
{
    harness::RunRecord r;
    r.adapter_name = "tool";
    r.report_text = std::move(report);
    r.stderr_text = std::move(stderr_text);
    r.exit_status = exit;
    return r;
}

Outcome judge(std::string_view id, std::string report, std::string stderr_text = {}, std::optional<int> exit = 0)
{
    return evaluate_case(record(std::move(report), std::move(stderr_text), exit), info(id)).outcome;
}

int rank(Verdict v)
{
    return v == Verdict::Pass ? 2 : v == Verdict::Warning ? 1 : 0;
}

std::vector<harness::RunRecord> builtin_run(const std::filesystem::path& cases, const std::string& profile)
{
    harness::AdapterConfig a;
    a.name = profile;
    a.profile = profile;
    return harness::execute_suite(harness::load_suite(cases), a, profile + "-run");
}

} // namespace

TEST_CASE("verdict steps on plain-text reports")
{
    SUBCASE("required finding present")
    {
        const auto o = judge("dmszq6mv", "dicer 0.3.0  CVE-2022-24434  high\n");
        CHECK(o.verdict == Verdict::Pass);
        CHECK(o.evidence == std::vector<std::string>{"CVE-2022-24434"});
    }
    SUBCASE("alias accepted, case-insensitive")
    {
        CHECK(judge("dmszq6mv", "found ghsa-wm7h-9275-46v2").verdict == Verdict::Pass);
    }
    SUBCASE("identifier must stand alone")
    {
        CHECK(judge("dmszq6mv", "CVE-2022-244345").verdict == Verdict::SilentFail);
        CHECK(judge("dmszq6mv", "XCVE-2022-24434").verdict == Verdict::SilentFail);
    }
    SUBCASE("explicit warning naming the component")
    {
        const auto o = judge("an7esfjj", "", "WARNING: component npm-dicer has no purl and was not scanned\n");
        CHECK(o.verdict == Verdict::Warning);
        CHECK_FALSE(o.needs_review);
        CHECK(judge("an7esfjj", "Error: skipped dicer (unsupported identifier)").verdict == Verdict::Warning);
    }
    SUBCASE("generic warning without component reference")
    {
        const auto o = judge("an7esfjj", "", "Warning: At least one component could not be resolved\n");
        CHECK(o.verdict == Verdict::SilentFail);
        CHECK(o.needs_review);
        CHECK(judge("an7esfjj", "scan failed for 1 package").needs_review);
    }
    SUBCASE("nothing at all")
    {
        const auto o = judge("an7esfjj", "No vulnerabilities found.\n");
        CHECK(o.verdict == Verdict::SilentFail);
        CHECK_FALSE(o.needs_review);
    }
    SUBCASE("component name inside another word does not count")
    {
        CHECK(judge("an7esfjj", "warning: predicerx skipped").needs_review);
    }
}

TEST_CASE("forbidden findings dominate")
{
    CHECK(judge("0vo0efli", "nothing to report").verdict == Verdict::Pass);
    const auto reported = judge("0vo0efli", "CVE-2024-45772 in lucene-replicator 8.11.4\n");
    CHECK(reported.verdict == Verdict::SilentFail);
    const auto warned = judge("0vo0efli", "CVE-2024-45772\nWARN: VEX for lucene-replicator ignored\n");
    CHECK(warned.verdict == Verdict::Warning);

    // a timed-out tool has not shown that it suppresses anything
    auto timed_out = record("");
    timed_out.timed_out = true;
    timed_out.exit_status.reset();
    CHECK(evaluate_case(timed_out, info("0vo0efli")).outcome.verdict == Verdict::SilentFail);
}

TEST_CASE("rejection of malformed documents")
{
    CHECK(judge("3fvslnon", "", "", 1).verdict == Verdict::Pass);
    CHECK(judge("3fvslnon", "", "Error: BOM is invalid\n").verdict == Verdict::Pass);
    CHECK(judge("omwcmwv1", "The BOM was rejected by the importer").verdict == Verdict::Pass);
    CHECK(judge("omwcmwv1", "dicer CVE-2022-24434").verdict == Verdict::Pass);
    CHECK(evaluate_case(record("dicer CVE-2022-24434"), info("omwcmwv1")).notes == "required findings reported");
    CHECK(evaluate_case(record("", "", 2), info("omwcmwv1")).notes == "rejected: nonzero exit status");
    CHECK(judge("3fvslnon", "all good").verdict == Verdict::SilentFail);
    // the same phrase on an ordinary case is not a pass
    CHECK(judge("dmszq6mv", "", "", 1).verdict == Verdict::SilentFail);

    auto timed_out = record("");
    timed_out.timed_out = true;
    timed_out.exit_status.reset();
    CHECK(evaluate_case(timed_out, info("3fvslnon")).outcome.verdict == Verdict::SilentFail);
}

TEST_CASE("reference scanner JSON reports are read structurally")
{
    const auto bom = sbom::parse_bom(testlib::find_case("0vo0efli").bom_bytes);
    const auto report = refscanner::scan(bom, vulndb::seed_snapshot(), refscanner::find_profile("IDEAL").config);
    REQUIRE(report.suppressed.size() == 1);
    // the suppressed finding appears in the JSON text but is not active
    const auto text = refscanner::serialize_report(report);
    CHECK(text.find("CVE-2024-45772") != std::string::npos);
    CHECK(judge("0vo0efli", text).verdict == Verdict::Pass);
}

TEST_CASE("adding a required finding never moves a verdict away from PASS")
{
    const std::vector<std::string> pool{"No vulnerabilities found.",
                                        "Warning: At least one component could not be resolved",
                                        "WARN: dicer not scanned",
                                        "WARN: npm-multer skipped",
                                        "error while reading lucene-replicator",
                                        "BOM rejected",
                                        "CVE-2024-45772 lucene-replicator",
                                        "scan failed",
                                        ""};
    const std::vector<std::pair<std::string, std::string>> additions{
        {"an7esfjj", "CVE-2022-24434 dicer"}, {"sqs4tbob", "GHSA-wm7h-9275-46v2"}, {"2lb5zfps", "CVE-2024-45772"},
        {"omwcmwv1", "CVE-2022-24434"},       {"0vo0efli", "unrelated"}};
    std::mt19937 rng(99);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::uniform_int_distribution<int> exit_code(0, 2);
    for (int i = 0; i < 300; ++i) {
        std::string report;
        for (int k = 0; k < 3; ++k)
            report += pool[pick(rng)] + "\n";
        const int status = exit_code(rng);
        for (const auto& [id, line] : additions) {
            const auto before = judge(id, report, {}, status);
            const auto after = judge(id, report + line + "\n", {}, status);
            CAPTURE(id);
            CAPTURE(report);
            CHECK(rank(after.verdict) >= rank(before.verdict));
            for (const auto& o : {before, after}) {
                if (o.needs_review)
                    CHECK(o.verdict == Verdict::SilentFail);
                if (o.verdict == Verdict::Warning)
                    CHECK_FALSE(o.evidence.empty());
            }
            CHECK(judge(id, report, {}, status) == before);
        }
    }
}

TEST_CASE("profile runs reproduce the golden verdict matrix")
{
    testsupport::TempDir dir;
    testlib::emit_sbom_files(dir.path());
    const auto expectations = testlib::load_expectations(dir.path());
    const auto golden = nlohmann::json::parse(read_file(std::string(SVSTEST_SOURCE_DIR) + "/tests/golden/profile_matrix.json"));

    for (const auto& profile : kProfileNames) {
        const auto results = evaluate_run(builtin_run(dir.path(), profile), expectations);
        REQUIRE(results.size() == 16);
        for (const auto& r : results) {
            CAPTURE(profile);
            CAPTURE(r.case_id);
            CHECK(to_string(r.outcome.verdict) == golden["profiles"][profile][r.case_id].get<std::string>());
            CHECK_FALSE(r.outcome.needs_review);
        }
    }
}

TEST_CASE("scenario summaries and matrix rendering")
{
    testsupport::TempDir dir;
    testlib::emit_sbom_files(dir.path());
    const auto expectations = testlib::load_expectations(dir.path());

    ResultSet set;
    set.scenarios = expectations.scenarios;
    for (const auto* profile : {"IDEAL", "PURL_ONLY", "LENIENT"}) {
        const auto records = builtin_run(dir.path(), profile);
        set.runs.push_back(run_info(records));
        const auto results = evaluate_run(records, expectations);
        set.results.insert(set.results.end(), results.begin(), results.end());
    }

    const auto summaries = summarize_scenarios(set.results, set.scenarios);
    REQUIRE(summaries.size() == 8);
    for (const auto& s : summaries) {
        REQUIRE(s.adapters.size() == 3);
        CHECK(s.adapters[0].label == "fully conformant");
        CHECK(s.adapters[0].verdicts.size() == s.case_ids.size());
    }
    CHECK(summaries[0].adapters[1].label == "CPE unsupported (explicit warnings)");
    CHECK(summaries[3].adapters[1].label == "purl preferred, CPE ignored (explicit warnings)");
    CHECK(summaries[7].adapters[2].label == "unknown root element accepted (silent)");
    CHECK(summaries[0].interpretation.find("PURL_ONLY: CPE unsupported") != std::string::npos);

    const auto md = render_matrix(set, MatrixFormat::Markdown);
    const auto json = nlohmann::json::parse(render_matrix(set, MatrixFormat::Json));
    REQUIRE(json["rows"].size() == 16);
    CHECK(json["adapters"] == nlohmann::json::array({"IDEAL", "PURL_ONLY", "LENIENT"}));
    for (const auto& row : json["rows"]) {
        const auto id = row["case_id"].get<std::string>();
        std::string cells;
        for (const auto& c : row["cells"])
            cells += " " + c.get<std::string>() + " |";
        const auto line_start = md.find("| " + id + " |");
        REQUIRE(line_start != std::string::npos);
        const auto line = md.substr(line_start, md.find('\n', line_start) - line_start);
        CHECK(line == "| " + id + " |" + cells);
    }
    CHECK(md.find("| 3fvslnon | ✓ | ✓ | ✗ |") != std::string::npos);

    const auto reparsed = parse_results(results_json(set));
    CHECK(reparsed.results == set.results);
    CHECK(reparsed.runs == set.runs);
    CHECK(reparsed.scenarios == set.scenarios);
    CHECK(results_json(reparsed) == results_json(set));
    CHECK(has_silent_failure(set.results));
    CHECK_THROWS_AS(parse_results("{\"schema\": \"other\"}"), std::invalid_argument);
}

TEST_CASE("incomplete result sets are refused")
{
    CHECK_THROWS_AS(summarize_scenarios({}, testlib::scenarios()), IncompleteSuite);

    std::vector<harness::RunRecord> records;
    for (const auto& c : testlib::build_library()) {
        if (c.id == "hawmnwbz")
            continue;
        auto r = record("");
        r.case_id = c.id;
        records.push_back(r);
    }
    testlib::ExpectationSet set;
    for (const auto& c : testlib::build_library())
        set.cases.push_back(info(c.id));
    try {
        evaluate_run(records, set);
        FAIL("expected IncompleteSuite");
    } catch (const IncompleteSuite& e) {
        CHECK(e.missing() == std::vector<std::string>{"hawmnwbz"});
    }

    std::vector<CaseResult> partial{{"an7esfjj", "x", 1, {}, {}}};
    CHECK_THROWS_AS(summarize_scenarios(partial, testlib::scenarios()), IncompleteSuite);
    CHECK(cell_symbol({Verdict::SilentFail, true, {}}) == "(✗)");
    CHECK(verdict_from_string("WARNING") == Verdict::Warning);
    CHECK_THROWS_AS(verdict_from_string("OK"), std::invalid_argument);
}
