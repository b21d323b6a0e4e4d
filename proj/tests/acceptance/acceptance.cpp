// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "svstest/cli.hpp"
#include "svstest/evaluator.hpp"
#include "svstest/harness.hpp"
#include "svstest/identifiers/cpe.hpp"
#include "svstest/identifiers/purl.hpp"
#include "svstest/lint.hpp"
#include "svstest/refscanner.hpp"
#include "svstest/sbom.hpp"
#include "svstest/testlib.hpp"
#include "svstest/util.hpp"
#include "svstest/vulndb.hpp"

#include "cpe_grid.hpp"
#include "fixture_ops.hpp"
#include "purl_fixtures.hpp"
#include "purl_oracle.hpp"
#include "temp_dir.hpp"

#include <json.hpp>

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace svstest;
namespace fs = std::filesystem;

namespace {

const std::string kSource = SVSTEST_SOURCE_DIR;
const std::vector<std::string> kProfileNames{"IDEAL", "PURL_ONLY", "VERSION_FIELD_DEPENDENT", "NO_VEX", "LENIENT"};

struct Check
{
    bool ok = true;
    std::string detail;

    void expect(bool condition, const std::string& what)
    {
        if (!condition && ok) {
            ok = false;
            detail = what;
        } else if (!condition) {
            detail += "; " + what;
        }
    }
};

refscanner::ScanReport scan_bytes(const std::string& bytes, const std::string& profile,
                                  const vulndb::Snapshot& snapshot = vulndb::seed_snapshot())
{
    return refscanner::scan(sbom::parse_bom(bytes), snapshot, refscanner::find_profile(profile).config);
}

int cli(const std::vector<std::string>& args)
{
    std::ostringstream out;
    std::ostringstream err;
    return cli::dispatch(args, out, err);
}

testlib::CaseInfo info_of(const testlib::TestCase& c)
{
    return {c.id, c.scenario, c.title, c.expectation};
}

Check conformance_full_pass()
{
    Check check;
    const auto start = std::chrono::steady_clock::now();
    testsupport::TempDir dir;
    const auto cases = (dir / "cases").string();
    const auto adapters = (dir / "adapters.json").string();
    write_file(adapters, R"([{"name": "IDEAL", "kind": "BUILTIN", "profile": "IDEAL"}])");

    check.expect(cli({"gen-cases", "--out", cases}) == cli::kExitOk, "gen-cases failed");
    check.expect(cli({"run", "--cases", cases, "--adapters", adapters, "--out", (dir / "runs").string()}) == cli::kExitOk,
                 "run failed");
    const auto results_file = (dir / "results.json").string();
    check.expect(cli({"eval", "--runs", (dir / "runs").string(), "--cases", cases, "--out", results_file}) == cli::kExitOk,
                 "eval reported silent failures");
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto set = evaluator::parse_results(read_file(results_file));
    check.expect(set.results.size() == 16, "expected 16 results, got " + std::to_string(set.results.size()));
    for (const auto& r : set.results) {
        check.expect(r.outcome.verdict == evaluator::Verdict::Pass, r.case_id + " is " + std::string(to_string(r.outcome.verdict)));
        if (r.case_id == "omwcmwv1" || r.case_id == "3fvslnon")
            check.expect(r.notes.rfind("rejected", 0) == 0, r.case_id + " passed without rejection: " + r.notes);
        if (r.case_id == "0vo0efli")
            check.expect(r.notes == "no forbidden finding reported", "0vo0efli: " + r.notes);
    }
    const auto vex = scan_bytes(testlib::find_case("0vo0efli").bom_bytes, "IDEAL");
    check.expect(vex.suppressed.size() == 1 && vex.findings.empty(), "0vo0efli finding not suppressed by VEX");
    check.expect(elapsed < 10.0, "pipeline took " + std::to_string(elapsed) + " s");
    if (check.ok) {
        std::ostringstream d;
        d.precision(3);
        d << std::fixed << "16/16 PASS in " << elapsed << " s";
        check.detail = d.str();
    }
    return check;
}

std::string with_version_field(const std::string& bytes, const std::string& version)
{
    auto doc = nlohmann::ordered_json::parse(bytes);
    for (auto& c : doc["components"]) {
        nlohmann::ordered_json rebuilt;
        for (const auto& [k, v] : c.items()) {
            rebuilt[k] = v;
            if (k == "name")
                rebuilt["version"] = version;
        }
        c = rebuilt;
    }
    return doc.dump(2) + "\n";
}

Check profile_patterns()
{
    Check check;
    testsupport::TempDir dir;
    testlib::emit_sbom_files(dir.path());
    const auto expectations = testlib::load_expectations(dir.path());
    const auto golden = nlohmann::json::parse(read_file(kSource + "/tests/golden/profile_matrix.json"));
    int cells = 0;
    for (const auto& profile : kProfileNames) {
        harness::AdapterConfig adapter;
        adapter.name = profile;
        adapter.profile = profile;
        const auto results = evaluator::evaluate_run(harness::execute_suite(harness::load_suite(dir.path()), adapter), expectations);
        for (const auto& r : results) {
            const auto want = golden["profiles"][profile][r.case_id].get<std::string>();
            check.expect(std::string(to_string(r.outcome.verdict)) == want,
                         profile + "/" + r.case_id + " is " + std::string(to_string(r.outcome.verdict)) + ", golden " + want);
            ++cells;
        }
    }

    // the version-field profile passes once the field is set
    const std::vector<std::pair<std::string, std::string>> variants{
        {"an7esfjj", "0.3.0"}, {"dmszq6mv", "0.3.0"}, {"u8h8dnoj", "0.3.0"}, {"fayptrma", "0.3.0"},
        {"b5mxq45i", "0.3.0"}, {"9a7iknu4", "0.3.0"}, {"hawmnwbz", "8.11.4"}};
    for (const auto& [id, version] : variants) {
        const auto& c = testlib::find_case(id);
        const auto report = scan_bytes(with_version_field(c.bom_bytes, version), "VERSION_FIELD_DEPENDENT");
        harness::RunRecord rec;
        rec.adapter_name = "VERSION_FIELD_DEPENDENT";
        rec.exit_status = 0;
        rec.report_text = refscanner::serialize_report(report);
        const auto verdict = evaluator::evaluate_case(rec, info_of(c)).outcome.verdict;
        check.expect(verdict == evaluator::Verdict::Pass,
                     id + " with version field set is " + std::string(to_string(verdict)));
    }
    if (check.ok)
        check.detail = std::to_string(cells) + " cells match golden; " + std::to_string(variants.size())
                       + " version-field variants pass";
    return check;
}

Check cpe_relation_table()
{
    Check check;
    check.expect(testsupport::kRelationGrid.size() >= 25, "grid too small");
    for (const auto& c : testsupport::kRelationGrid) {
        const auto got = identifiers::compare_attribute(testsupport::attr(c.source), testsupport::attr(c.target));
        check.expect(got == c.expected, std::string(c.source) + " vs " + c.target + " gave " + std::string(to_string(got)));
    }
    if (check.ok)
        check.detail = std::to_string(testsupport::kRelationGrid.size()) + " pairs exact";
    return check;
}

Check purl_robustness()
{
    Check check;
    for (const auto fixture : testsupport::kPurlFixtures) {
        const std::string input(fixture);
        try {
            const auto parsed = identifiers::parse_purl(input);
            const auto canonical = identifiers::canonicalize_purl(parsed);
            check.expect(testsupport::oracle_canonical(input) == canonical, input + ": oracle disagrees");
            check.expect(identifiers::parse_purl(canonical) == parsed, input + ": round trip");
            const auto body = canonical.substr(4);
            for (const auto* prefix : {"pkg:", "pkg:/", "pkg://"})
                check.expect(identifiers::parse_purl(prefix + body) == parsed, input + ": " + prefix + " variant differs");
        } catch (const std::exception& e) {
            check.expect(false, input + ": " + e.what());
        }
    }
    if (check.ok)
        check.detail = std::to_string(testsupport::kPurlFixtures.size()) + " fixtures, 3 prefix variants each";
    return check;
}

Check order_sensitivity()
{
    Check check;
    std::vector<const testlib::TestCase*> pool;
    for (const auto& c : testlib::build_library()) {
        if (c.scenario <= 7)
            pool.push_back(&c);
    }
    std::mt19937 rng(20250101);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    int out_of_order = 0;
    for (int i = 0; i < 100; ++i) {
        const auto& c = *pool[pick(rng)];
        auto permuted = testsupport::permute_root_keys(c.bom_bytes, rng);
        // every fifth draw is put back into normative order so both branches get exercised
        if (i % 5 == 4) {
            auto keys = testsupport::root_keys_of(permuted);
            const auto& order = testsupport::normative_root_order();
            std::stable_sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
                return std::find(order.begin(), order.end(), a) < std::find(order.begin(), order.end(), b);
            });
            permuted = testsupport::reordered(nlohmann::ordered_json::parse(permuted), keys).dump(2) + "\n";
        }
        const bool violates = !testsupport::in_normative_order(testsupport::root_keys_of(permuted));
        out_of_order += violates;
        const auto bom = sbom::parse_bom(permuted);
        check.expect(bom.has_issue(sbom::IssueCode::RootOrder) == violates, c.id + ": ROOT_ORDER issue mismatch");
        const auto ideal = scan_bytes(permuted, "IDEAL");
        check.expect(ideal.rejected.has_value() == violates, c.id + ": IDEAL rejection mismatch");
        if (!violates)
            check.expect(testsupport::finding_keys(ideal.findings)
                             == testsupport::finding_keys(scan_bytes(c.bom_bytes, "IDEAL").findings),
                         c.id + ": in-order permutation changed IDEAL findings");
        check.expect(testsupport::finding_keys(scan_bytes(permuted, "LENIENT").findings)
                         == testsupport::finding_keys(scan_bytes(c.bom_bytes, "LENIENT").findings),
                     c.id + ": LENIENT findings changed");
    }

    const auto& library = testlib::build_library();
    std::uniform_int_distribution<std::size_t> any_case(0, library.size() - 1);
    for (int i = 0; i < 100; ++i) {
        const auto& c = library[any_case(rng)];
        const auto permuted = testsupport::permute_component_keys(c.bom_bytes, rng);
        for (const auto& profile : kProfileNames)
            check.expect(testsupport::finding_keys(scan_bytes(permuted, profile).findings)
                             == testsupport::finding_keys(scan_bytes(c.bom_bytes, profile).findings),
                         c.id + "/" + profile + ": identifier key order changed findings");
    }
    if (check.ok)
        check.detail = "100 root permutations (" + std::to_string(out_of_order)
                       + " out of order), 100 identifier permutations x 5 profiles";
    return check;
}

Check lint_counts()
{
    Check check;
    testsupport::TempDir dir;
    testlib::emit_sbom_files(dir.path());
    const auto stats = nlohmann::json::parse(lint::stats_json(lint::lint_corpus(dir.path())));
    const auto golden = nlohmann::json::parse(read_file(kSource + "/tests/golden/lint_stats.json"));
    for (const auto& [id, counts] : golden["detectors"].items())
        check.expect(stats["detectors"][id] == counts, id + " is " + stats["detectors"][id].dump() + ", golden " + counts.dump());
    check.expect(stats == golden, "stats document differs from golden");
    if (check.ok)
        check.detail = "10 detectors exact over " + std::to_string(stats["files_scanned"].get<int>()) + " files";
    return check;
}

Check osv_equivalence()
{
    Check check;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(kSource + "/data/osv"))
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<vulndb::OsvDocument> docs;
    for (const auto& f : files)
        docs.push_back({f.filename().string(), read_file(f)});

    std::vector<std::string> ids;
    for (const auto* created : {"2025-01-01T00:00:00.000Z", "2025-06-30T12:00:00.000Z", "2026-01-01T00:00:00.000Z"})
        ids.push_back(vulndb::ingest_osv(docs, created).snapshot_id);
    check.expect(ids[0] == ids[1] && ids[1] == ids[2], "snapshot id varies across runs");

    const auto ingested = vulndb::ingest_osv(docs, "2025-01-01T00:00:00.000Z");
    const auto& seed = vulndb::seed_snapshot();
    check.expect(ingested.snapshot_id == seed.snapshot_id, "ingested id differs from seed id");
    check.expect(vulndb::serialize_snapshot(ingested) == read_file(kSource + "/data/seed-snapshot.json"),
                 "shipped seed file differs from ingestion");
    for (const auto& c : testlib::build_library()) {
        const auto a = scan_bytes(c.bom_bytes, "IDEAL", ingested);
        const auto b = scan_bytes(c.bom_bytes, "IDEAL", seed);
        check.expect(a.findings == b.findings && a.suppressed == b.suppressed, c.id + ": findings differ");
    }
    if (check.ok)
        check.detail = "16 cases identical under IDEAL; id stable over 3 runs";
    return check;
}

Check no_silent_skip()
{
    Check check;
    int skipped_total = 0;
    for (const auto& profile : kProfileNames) {
        for (const auto& c : testlib::build_library()) {
            const auto full = scan_bytes(c.bom_bytes, profile);
            const auto& s = full.stats;
            const auto label = profile + "/" + c.id;
            check.expect(s.components_tested + s.components_skipped == s.components_total, label + ": counts do not add up");

            // a component is skipped in the full document exactly when it is skipped on its own
            const auto doc = nlohmann::ordered_json::parse(c.bom_bytes);
            std::size_t skipped_alone = 0;
            for (const auto& comp : doc["components"]) {
                auto single = doc;
                single["components"] = nlohmann::ordered_json::array({comp});
                if (scan_bytes(single.dump(), profile).stats.components_skipped == 0)
                    continue;
                ++skipped_alone;
                const auto ref = comp["bom-ref"].get<std::string>();
                const bool named = std::any_of(full.warnings.begin(), full.warnings.end(), [&](const auto& w) {
                    return w.component_ref == ref && w.message.find(ref) != std::string::npos;
                });
                check.expect(named, label + ": skipped component " + ref + " not named in a warning");
            }
            check.expect(skipped_alone == s.components_skipped, label + ": skipped count mismatch");
            skipped_total += static_cast<int>(s.components_skipped);
        }
    }
    if (check.ok)
        check.detail = "80 scans, " + std::to_string(skipped_total) + " skipped components all named";
    return check;
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"AC1 conformance full-pass", conformance_full_pass},
        {"AC2 profile pattern reproduction", profile_patterns},
        {"AC3 CPE relation table", cpe_relation_table},
        {"AC4 purl robustness", purl_robustness},
        {"AC5 order sensitivity split", order_sensitivity},
        {"AC6 lint fixture counts", lint_counts},
        {"AC7 OSV ingestion equivalence", osv_equivalence},
        {"AC8 no-silent-skip invariant", no_silent_skip},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Check result;
        try {
            result = run();
        } catch (const std::exception& e) {
            result = {false, std::string("exception: ") + e.what()};
        }
        failures += !result.ok;
        std::cout << (result.ok ? "PASS " : "FAIL ") << name << ": " << result.detail << "\n";
    }
    return failures == 0 ? 0 : 1;
}
