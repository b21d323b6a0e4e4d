#include "svstest/evaluator.hpp"

#include "svstest/refscanner.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <regex>
#include <set>

namespace svstest::evaluator {

using ordered_json = nlohmann::ordered_json;

namespace {

const std::regex kWarningLike(R"(warn|error|fail)", std::regex::icase);

struct Texts
{
    std::string findings;
    std::string warnings;
};

// The reference scanner's JSON report lists VEX-suppressed findings next to the
// active ones, so it is read structurally. Anything else is plain text.
Texts texts_of(const harness::RunRecord& record)
{
    try {
        const auto report = refscanner::parse_report(record.report_text);
        Texts t;
        for (const auto& f : report.findings)
            t.findings += f.vuln_id + " " + f.component_ref + " " + f.component_name + "\n";
        if (report.rejected)
            t.warnings += "REJECTED: " + *report.rejected + "\n";
        t.warnings += refscanner::render_warning_lines(report);
        t.warnings += record.stderr_text;
        return t;
    } catch (const std::invalid_argument&) {
        const auto all = record.report_text + "\n" + record.stderr_text;
        return {all, all};
    }
}

std::regex id_regex(const std::string& pattern)
{
    return std::regex(R"(\b(?:)" + pattern + R"()\b)", std::regex::icase);
}

std::optional<std::string> search(const std::string& text, const std::regex& re)
{
    std::smatch m;
    if (std::regex_search(text, m, re))
        return m.str();
    return std::nullopt;
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos)
            end = text.size();
        if (end > start)
            out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string regex_escape(std::string_view text)
{
    std::string out;
    for (char c : text) {
        if (std::string_view(R"(\^$.|?*+()[]{})").find(c) != std::string_view::npos)
            out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

bool names_subject(const std::string& line, const std::vector<testlib::Subject>& subjects)
{
    const auto l = lower(line);
    for (const auto& s : subjects) {
        if (!s.ref.empty() && l.find(lower(s.ref)) != std::string::npos)
            return true;
        if (!s.name.empty() && std::regex_search(line, id_regex(regex_escape(s.name))))
            return true;
    }
    return false;
}

std::optional<std::string> matching_line(const std::vector<std::string>& lines, const testlib::WarningMatcher& m,
                                         const std::vector<testlib::Subject>& subjects)
{
    const std::regex re(m.pattern, std::regex::icase);
    for (const auto& line : lines) {
        if (!std::regex_search(line, re))
            continue;
        if (m.must_reference_component && !names_subject(line, subjects))
            continue;
        return line;
    }
    return std::nullopt;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty())
            out += sep;
        out += p;
    }
    return out;
}

Verdict verdict_at(const std::map<std::pair<std::string, std::string>, const CaseResult*>& index,
                   const std::string& case_id, const std::string& adapter)
{
    return index.at({case_id, adapter})->outcome.verdict;
}

bool passes(Verdict v) { return v == Verdict::Pass; }

std::string base_label(int scenario, const std::vector<Verdict>& v)
{
    const auto ok = [&](std::size_t i) { return i < v.size() && passes(v[i]); };
    switch (scenario) {
    case 1:
        if (!ok(0) && ok(1))
            return "CPE unsupported";
        if (ok(0) && !ok(1))
            return "purl unsupported";
        return "neither identifier family matched";
    case 2:
        if (ok(0) && ok(1) && !ok(2))
            return "CPE NA version treated as no match";
        if (!ok(0) && !ok(1) && !ok(2))
            return "CPE logical values unsupported";
        return "CPE logical values partly supported";
    case 3:
        return "versionless purl not matched";
    case 4:
        // case order: vulnerable CPE first, vulnerable CPE last, vulnerable purl last, vulnerable purl first
        if (!ok(0) && !ok(1) && ok(2) && ok(3))
            return "purl preferred, CPE ignored";
        if (ok(0) && ok(1) && !ok(2) && !ok(3))
            return "CPE preferred, purl ignored";
        if (ok(0) != ok(1) || ok(2) != ok(3))
            return "identifier key order matters";
        return "conflicting identifiers mishandled";
    case 5:
        return "no identifier reconstruction";
    case 6:
        return "purl not normalized";
    case 7:
        if (ok(0) && !ok(1))
            return "VEX ignored";
        return "VEX misapplied";
    case 8:
        if (ok(0) && !ok(1))
            return "unknown root element accepted";
        if (!ok(0) && ok(1))
            return "root order violation neither reported nor tolerated";
        return "malformed root structure mishandled";
    default:
        return "deviations";
    }
}

std::string pattern_label(int scenario, const std::vector<Verdict>& v)
{
    if (std::all_of(v.begin(), v.end(), passes))
        return "fully conformant";
    const bool silent = std::any_of(v.begin(), v.end(), [](Verdict x) { return x == Verdict::SilentFail; });
    return base_label(scenario, v) + (silent ? " (silent)" : " (explicit warnings)");
}

ordered_json outcome_json(const CaseResult& r)
{
    ordered_json j;
    j["case_id"] = r.case_id;
    j["adapter"] = r.adapter_name;
    j["scenario"] = r.scenario;
    j["verdict"] = to_string(r.outcome.verdict);
    j["needs_review"] = r.outcome.needs_review;
    j["evidence"] = r.outcome.evidence;
    j["notes"] = r.notes;
    return j;
}

std::vector<std::string> adapter_order(const std::vector<CaseResult>& results)
{
    std::vector<std::string> out;
    for (const auto& r : results) {
        if (std::find(out.begin(), out.end(), r.adapter_name) == out.end())
            out.push_back(r.adapter_name);
    }
    return out;
}

} // namespace

IncompleteSuite::IncompleteSuite(std::vector<std::string> missing)
    : std::runtime_error(missing.empty() ? "no results" : "incomplete suite, missing: " + join(missing, ", "))
    , missing_(std::move(missing))
{
}

std::string_view to_string(Verdict verdict)
{
    switch (verdict) {
    case Verdict::Pass:
        return "PASS";
    case Verdict::Warning:
        return "WARNING";
    case Verdict::SilentFail:
        return "SILENT_FAIL";
    }
    return "SILENT_FAIL";
}

Verdict verdict_from_string(std::string_view text)
{
    if (text == "PASS")
        return Verdict::Pass;
    if (text == "WARNING")
        return Verdict::Warning;
    if (text == "SILENT_FAIL")
        return Verdict::SilentFail;
    throw std::invalid_argument("unknown verdict '" + std::string(text) + "'");
}

CaseResult evaluate_case(const harness::RunRecord& record, const testlib::CaseInfo& expected)
{
    const auto& e = expected.expectation;
    CaseResult result{expected.id, record.adapter_name, expected.scenario, {}, {}};
    auto& out = result.outcome;
    const auto texts = texts_of(record);
    const auto warning_lines = lines_of(texts.warnings);

    std::vector<std::string> forbidden_hits;
    for (const auto& f : e.forbidden_findings) {
        if (auto hit = search(texts.findings, id_regex(f)))
            forbidden_hits.push_back(*hit);
    }
    std::string forbidden_note;
    if (!forbidden_hits.empty())
        forbidden_note = "forbidden finding reported: " + join(forbidden_hits, ", ") + "; ";

    // (1) expected findings, and nothing forbidden
    if ((!e.required_findings.empty() || !e.forbidden_findings.empty()) && forbidden_hits.empty()
        && !record.timed_out) {
        std::vector<std::string> evidence;
        bool all = true;
        for (const auto& alternatives : e.required_findings) {
            std::optional<std::string> hit;
            for (const auto& alt : alternatives) {
                if ((hit = search(texts.findings, id_regex(alt))))
                    break;
            }
            if (!hit) {
                all = false;
                break;
            }
            evidence.push_back(*hit);
        }
        if (all) {
            out.verdict = Verdict::Pass;
            out.evidence = std::move(evidence);
            result.notes = e.required_findings.empty() ? "no forbidden finding reported" : "required findings reported";
            return result;
        }
    }

    // (2) the document was rejected and rejection is acceptable
    if (e.rejection_accepted && forbidden_hits.empty()) {
        if (record.exit_status && *record.exit_status != 0) {
            out.verdict = Verdict::Pass;
            out.evidence.push_back("exit status " + std::to_string(*record.exit_status));
            result.notes = "rejected: nonzero exit status";
            return result;
        }
        for (const auto& m : e.accepted_warnings) {
            if (m.must_reference_component)
                continue;
            if (auto line = matching_line(warning_lines, m, e.subjects)) {
                out.verdict = Verdict::Pass;
                out.evidence.push_back(*line);
                result.notes = "rejected: rejection message";
                return result;
            }
        }
    }

    // (3) an explicit warning that names the affected component
    for (const auto& m : e.accepted_warnings) {
        if (auto line = matching_line(warning_lines, m, e.subjects)) {
            out.verdict = Verdict::Warning;
            out.evidence.push_back(*line);
            result.notes = forbidden_note + "accepted warning";
            return result;
        }
    }

    // (4) something warning-like that no matcher accepts
    for (const auto& line : warning_lines) {
        if (std::regex_search(line, kWarningLike)) {
            out.verdict = Verdict::SilentFail;
            out.needs_review = true;
            out.evidence.push_back(line);
            result.notes = forbidden_note + "warning-like output without component reference";
            return result;
        }
    }

    out.verdict = Verdict::SilentFail;
    out.evidence = forbidden_hits;
    result.notes = forbidden_note + (record.timed_out ? "timed out without output" : "expected output missing, no warning");
    return result;
}

std::vector<CaseResult> evaluate_run(const std::vector<harness::RunRecord>& records,
                                     const testlib::ExpectationSet& expectations)
{
    std::vector<CaseResult> out;
    std::vector<std::string> missing;
    for (const auto& c : expectations.cases) {
        const auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.case_id == c.id; });
        if (it == records.end()) {
            missing.push_back(c.id);
            continue;
        }
        out.push_back(evaluate_case(*it, c));
    }
    if (!missing.empty() || expectations.cases.empty())
        throw IncompleteSuite(std::move(missing));
    return out;
}

std::vector<ScenarioSummary> summarize_scenarios(const std::vector<CaseResult>& results,
                                                 const std::vector<testlib::Scenario>& scenarios)
{
    if (results.empty())
        throw IncompleteSuite({});
    std::map<std::pair<std::string, std::string>, const CaseResult*> index;
    for (const auto& r : results)
        index[{r.case_id, r.adapter_name}] = &r;
    const auto adapters = adapter_order(results);

    std::vector<std::string> missing;
    for (const auto& s : scenarios) {
        for (const auto& id : s.case_ids) {
            for (const auto& a : adapters) {
                if (!index.contains({id, a}))
                    missing.push_back(a + "/" + id);
            }
        }
    }
    if (!missing.empty())
        throw IncompleteSuite(std::move(missing));

    std::vector<ScenarioSummary> out;
    for (const auto& s : scenarios) {
        ScenarioSummary summary{s.number, s.name, s.case_ids, {}, s.interpretation_note};
        for (const auto& a : adapters) {
            AdapterPattern p{a, {}, {}};
            for (const auto& id : s.case_ids)
                p.verdicts.push_back(verdict_at(index, id, a));
            p.label = pattern_label(s.number, p.verdicts);
            summary.interpretation += (summary.interpretation.empty() ? "" : " ") + a + ": " + p.label + ".";
            summary.adapters.push_back(std::move(p));
        }
        out.push_back(std::move(summary));
    }
    return out;
}

RunInfo run_info(const std::vector<harness::RunRecord>& records)
{
    if (records.empty())
        throw IncompleteSuite({});
    const auto& r = records.front();
    return {r.adapter_name, r.run_id, r.tool_version, r.config_digest, r.db_snapshot_id};
}

bool has_silent_failure(const std::vector<CaseResult>& results)
{
    return std::any_of(results.begin(), results.end(),
                       [](const CaseResult& r) { return r.outcome.verdict == Verdict::SilentFail; });
}

std::string results_json(const ResultSet& set)
{
    ordered_json j;
    j["schema"] = "svs-test/results/1";
    j["scenarios"] = ordered_json::array();
    for (const auto& s : set.scenarios)
        j["scenarios"].push_back(
            {{"number", s.number}, {"name", s.name}, {"case_ids", s.case_ids}, {"interpretation_note", s.interpretation_note}});
    j["runs"] = ordered_json::array();
    for (const auto& r : set.runs) {
        j["runs"].push_back({{"adapter", r.adapter},
                             {"run_id", r.run_id},
                             {"tool_version", r.tool_version},
                             {"config_digest", r.config_digest},
                             {"db_snapshot_id", r.db_snapshot_id ? ordered_json(*r.db_snapshot_id) : ordered_json(nullptr)}});
    }
    j["results"] = ordered_json::array();
    for (const auto& r : set.results)
        j["results"].push_back(outcome_json(r));
    j["summaries"] = ordered_json::array();
    for (const auto& s : summarize_scenarios(set.results, set.scenarios)) {
        ordered_json adapters = ordered_json::array();
        for (const auto& p : s.adapters) {
            ordered_json verdicts = ordered_json::array();
            for (auto v : p.verdicts)
                verdicts.push_back(to_string(v));
            adapters.push_back({{"adapter", p.adapter}, {"verdicts", verdicts}, {"label", p.label}});
        }
        j["summaries"].push_back({{"scenario", s.number}, {"adapters", adapters}, {"interpretation", s.interpretation}});
    }
    return j.dump(2) + "\n";
}

ResultSet parse_results(std::string_view json_text)
{
    try {
        const auto j = nlohmann::json::parse(json_text);
        if (j.value("schema", std::string{}) != "svs-test/results/1")
            throw std::invalid_argument("not an svs-test results file");
        ResultSet set;
        for (const auto& s : j.at("scenarios"))
            set.scenarios.push_back({s.at("number").get<int>(), s.at("name").get<std::string>(),
                                     s.at("case_ids").get<std::vector<std::string>>(),
                                     s.value("interpretation_note", std::string{})});
        for (const auto& r : j.at("runs")) {
            RunInfo info{r.at("adapter").get<std::string>(), r.at("run_id").get<std::string>(),
                         r.at("tool_version").get<std::string>(), r.at("config_digest").get<std::string>(), std::nullopt};
            if (r.contains("db_snapshot_id") && r["db_snapshot_id"].is_string())
                info.db_snapshot_id = r["db_snapshot_id"].get<std::string>();
            set.runs.push_back(std::move(info));
        }
        for (const auto& r : j.at("results")) {
            CaseResult c;
            c.case_id = r.at("case_id").get<std::string>();
            c.adapter_name = r.at("adapter").get<std::string>();
            c.scenario = r.at("scenario").get<int>();
            c.outcome.verdict = verdict_from_string(r.at("verdict").get<std::string>());
            c.outcome.needs_review = r.at("needs_review").get<bool>();
            c.outcome.evidence = r.at("evidence").get<std::vector<std::string>>();
            c.notes = r.at("notes").get<std::string>();
            set.results.push_back(std::move(c));
        }
        return set;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("invalid results file: ") + e.what());
    }
}

std::string_view cell_symbol(const Outcome& outcome)
{
    switch (outcome.verdict) {
    case Verdict::Pass:
        return "✓";
    case Verdict::Warning:
        return "⚠";
    case Verdict::SilentFail:
        return outcome.needs_review ? "(✗)" : "✗";
    }
    return "✗";
}

std::string render_matrix(const ResultSet& set, MatrixFormat format)
{
    const auto summaries = summarize_scenarios(set.results, set.scenarios);
    const auto adapters = adapter_order(set.results);
    std::map<std::pair<std::string, std::string>, const CaseResult*> index;
    for (const auto& r : set.results)
        index[{r.case_id, r.adapter_name}] = &r;

    if (format == MatrixFormat::Json) {
        ordered_json j;
        j["schema"] = "svs-test/matrix/1";
        j["adapters"] = adapters;
        j["rows"] = ordered_json::array();
        for (const auto& s : set.scenarios) {
            for (const auto& id : s.case_ids) {
                ordered_json cells = ordered_json::array();
                for (const auto& a : adapters)
                    cells.push_back(cell_symbol(index.at({id, a})->outcome));
                j["rows"].push_back({{"scenario", s.number}, {"case_id", id}, {"cells", cells}});
            }
        }
        j["scenarios"] = ordered_json::array();
        for (const auto& s : summaries) {
            ordered_json labels = ordered_json::array();
            for (const auto& p : s.adapters)
                labels.push_back(p.label);
            j["scenarios"].push_back({{"scenario", s.number}, {"name", s.name}, {"labels", labels}});
        }
        return j.dump(2) + "\n";
    }

    std::string md = "| Scenario | Case |";
    for (const auto& a : adapters)
        md += " " + a + " |";
    md += "\n|---|---|";
    for (std::size_t i = 0; i < adapters.size(); ++i)
        md += "---|";
    md += "\n";
    for (const auto& s : set.scenarios) {
        bool first = true;
        for (const auto& id : s.case_ids) {
            md += "| " + (first ? std::to_string(s.number) + " " + s.name : std::string()) + " | " + id + " |";
            for (const auto& a : adapters)
                md += " " + std::string(cell_symbol(index.at({id, a})->outcome)) + " |";
            md += "\n";
            first = false;
        }
    }
    md += "\n✓ pass, ⚠ explicit warning, ✗ silent failure, (✗) silent failure with warning-like output to review\n";
    md += "\n## Scenario interpretation\n\n";
    for (const auto& s : summaries) {
        md += "- " + std::to_string(s.number) + " " + s.name + ":";
        for (const auto& p : s.adapters)
            md += " " + p.adapter + " " + p.label + ";";
        md.back() = '\n';
    }
    return md;
}

} // namespace svstest::evaluator
