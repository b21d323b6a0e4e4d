#pragma once

#include "svstest/harness.hpp"
#include "svstest/testlib.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace svstest::evaluator {

enum class Verdict { Pass, Warning, SilentFail };

std::string_view to_string(Verdict verdict);
/// Accepts PASS, WARNING and SILENT_FAIL. Throws std::invalid_argument.
Verdict verdict_from_string(std::string_view text);

struct Outcome
{
    Verdict verdict = Verdict::SilentFail;
    /// Set only on SILENT_FAIL when warning-like text was found that no
    /// accepted matcher explains; a human should look at it.
    bool needs_review = false;
    std::vector<std::string> evidence;

    bool operator==(const Outcome&) const = default;
};

struct CaseResult
{
    std::string case_id;
    std::string adapter_name;
    int scenario = 0;
    Outcome outcome;
    std::string notes;

    bool operator==(const CaseResult&) const = default;
};

class IncompleteSuite : public std::runtime_error
{
public:
    explicit IncompleteSuite(std::vector<std::string> missing);
    const std::vector<std::string>& missing() const { return missing_; }

private:
    std::vector<std::string> missing_;
};

CaseResult evaluate_case(const harness::RunRecord& record, const testlib::CaseInfo& expected);

/// One result per expected case, in expectation order. Throws IncompleteSuite
/// when a case has no record.
std::vector<CaseResult> evaluate_run(const std::vector<harness::RunRecord>& records,
                                     const testlib::ExpectationSet& expectations);

struct AdapterPattern
{
    std::string adapter;
    std::vector<Verdict> verdicts; ///< in scenario case order
    std::string label;

    bool operator==(const AdapterPattern&) const = default;
};

struct ScenarioSummary
{
    int number = 0;
    std::string name;
    std::vector<std::string> case_ids;
    std::vector<AdapterPattern> adapters;
    std::string interpretation;
};

/// Adapters appear in order of first occurrence in `results`. Throws
/// IncompleteSuite when a (case, adapter) pair is missing or nothing was given.
std::vector<ScenarioSummary> summarize_scenarios(const std::vector<CaseResult>& results,
                                                 const std::vector<testlib::Scenario>& scenarios);

/// Run metadata carried into the results file for transparency.
struct RunInfo
{
    std::string adapter;
    std::string run_id;
    std::string tool_version;
    std::string config_digest;
    std::optional<std::string> db_snapshot_id;

    bool operator==(const RunInfo&) const = default;
};

RunInfo run_info(const std::vector<harness::RunRecord>& records);

struct ResultSet
{
    std::vector<testlib::Scenario> scenarios;
    std::vector<RunInfo> runs;
    std::vector<CaseResult> results;
};

std::string results_json(const ResultSet& set);
/// Throws std::invalid_argument.
ResultSet parse_results(std::string_view json_text);

bool has_silent_failure(const std::vector<CaseResult>& results);

enum class MatrixFormat { Json, Markdown };

/// Cases grouped by scenario against adapters. Cells: ✓ pass, ⚠ warning,
/// ✗ silent failure, (✗) silent failure that needs review.
std::string render_matrix(const ResultSet& set, MatrixFormat format);
std::string_view cell_symbol(const Outcome& outcome);

} // namespace svstest::evaluator
