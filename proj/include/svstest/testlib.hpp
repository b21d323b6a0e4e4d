#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace svstest::testlib {

/// Regular expression over report or stderr text, matched line by line.
struct WarningMatcher
{
    std::string pattern;
    /// The matching line must also name one of the expectation's subjects.
    /// Matchers without this flag describe whole-document rejection messages.
    bool must_reference_component = false;

    bool operator==(const WarningMatcher&) const = default;
};

/// A component a warning may refer to, by bom-ref or by name.
struct Subject
{
    std::string ref;
    std::string name;

    bool operator==(const Subject&) const = default;
};

struct Expectation
{
    /// Each entry is one required finding, given as alternative vulnerability
    /// id patterns (e.g. a CVE and its GHSA alias).
    std::vector<std::vector<std::string>> required_findings;
    std::vector<std::string> forbidden_findings;
    std::vector<WarningMatcher> accepted_warnings;
    bool rejection_accepted = false;
    std::vector<Subject> subjects;

    bool operator==(const Expectation&) const = default;
};

struct TestCase
{
    std::string id;
    int scenario = 0;
    std::string title;
    std::string bom_bytes;
    Expectation expectation;
    std::string rationale;
};

struct Scenario
{
    int number = 0;
    std::string name;
    std::vector<std::string> case_ids;
    std::string interpretation_note;

    bool operator==(const Scenario&) const = default;
};

/// Case metadata as exported to, and read back from, expectations.json.
struct CaseInfo
{
    std::string id;
    int scenario = 0;
    std::string title;
    Expectation expectation;

    bool operator==(const CaseInfo&) const = default;
};

struct ExpectationSet
{
    std::vector<CaseInfo> cases;
    std::vector<Scenario> scenarios;

    const CaseInfo* find(std::string_view id) const;
};

/// The 16 fixture cases, in scenario order.
const std::vector<TestCase>& build_library();
const TestCase& find_case(std::string_view id);
const std::vector<Scenario>& scenarios();

struct ManifestEntry
{
    std::string id;
    int scenario = 0;
    std::string file;
    std::string sha256;

    bool operator==(const ManifestEntry&) const = default;
};

struct Manifest
{
    std::vector<ManifestEntry> entries;
};

std::string manifest_json(const Manifest& manifest);
Manifest manifest_of(const std::vector<TestCase>& cases);
Manifest load_manifest(const std::filesystem::path& cases_dir);
/// `sha256:` digest of the library manifest; identifies the fixture set.
std::string library_id();

std::string expectations_json(const std::vector<TestCase>& cases);
ExpectationSet parse_expectations(std::string_view json_text);
ExpectationSet load_expectations(const std::filesystem::path& cases_dir);

/// Writes `<id>.cdx.json` per case plus manifest.json and expectations.json.
/// Throws IoFailure.
Manifest emit_sbom_files(const std::filesystem::path& dir);

} // namespace svstest::testlib
