#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace svstest::lint {

class UnreadableFile : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct Detector
{
    std::string_view id;
    std::string_view description;
    int scenario = 0; ///< fixture scenario whose failure mode the condition triggers
};

const std::vector<Detector>& detectors();

struct LintFinding
{
    std::string file;
    std::string detector_id;
    std::string locator; ///< component reference, root key or section name
    std::string detail;
    bool reconstructable = false; ///< D_NO_IDENTIFIER only

    bool operator==(const LintFinding&) const = default;
};

/// Lints one document. Throws sbom::SbomError when it is not CycloneDX JSON.
std::vector<LintFinding> lint_document(std::string_view raw, const std::string& file_label);
/// Throws UnreadableFile, or sbom::SbomError as above.
std::vector<LintFinding> lint_file(const std::filesystem::path& path);

struct DetectorCount
{
    std::size_t occurrences = 0;
    std::size_t files = 0;
    std::size_t reconstructable = 0;

    bool operator==(const DetectorCount&) const = default;
};

struct CorpusStats
{
    std::size_t files_scanned = 0;
    std::size_t files_unparseable = 0;
    std::map<std::string, DetectorCount> counts; ///< every registry detector present
    std::vector<std::string> unparseable;        ///< sorted relative paths

    CorpusStats();
    /// Adds one linted file.
    void add(const std::vector<LintFinding>& findings);
    CorpusStats& operator+=(const CorpusStats& other);

    bool operator==(const CorpusStats&) const = default;
};

/// All `*.json` files below `dir`, recursively.
CorpusStats lint_corpus(const std::filesystem::path& dir);

/// Schema `svs-test/lint-stats/1`.
std::string stats_json(const CorpusStats& stats);

} // namespace svstest::lint
