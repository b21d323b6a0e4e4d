#include "svstest/lint.hpp"

#include "svstest/identifiers/cpe.hpp"
#include "svstest/identifiers/purl.hpp"
#include "svstest/sbom.hpp"
#include "svstest/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace svstest::lint {

namespace {

constexpr std::size_t kVersionToken = 3; // part, vendor, product, version, ...

std::string version_detail(std::string_view cpe)
{
    return "version attribute of " + std::string(cpe);
}

} // namespace

const std::vector<Detector>& detectors()
{
    static const std::vector<Detector> registry{
        {"D_CPE_BLANK", "CPE version attribute left blank", 2},
        {"D_CPE_ASTERISK", "CPE version attribute set to *", 2},
        {"D_CPE_HYPHEN", "CPE attribute set to - (not applicable)", 2},
        {"D_PURL_NO_VERSION", "purl without version", 3},
        {"D_NO_IDENTIFIER", "component with neither CPE nor purl", 5},
        {"D_NO_VERSION_FIELD", "component without a version field", 1},
        {"D_ROOT_ORDER", "root elements out of normative order", 8},
        {"D_UNKNOWN_ROOT", "root element not defined by the format", 8},
        {"D_VEX_PRESENT", "embedded vulnerability (VEX) statements", 7},
        {"D_METADATA_AT_END", "metadata is the last root element", 8},
    };
    return registry;
}

std::vector<LintFinding> lint_document(std::string_view raw, const std::string& file_label)
{
    const auto bom = sbom::parse_bom(raw);
    std::vector<LintFinding> out;
    const auto emit = [&](std::string id, std::string locator, std::string detail, bool reconstructable = false) {
        out.push_back({file_label, std::move(id), std::move(locator), std::move(detail), reconstructable});
    };

    for (const auto& c : bom.components) {
        const auto where = c.reference();
        if (c.cpe) {
            try {
                const auto tokens = identifiers::cpe_tokens(*c.cpe);
                const auto& version = tokens.at(kVersionToken);
                if (version.empty())
                    emit("D_CPE_BLANK", where, version_detail(*c.cpe));
                else if (version == "*")
                    emit("D_CPE_ASTERISK", where, version_detail(*c.cpe));
                const auto hyphen = std::find(tokens.begin(), tokens.end(), "-");
                if (hyphen != tokens.end())
                    emit("D_CPE_HYPHEN", where, "attribute " + std::to_string(hyphen - tokens.begin() + 1) + " of " + *c.cpe);
            } catch (const identifiers::MalformedCpe&) {
                // a broken CPE says nothing about logical values
            }
        }
        if (c.purl) {
            try {
                if (!identifiers::parse_purl(*c.purl).version)
                    emit("D_PURL_NO_VERSION", where, *c.purl);
            } catch (const identifiers::MalformedPurl&) {
            }
        }
        if (!c.cpe && !c.purl) {
            const bool reconstructable = c.publisher && !c.publisher->empty() && !c.name.empty() && c.version_field
                                         && !c.version_field->empty();
            emit("D_NO_IDENTIFIER", where, c.name + (reconstructable ? ": publisher, name and version present" : ""),
                 reconstructable);
        }
        if (!c.version_field)
            emit("D_NO_VERSION_FIELD", where, c.name);
    }

    if (bom.has_issue(sbom::IssueCode::RootOrder))
        emit("D_ROOT_ORDER", "/", "root keys in document order: " + [&] {
            std::string keys;
            for (const auto& k : bom.root_keys)
                keys += (keys.empty() ? "" : ", ") + k;
            return keys;
        }());
    for (const auto& issue : bom.validation_issues) {
        if (issue.code == sbom::IssueCode::UnknownRootKey)
            emit("D_UNKNOWN_ROOT", issue.location, issue.detail);
    }
    if (!bom.vulnerabilities.empty())
        emit("D_VEX_PRESENT", "vulnerabilities", std::to_string(bom.vulnerabilities.size()) + " statement(s)");
    if (bom.root_keys.size() > 1 && bom.root_keys.back() == "metadata")
        emit("D_METADATA_AT_END", "metadata", "metadata follows all other root elements");
    return out;
}

std::vector<LintFinding> lint_file(const std::filesystem::path& path)
{
    std::string raw;
    try {
        raw = read_file(path);
    } catch (const IoFailure& e) {
        throw UnreadableFile(e.what());
    }
    return lint_document(raw, path.string());
}

CorpusStats::CorpusStats()
{
    for (const auto& d : detectors())
        counts[std::string(d.id)];
}

void CorpusStats::add(const std::vector<LintFinding>& findings)
{
    ++files_scanned;
    std::set<std::string> seen;
    for (const auto& f : findings) {
        auto& c = counts[f.detector_id];
        ++c.occurrences;
        if (f.reconstructable)
            ++c.reconstructable;
        if (seen.insert(f.detector_id).second)
            ++c.files;
    }
}

CorpusStats& CorpusStats::operator+=(const CorpusStats& other)
{
    files_scanned += other.files_scanned;
    files_unparseable += other.files_unparseable;
    for (const auto& [id, c] : other.counts) {
        auto& mine = counts[id];
        mine.occurrences += c.occurrences;
        mine.files += c.files;
        mine.reconstructable += c.reconstructable;
    }
    unparseable.insert(unparseable.end(), other.unparseable.begin(), other.unparseable.end());
    std::sort(unparseable.begin(), unparseable.end());
    return *this;
}

CorpusStats lint_corpus(const std::filesystem::path& dir)
{
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (auto it = std::filesystem::recursive_directory_iterator(dir, ec); !ec && it != std::filesystem::recursive_directory_iterator();
         it.increment(ec)) {
        if (it->is_regular_file(ec) && it->path().extension() == ".json")
            files.push_back(it->path());
    }
    if (ec)
        throw UnreadableFile("cannot walk " + dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());

    CorpusStats stats;
    for (const auto& f : files) {
        try {
            stats.add(lint_file(f));
        } catch (const sbom::SbomError&) {
            ++stats.files_unparseable;
            stats.unparseable.push_back(std::filesystem::relative(f, dir).generic_string());
        } catch (const UnreadableFile&) {
            ++stats.files_unparseable;
            stats.unparseable.push_back(std::filesystem::relative(f, dir).generic_string());
        }
    }
    return stats;
}

std::string stats_json(const CorpusStats& stats)
{
    nlohmann::ordered_json j;
    j["schema"] = "svs-test/lint-stats/1";
    j["files_scanned"] = stats.files_scanned;
    j["files_unparseable"] = stats.files_unparseable;
    j["unparseable"] = stats.unparseable;
    j["detectors"] = nlohmann::ordered_json::object();
    for (const auto& d : detectors()) {
        const auto& c = stats.counts.at(std::string(d.id));
        nlohmann::ordered_json entry{{"occurrences", c.occurrences}, {"files", c.files}};
        if (d.id == "D_NO_IDENTIFIER")
            entry["reconstructable"] = c.reconstructable;
        j["detectors"][std::string(d.id)] = entry;
    }
    return j.dump(2) + "\n";
}

} // namespace svstest::lint
