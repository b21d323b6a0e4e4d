#include "svstest/vulndb.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>

namespace svstest::vulndb {

using nlohmann::json;

namespace {

// OSV ecosystem name -> purl type (and fixed namespace where the ecosystem
// implies one).
struct EcosystemMapping
{
    std::string_view type;
    std::string_view namespace_;
};

const std::map<std::string, EcosystemMapping, std::less<>>& ecosystems()
{
    static const std::map<std::string, EcosystemMapping, std::less<>> table{
        {"npm", {"npm", ""}},         {"Maven", {"maven", ""}},      {"PyPI", {"pypi", ""}},
        {"Go", {"golang", ""}},       {"crates.io", {"cargo", ""}},  {"RubyGems", {"gem", ""}},
        {"NuGet", {"nuget", ""}},     {"Packagist", {"composer", ""}}, {"Hex", {"hex", ""}},
        {"Pub", {"pub", ""}},         {"Debian", {"deb", "debian"}}, {"Ubuntu", {"deb", "ubuntu"}},
        {"Alpine", {"apk", "alpine"}}, {"SwiftURL", {"swift", ""}},  {"Hackage", {"hackage", ""}},
    };
    return table;
}

identifiers::Purl coordinates_from_package(const json& pkg)
{
    if (pkg.contains("purl") && pkg["purl"].is_string()) {
        try {
            return identifiers::coordinates_of(identifiers::parse_purl(pkg["purl"].get<std::string>()));
        } catch (const identifiers::MalformedPurl& e) {
            throw MalformedOsvRecord(std::string("invalid package purl: ") + e.what());
        }
    }
    if (!pkg.contains("ecosystem") || !pkg["ecosystem"].is_string() || !pkg.contains("name")
        || !pkg["name"].is_string())
        throw MalformedOsvRecord("package needs 'ecosystem' and 'name' (or 'purl')");

    std::string ecosystem = pkg["ecosystem"].get<std::string>();
    // Release-qualified ecosystems such as "Debian:12" map like their base.
    if (const auto colon = ecosystem.find(':'); colon != std::string::npos)
        ecosystem.resize(colon);
    const auto it = ecosystems().find(ecosystem);
    if (it == ecosystems().end())
        throw MalformedOsvRecord("unsupported ecosystem '" + ecosystem + "'");

    identifiers::Purl p;
    p.type = std::string(it->second.type);
    const auto name = pkg["name"].get<std::string>();
    if (p.type == "maven") {
        const auto colon = name.find(':');
        if (colon == std::string::npos)
            throw MalformedOsvRecord("maven package name must be 'group:artifact': " + name);
        p.namespace_ = name.substr(0, colon);
        p.name = name.substr(colon + 1);
    } else if (!it->second.namespace_.empty()) {
        p.namespace_ = std::string(it->second.namespace_);
        p.name = name;
    } else if (const auto slash = name.rfind('/'); slash != std::string::npos) {
        p.namespace_ = name.substr(0, slash); // npm scopes, Go module paths
        p.name = name.substr(slash + 1);
    } else {
        p.name = name;
    }
    if (p.name.empty())
        throw MalformedOsvRecord("empty package name");
    return p;
}

std::vector<VersionRange> ranges_from(const json& affected)
{
    std::vector<VersionRange> out;
    for (const auto& range : affected.value("ranges", json::array())) {
        const auto type = range.value("type", std::string{});
        if (type != "ECOSYSTEM" && type != "SEMVER")
            continue; // GIT ranges cannot be evaluated against package versions
        std::optional<VersionRange> open;
        for (const auto& event : range.value("events", json::array())) {
            if (event.contains("introduced")) {
                if (open)
                    out.push_back(*open);
                open = VersionRange{event["introduced"].get<std::string>(), std::nullopt, std::nullopt};
            } else if (event.contains("fixed") || event.contains("last_affected")) {
                if (!open)
                    open = VersionRange{};
                if (event.contains("fixed"))
                    open->fixed = event["fixed"].get<std::string>();
                else
                    open->last_affected = event["last_affected"].get<std::string>();
                out.push_back(*open);
                open.reset();
            }
        }
        if (open)
            out.push_back(*open);
    }
    return out;
}

VulnRecord record_from_osv(const json& doc)
{
    if (!doc.is_object())
        throw MalformedOsvRecord("OSV record must be an object");
    if (!doc.contains("id") || !doc["id"].is_string() || doc["id"].get<std::string>().empty())
        throw MalformedOsvRecord("OSV record needs a string 'id'");

    VulnRecord r;
    r.id = doc["id"].get<std::string>();
    r.aliases = doc.value("aliases", std::vector<std::string>{});
    r.summary = doc.value("summary", std::string{});

    const auto affected_list = doc.value("affected", json::array());
    if (!affected_list.is_array())
        throw MalformedOsvRecord("'affected' must be an array");
    for (const auto& affected : affected_list) {
        if (!affected.is_object() || !affected.contains("package"))
            throw MalformedOsvRecord("affected entry needs a 'package'");
        const auto ranges = ranges_from(affected);
        const auto versions = affected.value("versions", std::vector<std::string>{});

        PurlCriterion pc;
        pc.coordinates = coordinates_from_package(affected["package"]);
        pc.ranges = ranges;
        if (!versions.empty())
            pc.explicit_versions = versions;
        r.purl_criteria.push_back(std::move(pc));

        // CPE patterns are not part of core OSV; databases attach them here.
        const auto specific = affected.value("database_specific", json::object());
        for (const auto& cpe : specific.value("cpes", std::vector<std::string>{})) {
            identifiers::Wfn pattern;
            try {
                pattern = identifiers::parse_cpe(cpe);
            } catch (const identifiers::MalformedCpe& e) {
                throw MalformedOsvRecord(std::string("invalid CPE in database_specific.cpes: ") + e.what());
            }
            if (!ranges.empty()) {
                for (const auto& range : ranges)
                    r.cpe_criteria.push_back({pattern, range});
            }
            for (const auto& v : versions) {
                auto exact = pattern;
                exact[identifiers::CpeField::version] = identifiers::CpeAttribute::plain(v);
                r.cpe_criteria.push_back({exact, std::nullopt});
            }
            if (ranges.empty() && versions.empty())
                r.cpe_criteria.push_back({pattern, std::nullopt});
        }
    }

    // Promote a CVE alias to the record id; the original id becomes an alias.
    if (r.id.rfind("CVE-", 0) != 0) {
        std::vector<std::string> cves;
        std::copy_if(r.aliases.begin(), r.aliases.end(), std::back_inserter(cves),
                     [](const std::string& a) { return a.rfind("CVE-", 0) == 0; });
        if (!cves.empty()) {
            std::sort(cves.begin(), cves.end());
            std::erase(r.aliases, cves.front());
            r.aliases.push_back(r.id);
            r.id = cves.front();
        }
    }
    return r;
}

void merge_into(VulnRecord& into, VulnRecord&& from)
{
    into.aliases.insert(into.aliases.end(), from.aliases.begin(), from.aliases.end());
    if (into.summary.empty() || (!from.summary.empty() && from.summary < into.summary))
        into.summary = std::move(from.summary);
    for (auto& c : from.cpe_criteria)
        into.cpe_criteria.push_back(std::move(c));
    for (auto& c : from.purl_criteria)
        into.purl_criteria.push_back(std::move(c));
}

} // namespace

Snapshot ingest_osv(const std::vector<OsvDocument>& documents, std::string created_at,
                    std::vector<IngestReportEntry>* report)
{
    std::map<std::string, VulnRecord> merged;
    for (const auto& document : documents) {
        json doc;
        try {
            doc = json::parse(document.text);
        } catch (const json::parse_error& e) {
            if (report)
                report->push_back({document.source, std::string("not valid JSON: ") + e.what()});
            continue;
        }
        const json items = doc.is_array() ? doc : json::array({doc});
        for (std::size_t i = 0; i < items.size(); ++i) {
            try {
                auto record = record_from_osv(items[i]);
                auto [it, inserted] = merged.try_emplace(record.id, record);
                if (!inserted)
                    merge_into(it->second, std::move(record));
            } catch (const std::exception& e) {
                if (report) {
                    const auto label = doc.is_array() ? document.source + "[" + std::to_string(i) + "]" : document.source;
                    report->push_back({label, e.what()});
                }
            }
        }
    }

    std::vector<VulnRecord> records;
    for (auto& [_, r] : merged)
        records.push_back(std::move(r));
    return Snapshot::build(std::move(records), std::move(created_at));
}

} // namespace svstest::vulndb
