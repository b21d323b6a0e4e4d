#include "svstest/vulndb.hpp"

#include "svstest/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>

namespace svstest::vulndb {

using nlohmann::json;
using identifiers::canonicalize_purl;
using identifiers::format_cpe;

namespace {

json range_to_json(const VersionRange& r)
{
    json j{{"introduced", r.introduced}};
    if (r.fixed)
        j["fixed"] = *r.fixed;
    if (r.last_affected)
        j["last_affected"] = *r.last_affected;
    return j;
}

VersionRange range_from_json(const json& j)
{
    VersionRange r;
    r.introduced = j.value("introduced", std::string("0"));
    if (j.contains("fixed"))
        r.fixed = j.at("fixed").get<std::string>();
    if (j.contains("last_affected"))
        r.last_affected = j.at("last_affected").get<std::string>();
    if (r.fixed && r.last_affected)
        throw MalformedSnapshot("range sets both 'fixed' and 'last_affected'");
    return r;
}

json cpe_criterion_to_json(const CpeCriterion& c)
{
    json j{{"pattern", format_cpe(c.pattern)}};
    if (c.version_range)
        j["version_range"] = range_to_json(*c.version_range);
    return j;
}

json purl_criterion_to_json(const PurlCriterion& c)
{
    json j{{"coordinates", canonicalize_purl(c.coordinates)}, {"ranges", json::array()}};
    for (const auto& r : c.ranges)
        j["ranges"].push_back(range_to_json(r));
    if (c.explicit_versions)
        j["explicit_versions"] = *c.explicit_versions;
    return j;
}

json record_to_json(const VulnRecord& r)
{
    json j{{"id", r.id}, {"aliases", r.aliases}, {"summary", r.summary},
           {"cpe_criteria", json::array()}, {"purl_criteria", json::array()}};
    for (const auto& c : r.cpe_criteria)
        j["cpe_criteria"].push_back(cpe_criterion_to_json(c));
    for (const auto& c : r.purl_criteria)
        j["purl_criteria"].push_back(purl_criterion_to_json(c));
    return j;
}

VulnRecord record_from_json(const json& j)
{
    VulnRecord r;
    r.id = j.at("id").get<std::string>();
    r.aliases = j.value("aliases", std::vector<std::string>{});
    r.summary = j.value("summary", std::string{});
    for (const auto& c : j.value("cpe_criteria", json::array())) {
        CpeCriterion crit{identifiers::parse_cpe(c.at("pattern").get<std::string>()), std::nullopt};
        if (c.contains("version_range"))
            crit.version_range = range_from_json(c.at("version_range"));
        r.cpe_criteria.push_back(std::move(crit));
    }
    for (const auto& c : j.value("purl_criteria", json::array())) {
        PurlCriterion crit;
        crit.coordinates = identifiers::parse_purl(c.at("coordinates").get<std::string>());
        if (crit.coordinates.version)
            throw MalformedSnapshot("purl criterion coordinates must not carry a version: "
                                    + c.at("coordinates").get<std::string>());
        for (const auto& rj : c.value("ranges", json::array()))
            crit.ranges.push_back(range_from_json(rj));
        if (c.contains("explicit_versions"))
            crit.explicit_versions = c.at("explicit_versions").get<std::vector<std::string>>();
        r.purl_criteria.push_back(std::move(crit));
    }
    return r;
}

template <typename T, typename ToJson>
void sort_unique_by_json(std::vector<T>& items, ToJson to_json)
{
    std::vector<std::pair<std::string, T>> keyed;
    for (auto& item : items)
        keyed.emplace_back(to_json(item).dump(), std::move(item));
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    keyed.erase(std::unique(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
                keyed.end());
    items.clear();
    for (auto& [_, item] : keyed)
        items.push_back(std::move(item));
}

void canonicalize(VulnRecord& r)
{
    std::sort(r.aliases.begin(), r.aliases.end());
    r.aliases.erase(std::unique(r.aliases.begin(), r.aliases.end()), r.aliases.end());
    std::erase(r.aliases, r.id);
    for (auto& c : r.purl_criteria) {
        c.coordinates = identifiers::coordinates_of(c.coordinates);
        sort_unique_by_json(c.ranges, range_to_json);
        if (c.explicit_versions) {
            auto& v = *c.explicit_versions;
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
    }
    sort_unique_by_json(r.cpe_criteria, cpe_criterion_to_json);
    sort_unique_by_json(r.purl_criteria, purl_criterion_to_json);
}

json records_to_json(const std::vector<VulnRecord>& records)
{
    json arr = json::array();
    for (const auto& r : records)
        arr.push_back(record_to_json(r));
    return arr;
}

} // namespace

Snapshot Snapshot::build(std::vector<VulnRecord> records, std::string created_at)
{
    for (auto& r : records)
        canonicalize(r);
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

    std::set<std::string> ids;
    for (const auto& r : records) {
        if (r.id.empty())
            throw MalformedSnapshot("record without id");
        if (!ids.insert(r.id).second)
            throw MalformedSnapshot("duplicate record id " + r.id);
    }
    for (const auto& r : records) {
        for (const auto& a : r.aliases) {
            if (ids.count(a))
                throw MalformedSnapshot("alias " + a + " of " + r.id + " collides with a record id");
        }
    }

    Snapshot s;
    s.snapshot_id = "sha256:" + sha256_hex(records_to_json(records).dump());
    s.created_at = std::move(created_at);
    s.records = std::move(records);
    return s;
}

const VulnRecord* Snapshot::find(std::string_view id) const
{
    const auto it = std::lower_bound(records.begin(), records.end(), id,
                                     [](const VulnRecord& r, std::string_view key) { return r.id < key; });
    return it != records.end() && it->id == id ? &*it : nullptr;
}

std::string serialize_snapshot(const Snapshot& snapshot)
{
    nlohmann::ordered_json out;
    out["schema"] = kSnapshotSchema;
    out["snapshot_id"] = snapshot.snapshot_id;
    out["created_at"] = snapshot.created_at;
    out["records"] = nlohmann::ordered_json::parse(records_to_json(snapshot.records).dump());
    return out.dump(2) + "\n";
}

Snapshot load_snapshot(std::string_view json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw MalformedSnapshot(std::string("snapshot is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("schema", std::string{}) != kSnapshotSchema)
        throw MalformedSnapshot("not a " + std::string(kSnapshotSchema) + " snapshot");

    std::vector<VulnRecord> records;
    try {
        for (const auto& r : doc.at("records"))
            records.push_back(record_from_json(r));
    } catch (const MalformedSnapshot&) {
        throw;
    } catch (const std::exception& e) {
        throw MalformedSnapshot(std::string("invalid snapshot record: ") + e.what());
    }
    auto snapshot = Snapshot::build(std::move(records), doc.value("created_at", std::string{}));
    const auto stored = doc.value("snapshot_id", std::string{});
    if (stored != snapshot.snapshot_id)
        throw MalformedSnapshot("snapshot_id " + stored + " does not match content digest " + snapshot.snapshot_id);
    return snapshot;
}

Snapshot load_snapshot_file(const std::filesystem::path& path)
{
    return load_snapshot(read_file(path));
}

std::vector<CpeHit> lookup_by_cpe(const Snapshot& snapshot, const identifiers::Wfn& component,
                                  identifiers::NaVersionPolicy policy)
{
    using identifiers::CpeField;
    const auto& version = component[CpeField::version];
    const bool concrete = version.is_literal() && !version.has_wildcards();

    std::vector<CpeHit> hits;
    for (const auto& record : snapshot.records) {
        for (const auto& criterion : record.cpe_criteria) {
            if (!identifiers::cpe_names_match(component, criterion.pattern, policy))
                continue;
            if (criterion.version_range) {
                if (concrete && !criterion.version_range->contains(version.unescaped()))
                    continue;
                // NA has no place inside a version range unless treated as unknown.
                if (version.is_na() && policy == identifiers::NaVersionPolicy::Strict)
                    continue;
            }
            hits.push_back({&record, &criterion});
            break;
        }
    }
    return hits;
}

std::vector<PurlHit> lookup_by_purl(const Snapshot& snapshot, const identifiers::Purl& component,
                                    VersionlessPolicy versionless_policy)
{
    std::vector<PurlHit> hits;
    for (const auto& record : snapshot.records) {
        for (const auto& criterion : record.purl_criteria) {
            if (!identifiers::purl_coordinates_match(component, criterion.coordinates))
                continue;
            bool affected = false;
            if (!component.version) {
                affected = versionless_policy == VersionlessPolicy::Wildcard;
            } else {
                const auto& v = *component.version;
                if (criterion.explicit_versions) {
                    affected = std::any_of(criterion.explicit_versions->begin(), criterion.explicit_versions->end(),
                                           [&](const std::string& e) { return compare_versions(v, e) == 0; });
                }
                affected = affected
                    || std::any_of(criterion.ranges.begin(), criterion.ranges.end(),
                                   [&](const VersionRange& r) { return r.contains(v); });
            }
            if (affected) {
                hits.push_back({&record, &criterion});
                break;
            }
        }
    }
    return hits;
}

} // namespace svstest::vulndb
