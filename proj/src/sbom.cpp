#include "svstest/sbom.hpp"

#include "svstest/identifiers/cpe.hpp"
#include "svstest/identifiers/purl.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace svstest::sbom {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string escape_pointer_token(std::string_view token)
{
    std::string out;
    for (char c : token) {
        if (c == '~')
            out += "~0";
        else if (c == '/')
            out += "~1";
        else
            out.push_back(c);
    }
    return out;
}

// Observes the raw token stream to recover document key order and duplicate
// keys, neither of which survive in the object model.
class KeyStreamObserver
{
public:
    std::vector<std::string> root_keys;
    std::vector<ValidationIssue> duplicates;

    bool operator()(int /*depth*/, nlohmann::json::parse_event_t event, ordered_json& parsed)
    {
        using E = nlohmann::json::parse_event_t;
        switch (event) {
        case E::object_start:
        case E::array_start:
            stack_.push_back(Frame{event == E::object_start, child_pointer(), {}, 0, {}});
            break;
        case E::key: {
            auto& top = stack_.back();
            top.key = parsed.get<std::string>();
            if (!top.seen.insert(top.key).second) {
                duplicates.push_back({IssueCode::Schema, "duplicate key '" + top.key + "' (last value wins)",
                                      top.pointer + "/" + escape_pointer_token(top.key)});
            } else if (stack_.size() == 1) {
                root_keys.push_back(top.key);
            }
            break;
        }
        case E::value:
            element_done();
            break;
        case E::object_end:
        case E::array_end:
            stack_.pop_back();
            element_done();
            break;
        }
        return true;
    }

private:
    struct Frame
    {
        bool is_object;
        std::string pointer;
        std::string key;
        std::size_t index;
        std::set<std::string> seen;
    };

    std::string child_pointer() const
    {
        if (stack_.empty())
            return "";
        const auto& parent = stack_.back();
        if (parent.is_object)
            return parent.pointer + "/" + escape_pointer_token(parent.key);
        return parent.pointer + "/" + std::to_string(parent.index);
    }

    void element_done()
    {
        if (!stack_.empty() && !stack_.back().is_object)
            ++stack_.back().index;
    }

    std::vector<Frame> stack_;
};

std::optional<std::string> optional_string(const ordered_json& obj, const char* key,
                                           const std::string& pointer, std::vector<ValidationIssue>& issues)
{
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        return std::nullopt;
    if (!it->is_string()) {
        issues.push_back({IssueCode::Schema, std::string("'") + key + "' must be a string",
                          pointer + "/" + key});
        return std::nullopt;
    }
    return it->get<std::string>();
}

class Extractor
{
public:
    explicit Extractor(Bom& bom)
        : bom_(bom)
    {
    }

    void components(const ordered_json& list, const std::string& pointer)
    {
        if (!list.is_array()) {
            issue(pointer, "'components' must be an array");
            return;
        }
        for (std::size_t i = 0; i < list.size(); ++i)
            component(list[i], pointer + "/" + std::to_string(i));
    }

    void component(const ordered_json& obj, const std::string& pointer)
    {
        if (!obj.is_object()) {
            issue(pointer, "component must be an object");
            return;
        }
        auto& issues = bom_.validation_issues;
        Component c;
        c.bom_ref = optional_string(obj, "bom-ref", pointer, issues);
        c.type = optional_string(obj, "type", pointer, issues).value_or("");
        if (c.type.empty())
            issue(pointer + "/type", "component 'type' is required");
        c.publisher = optional_string(obj, "publisher", pointer, issues);
        c.version_field = optional_string(obj, "version", pointer, issues);
        c.cpe = optional_string(obj, "cpe", pointer, issues);
        c.purl = optional_string(obj, "purl", pointer, issues);

        std::size_t pos = 0;
        for (const auto& item : obj.items()) {
            if (item.key() == "cpe")
                c.raw_order.cpe = pos;
            else if (item.key() == "purl")
                c.raw_order.purl = pos;
            ++pos;
        }

        const auto name = optional_string(obj, "name", pointer, issues);
        if (!name || name->empty()) {
            issue(pointer + "/name", "component 'name' is required");
        } else {
            c.name = *name;
            c.index = bom_.components.size() + 1;
            bom_.components.push_back(std::move(c));
        }

        if (const auto nested = obj.find("components"); nested != obj.end())
            components(*nested, pointer + "/components");
    }

    void dependencies(const ordered_json& list)
    {
        if (!list.is_array()) {
            issue("/dependencies", "'dependencies' must be an array");
            return;
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto pointer = "/dependencies/" + std::to_string(i);
            const auto& d = list[i];
            if (!d.is_object() || !d.contains("ref") || !d["ref"].is_string()) {
                issue(pointer, "dependency needs a string 'ref'");
                continue;
            }
            DependencyEdge edge{d["ref"].get<std::string>(), {}};
            if (const auto on = d.find("dependsOn"); on != d.end() && on->is_array()) {
                for (const auto& r : *on) {
                    if (r.is_string())
                        edge.depends_on.push_back(r.get<std::string>());
                }
            }
            bom_.dependencies.push_back(std::move(edge));
        }
    }

    void vulnerabilities(const ordered_json& list)
    {
        if (!list.is_array()) {
            issue("/vulnerabilities", "'vulnerabilities' must be an array");
            return;
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto pointer = "/vulnerabilities/" + std::to_string(i);
            const auto& v = list[i];
            if (!v.is_object()) {
                issue(pointer, "vulnerability must be an object");
                continue;
            }
            VexStatement s;
            s.vuln_id = optional_string(v, "id", pointer, bom_.validation_issues).value_or("");
            if (s.vuln_id.empty()) {
                issue(pointer + "/id", "vulnerability 'id' is required");
                continue;
            }
            if (const auto src = v.find("source"); src != v.end() && src->is_object())
                s.source_name = optional_string(*src, "name", pointer + "/source", bom_.validation_issues);
            if (const auto an = v.find("analysis"); an != v.end() && an->is_object())
                s.analysis_state = optional_string(*an, "state", pointer + "/analysis", bom_.validation_issues);
            if (const auto aff = v.find("affects"); aff != v.end())
                affects(*aff, pointer + "/affects", s);
            bom_.vulnerabilities.push_back(std::move(s));
        }
    }

private:
    void affects(const ordered_json& list, const std::string& pointer, VexStatement& s)
    {
        if (!list.is_array()) {
            issue(pointer, "'affects' must be an array");
            return;
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto p = pointer + "/" + std::to_string(i);
            const auto& a = list[i];
            if (!a.is_object() || !a.contains("ref") || !a["ref"].is_string()) {
                issue(p, "affects entry needs a string 'ref'");
                continue;
            }
            VexAffects entry{a["ref"].get<std::string>(), {}};
            if (const auto vs = a.find("versions"); vs != a.end() && vs->is_array()) {
                for (std::size_t j = 0; j < vs->size(); ++j) {
                    const auto& item = (*vs)[j];
                    const auto vp = p + "/versions/" + std::to_string(j);
                    if (!item.is_object() || !item.contains("version") || !item["version"].is_string())
                        continue; // range-only entries are not modeled
                    AffectedVersion av{item["version"].get<std::string>(), VersionStatus::Affected};
                    const auto status = item.value("status", std::string("affected"));
                    if (status == "affected") {
                        av.status = VersionStatus::Affected;
                    } else if (status == "unaffected") {
                        av.status = VersionStatus::Unaffected;
                    } else if (status == "unknown") {
                        av.status = VersionStatus::Unknown;
                    } else {
                        issue(vp + "/status", "unknown version status '" + status + "'");
                        continue;
                    }
                    entry.versions.push_back(std::move(av));
                }
            }
            s.affects.push_back(std::move(entry));
        }
    }

    void issue(std::string location, std::string detail)
    {
        bom_.validation_issues.push_back({IssueCode::Schema, std::move(detail), std::move(location)});
    }

    Bom& bom_;
};

void check_root_keys(Bom& bom)
{
    const auto& order = cyclonedx_root_order();
    std::size_t max_rank = 0;
    std::string max_key;
    for (const auto& key : bom.root_keys) {
        const auto it = std::find(order.begin(), order.end(), key);
        if (it == order.end()) {
            bom.validation_issues.push_back(
                {IssueCode::UnknownRootKey, "'" + key + "' is not a CycloneDX root element", key});
            continue;
        }
        const auto rank = static_cast<std::size_t>(it - order.begin()) + 1;
        if (rank < max_rank) {
            bom.validation_issues.push_back(
                {IssueCode::RootOrder, "'" + key + "' must precede '" + max_key + "'", key});
        } else {
            max_rank = rank;
            max_key = key;
        }
    }
}

} // namespace

std::string_view to_string(IssueCode code)
{
    switch (code) {
    case IssueCode::RootOrder: return "ROOT_ORDER";
    case IssueCode::UnknownRootKey: return "UNKNOWN_ROOT_KEY";
    case IssueCode::Schema: return "SCHEMA";
    }
    return "?";
}

std::string Component::reference() const
{
    return bom_ref ? *bom_ref : "#" + std::to_string(index);
}

bool Bom::has_issue(IssueCode code) const
{
    return std::any_of(validation_issues.begin(), validation_issues.end(),
                       [code](const ValidationIssue& i) { return i.code == code; });
}

const Component* Bom::find_by_ref(std::string_view bom_ref) const
{
    for (const auto& c : components) {
        if (c.bom_ref && *c.bom_ref == bom_ref)
            return &c;
    }
    return nullptr;
}

const std::vector<std::string_view>& cyclonedx_root_order()
{
    static const std::vector<std::string_view> order{
        "$schema",      "bomFormat",          "specVersion",  "serialNumber", "version",
        "metadata",     "components",         "services",     "externalReferences",
        "dependencies", "compositions",       "properties",   "vulnerabilities",
        "annotations",  "formulation",        "declarations", "definitions",  "signature"};
    return order;
}

Bom parse_bom(std::string_view raw)
{
    KeyStreamObserver observer;
    ordered_json doc;
    try {
        doc = ordered_json::parse(raw.begin(), raw.end(), std::ref(observer));
    } catch (const nlohmann::json::parse_error& e) {
        throw SbomError(SbomError::Kind::NotJson, std::string("not valid JSON: ") + e.what());
    }

    if (!doc.is_object() || !doc.contains("bomFormat") || doc["bomFormat"] != "CycloneDX")
        throw SbomError(SbomError::Kind::NotCycloneDx, "missing \"bomFormat\": \"CycloneDX\"");

    Bom bom;
    bom.root_keys = std::move(observer.root_keys);
    bom.validation_issues = std::move(observer.duplicates);
    check_root_keys(bom);

    auto& issues = bom.validation_issues;
    if (const auto sv = optional_string(doc, "specVersion", "", issues))
        bom.spec_version = *sv;
    else
        issues.push_back({IssueCode::Schema, "'specVersion' is required", "/specVersion"});
    bom.serial_number = optional_string(doc, "serialNumber", "", issues);
    if (const auto v = doc.find("version"); v != doc.end() && !v->is_number_integer())
        issues.push_back({IssueCode::Schema, "'version' must be an integer", "/version"});

    if (const auto md = doc.find("metadata"); md != doc.end()) {
        if (md->is_object()) {
            Metadata meta;
            meta.timestamp = optional_string(*md, "timestamp", "/metadata", issues);
            if (const auto comp = md->find("component"); comp != md->end() && comp->is_object())
                meta.component_name = optional_string(*comp, "name", "/metadata/component", issues);
            bom.metadata = std::move(meta);
        } else {
            issues.push_back({IssueCode::Schema, "'metadata' must be an object", "/metadata"});
        }
    }

    Extractor extract(bom);
    if (const auto it = doc.find("components"); it != doc.end())
        extract.components(*it, "/components");
    if (const auto it = doc.find("dependencies"); it != doc.end())
        extract.dependencies(*it);
    if (const auto it = doc.find("vulnerabilities"); it != doc.end())
        extract.vulnerabilities(*it);
    return bom;
}

std::optional<std::string> effective_version(const Component& component)
{
    if (component.version_field && !component.version_field->empty())
        return component.version_field;
    if (component.purl) {
        try {
            if (auto p = identifiers::parse_purl(*component.purl); p.version)
                return p.version;
        } catch (const identifiers::MalformedPurl&) {
        }
    }
    if (component.cpe) {
        try {
            const auto wfn = identifiers::parse_cpe(*component.cpe);
            const auto& v = wfn[identifiers::CpeField::version];
            if (v.is_literal() && !v.has_wildcards())
                return v.unescaped();
        } catch (const identifiers::MalformedCpe&) {
        }
    }
    return std::nullopt;
}

VexIndex vex_suppressions(const Bom& bom)
{
    VexIndex index;
    auto record = [&](const std::string& ref, const std::string& vuln, VexDisposition d) {
        auto [it, inserted] = index.dispositions.emplace(std::make_pair(ref, vuln), d);
        if (!inserted && d == VexDisposition::Confirmed)
            it->second = d;
    };

    for (const auto& statement : bom.vulnerabilities) {
        for (const auto& affected : statement.affects) {
            const Component* component = bom.find_by_ref(affected.ref);
            if (!component) {
                index.dangling.push_back({statement.vuln_id, affected.ref});
                continue;
            }
            const auto version = effective_version(*component);
            if (affected.versions.empty()) {
                // No version list: fall back to the analysis state.
                const auto state = statement.analysis_state.value_or("");
                if (state == "not_affected" || state == "false_positive")
                    record(component->reference(), statement.vuln_id, VexDisposition::Suppressed);
                else if (state == "exploitable")
                    record(component->reference(), statement.vuln_id, VexDisposition::Confirmed);
                continue;
            }
            for (const auto& v : affected.versions) {
                if (!version || v.version != *version)
                    continue;
                if (v.status == VersionStatus::Unaffected)
                    record(component->reference(), statement.vuln_id, VexDisposition::Suppressed);
                else if (v.status == VersionStatus::Affected)
                    record(component->reference(), statement.vuln_id, VexDisposition::Confirmed);
            }
        }
    }
    return index;
}

} // namespace svstest::sbom
