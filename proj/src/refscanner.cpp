#include "svstest/refscanner.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <sstream>

namespace svstest::refscanner {

using identifiers::CpeAttribute;
using identifiers::CpeField;
using ordered_json = nlohmann::ordered_json;

void ScanConfig::validate() const
{
    if (!use_cpe && !use_purl)
        throw std::invalid_argument("scan config must enable CPE or purl matching");
}

const std::vector<Profile>& profiles()
{
    static const std::vector<Profile> all = [] {
        const ScanConfig ideal;
        std::vector<Profile> out;
        out.push_back({"IDEAL", "all identifiers, versionless purls as wildcards, VEX applied, invalid BOMs rejected", ideal});

        auto purl_only = ideal;
        purl_only.use_cpe = false;
        out.push_back({"PURL_ONLY", "CPE identifiers ignored (and never reconstructed)", purl_only});

        auto version_field = ideal;
        version_field.require_version_field = true;
        out.push_back({"VERSION_FIELD_DEPENDENT", "versions read from the CycloneDX version field only", version_field});

        auto no_vex = ideal;
        no_vex.process_vex = false;
        out.push_back({"NO_VEX", "embedded VEX statements ignored", no_vex});

        auto lenient = ideal;
        lenient.reject_invalid_root = false;
        lenient.reject_root_order = false;
        out.push_back({"LENIENT", "malformed root structure accepted without notice", lenient});
        return out;
    }();
    return all;
}

const Profile& find_profile(std::string_view name)
{
    for (const auto& p : profiles()) {
        if (p.name == name)
            return p;
    }
    throw UnknownProfile("unknown profile '" + std::string(name) + "'");
}

std::string_view to_string(MatchedVia via)
{
    return via == MatchedVia::Cpe ? "CPE" : "PURL";
}

namespace {

std::string label_of(const sbom::Component& c)
{
    return "Component " + c.reference() + " (" + c.name + ")";
}

struct Note
{
    std::string code;
    std::string reason;
};

struct Queries
{
    std::vector<identifiers::Wfn> cpes;
    std::vector<identifiers::Purl> purls;
    std::vector<Note> notes;

    bool empty() const { return cpes.empty() && purls.empty(); }
};

Queries queries_for(const sbom::Component& c, const ScanConfig& config)
{
    Queries q;
    const auto version_override = config.require_version_field ? c.version_field : std::nullopt;

    if (c.cpe) {
        if (!config.use_cpe) {
            q.notes.push_back({"CPE_UNSUPPORTED", "CPE identifier not supported"});
        } else {
            try {
                auto wfn = identifiers::parse_cpe(*c.cpe);
                if (version_override)
                    wfn[CpeField::version] = CpeAttribute::plain(*version_override);
                q.cpes.push_back(std::move(wfn));
            } catch (const identifiers::MalformedCpe& e) {
                q.notes.push_back({"INVALID_CPE", "invalid CPE '" + *c.cpe + "': " + e.what()});
            }
        }
    }

    if (c.purl) {
        if (!config.use_purl) {
            q.notes.push_back({"PURL_UNSUPPORTED", "purl identifier not supported"});
        } else {
            try {
                auto purl = identifiers::parse_purl(*c.purl);
                if (config.require_version_field)
                    purl.version = version_override;
                if (purl.version) {
                    q.purls.push_back(std::move(purl));
                } else if (config.versionless_purl_policy == vulndb::VersionlessPolicy::Wildcard) {
                    q.notes.push_back({"NO_VERSION", "purl has no version, all known versions treated as affected"});
                    q.purls.push_back(std::move(purl));
                } else {
                    q.notes.push_back({"NO_VERSION", "purl has no version"});
                }
            } catch (const identifiers::MalformedPurl& e) {
                q.notes.push_back({"INVALID_PURL", "invalid purl '" + *c.purl + "': " + e.what()});
            }
        }
    }

    if (!c.cpe && !c.purl) {
        // a vendor-less or version-less guess would match far too broadly
        const auto version = config.require_version_field ? version_override : sbom::effective_version(c);
        const bool complete = c.publisher && !c.publisher->empty() && !c.name.empty() && version;
        if (config.reconstruct_cpe_if_none && config.use_cpe && complete) {
            identifiers::Wfn wfn;
            wfn[CpeField::part] = CpeAttribute::literal("a");
            wfn[CpeField::vendor] = CpeAttribute::plain(*c.publisher);
            wfn[CpeField::product] = CpeAttribute::plain(c.name);
            wfn[CpeField::version] = CpeAttribute::plain(*version);
            q.cpes.push_back(std::move(wfn));
        } else if (config.reconstruct_cpe_if_none && config.use_cpe) {
            q.notes.push_back({"NO_IDENTIFIER", "no CPE or purl, and publisher, name and version are incomplete"});
        } else {
            q.notes.push_back({"NO_IDENTIFIER", "no CPE or purl to test"});
        }
    }
    return q;
}

std::string join_reasons(const std::vector<Note>& notes)
{
    std::string out;
    for (const auto& n : notes)
        out += (out.empty() ? "" : "; ") + n.reason;
    return out;
}

} // namespace

ScanReport scan(const sbom::Bom& bom, const vulndb::Snapshot& snapshot, const ScanConfig& config)
{
    config.validate();
    ScanReport report;
    report.stats.components_total = bom.components.size();

    std::vector<std::string> rejection;
    for (const auto& issue : bom.validation_issues) {
        if ((issue.code == sbom::IssueCode::RootOrder && config.reject_root_order)
            || (issue.code == sbom::IssueCode::UnknownRootKey && config.reject_invalid_root))
            rejection.push_back(issue.detail);
    }
    if (!rejection.empty()) {
        std::string reason = "Invalid BOM rejected: ";
        for (std::size_t i = 0; i < rejection.size(); ++i)
            reason += (i ? "; " : "") + rejection[i];
        report.rejected = reason;
        report.warnings.push_back({"INVALID_BOM", std::nullopt, reason});
        for (const auto& c : bom.components)
            report.warnings.push_back({"INVALID_BOM", c.reference(), label_of(c) + " not tested: BOM rejected"});
        report.stats.components_skipped = bom.components.size();
        return report;
    }

    for (const auto& issue : bom.validation_issues) {
        if (issue.code == sbom::IssueCode::Schema)
            report.warnings.push_back({"SCHEMA_ISSUE", std::nullopt, "BOM schema issue at " + issue.location + ": " + issue.detail});
    }

    std::map<std::pair<std::string, std::string>, Finding> found;
    const auto add = [&](const std::string& vuln, const sbom::Component& c, MatchedVia via) {
        const auto key = std::make_pair(vuln, c.reference());
        auto [it, inserted] = found.try_emplace(key, Finding{vuln, c.reference(), c.name, via, false});
        if (!inserted && via == MatchedVia::Purl)
            it->second.matched_via = MatchedVia::Purl;
    };

    for (const auto& c : bom.components) {
        const auto label = label_of(c);
        if (config.require_version_field && !c.version_field) {
            report.warnings.push_back({"NO_VERSION_FIELD", c.reference(),
                                       label + " excluded: no version field, identifier versions are not used"});
            ++report.stats.components_skipped;
            continue;
        }

        const auto q = queries_for(c, config);
        if (q.empty()) {
            report.warnings.push_back({q.notes.front().code, c.reference(), label + " excluded: " + join_reasons(q.notes)});
            ++report.stats.components_skipped;
            continue;
        }
        ++report.stats.components_tested;
        for (const auto& n : q.notes) {
            const auto ignored = n.code == "CPE_UNSUPPORTED" || n.code == "PURL_UNSUPPORTED" || n.code.rfind("INVALID_", 0) == 0;
            report.warnings.push_back({n.code, c.reference(), label + ": " + n.reason + (ignored ? ", identifier ignored" : "")});
        }

        for (const auto& wfn : q.cpes) {
            for (const auto& hit : vulndb::lookup_by_cpe(snapshot, wfn, config.na_version_policy))
                add(hit.record->id, c, MatchedVia::Cpe);
        }
        for (const auto& purl : q.purls) {
            for (const auto& hit : vulndb::lookup_by_purl(snapshot, purl, config.versionless_purl_policy))
                add(hit.record->id, c, MatchedVia::Purl);
        }
    }

    if (config.process_vex) {
        const auto vex = sbom::vex_suppressions(bom);
        for (auto& [key, finding] : found) {
            const auto it = vex.dispositions.find({key.second, key.first});
            if (it != vex.dispositions.end() && it->second == sbom::VexDisposition::Suppressed)
                finding.suppressed_by_vex = true;
        }
        for (const auto& d : vex.dangling) {
            report.warnings.push_back({"VEX_DANGLING_REF", std::nullopt,
                                       "VEX statement for " + d.vuln_id + " references unknown component " + d.ref});
        }
    } else {
        for (const auto& statement : bom.vulnerabilities) {
            if (statement.affects.empty()) {
                report.warnings.push_back({"VEX_IGNORED", std::nullopt,
                                           "VEX statement for " + statement.vuln_id + " ignored: VEX processing disabled"});
            }
            for (const auto& affected : statement.affects) {
                const auto* c = bom.find_by_ref(affected.ref);
                const auto subject = c ? label_of(*c) : "Component " + affected.ref;
                report.warnings.push_back({"VEX_IGNORED", c ? std::optional(c->reference()) : std::nullopt,
                                           subject + ": VEX statement for " + statement.vuln_id
                                               + " ignored, VEX processing disabled"});
            }
        }
    }

    for (auto& [_, finding] : found)
        (finding.suppressed_by_vex ? report.suppressed : report.findings).push_back(std::move(finding));
    return report;
}

namespace {

ordered_json finding_to_json(const Finding& f)
{
    ordered_json j;
    j["vuln_id"] = f.vuln_id;
    j["component_ref"] = f.component_ref;
    j["component_name"] = f.component_name;
    j["matched_via"] = to_string(f.matched_via);
    j["suppressed_by_vex"] = f.suppressed_by_vex;
    return j;
}

Finding finding_from_json(const nlohmann::json& j)
{
    Finding f;
    f.vuln_id = j.at("vuln_id").get<std::string>();
    f.component_ref = j.at("component_ref").get<std::string>();
    f.component_name = j.value("component_name", std::string{});
    f.matched_via = j.at("matched_via").get<std::string>() == "CPE" ? MatchedVia::Cpe : MatchedVia::Purl;
    f.suppressed_by_vex = j.value("suppressed_by_vex", false);
    return f;
}

} // namespace

std::string serialize_report(const ScanReport& report)
{
    ordered_json out;
    out["findings"] = ordered_json::array();
    for (const auto& f : report.findings)
        out["findings"].push_back(finding_to_json(f));
    out["suppressed"] = ordered_json::array();
    for (const auto& f : report.suppressed)
        out["suppressed"].push_back(finding_to_json(f));
    out["warnings"] = ordered_json::array();
    for (const auto& w : report.warnings) {
        ordered_json j;
        j["code"] = w.code;
        j["component_ref"] = w.component_ref ? ordered_json(*w.component_ref) : ordered_json(nullptr);
        j["message"] = w.message;
        out["warnings"].push_back(std::move(j));
    }
    out["stats"] = {{"components_total", report.stats.components_total},
                    {"components_tested", report.stats.components_tested},
                    {"components_skipped", report.stats.components_skipped}};
    out["rejected"] = report.rejected ? ordered_json(*report.rejected) : ordered_json(nullptr);
    return out.dump(2) + "\n";
}

ScanReport parse_report(std::string_view json_text)
{
    try {
        const auto j = nlohmann::json::parse(json_text);
        ScanReport r;
        for (const auto& f : j.at("findings"))
            r.findings.push_back(finding_from_json(f));
        for (const auto& f : j.at("suppressed"))
            r.suppressed.push_back(finding_from_json(f));
        for (const auto& w : j.at("warnings")) {
            ScanWarning warning{w.at("code").get<std::string>(), std::nullopt, w.at("message").get<std::string>()};
            if (w.contains("component_ref") && w["component_ref"].is_string())
                warning.component_ref = w["component_ref"].get<std::string>();
            r.warnings.push_back(std::move(warning));
        }
        const auto& stats = j.at("stats");
        r.stats = {stats.at("components_total").get<std::size_t>(), stats.at("components_tested").get<std::size_t>(),
                   stats.at("components_skipped").get<std::size_t>()};
        if (j.contains("rejected") && j["rejected"].is_string())
            r.rejected = j["rejected"].get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("not a scan report: ") + e.what());
    }
}

std::string render_warning_lines(const ScanReport& report)
{
    std::string out;
    for (const auto& w : report.warnings)
        out += "WARN: [" + w.code + "] " + w.message + "\n";
    return out;
}

std::string render_report_text(const ScanReport& report)
{
    std::ostringstream out;
    if (report.rejected)
        out << "REJECTED: " << *report.rejected << "\n";
    for (const auto& f : report.findings)
        out << "FINDING: " << f.vuln_id << " in " << f.component_ref << " (" << f.component_name << ") via "
            << to_string(f.matched_via) << "\n";
    for (const auto& f : report.suppressed)
        out << "SUPPRESSED: " << f.vuln_id << " in " << f.component_ref << " (" << f.component_name << ") by VEX\n";
    out << render_warning_lines(report);
    out << "SUMMARY: " << report.stats.components_tested << " tested, " << report.stats.components_skipped
        << " skipped, " << report.stats.components_total << " total\n";
    return out.str();
}

} // namespace svstest::refscanner
