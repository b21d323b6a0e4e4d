#include "svstest/harness.hpp"

#include "svstest/refscanner.hpp"
#include "svstest/sbom.hpp"
#include "svstest/testlib.hpp"
#include "svstest/util.hpp"
#include "svstest/vulndb.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <unistd.h>

namespace svstest::harness {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kFallbackTimeout = 60;

std::size_t count_of(std::string_view haystack, std::string_view needle)
{
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1))
        ++n;
    return n;
}

std::string substitute(std::string text, std::string_view placeholder, std::string_view value)
{
    for (auto pos = text.find(placeholder); pos != std::string::npos; pos = text.find(placeholder, pos + value.size()))
        text.replace(pos, placeholder.size(), value);
    return text;
}

std::string first_word(std::string_view command)
{
    const auto start = command.find_first_not_of(" \t");
    if (start == std::string_view::npos)
        return {};
    const auto end = command.find_first_of(" \t", start);
    return std::string(command.substr(start, end == std::string_view::npos ? end : end - start));
}

bool executable_on_path(const std::string& program)
{
    if (program.find('/') != std::string::npos)
        return ::access(program.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    std::string_view dirs = path ? path : "/usr/bin:/bin";
    while (true) {
        const auto colon = dirs.find(':');
        const auto dir = dirs.substr(0, colon);
        const auto candidate = (dir.empty() ? std::string(".") : std::string(dir)) + "/" + program;
        if (::access(candidate.c_str(), X_OK) == 0)
            return true;
        if (colon == std::string_view::npos)
            return false;
        dirs.remove_prefix(colon + 1);
    }
}

ordered_json adapter_to_json(const AdapterConfig& a)
{
    ordered_json j;
    j["name"] = a.name;
    if (a.kind == AdapterKind::Builtin) {
        j["kind"] = "BUILTIN";
        j["profile"] = a.profile;
        if (a.db)
            j["db"] = *a.db;
    } else {
        j["kind"] = "EXTERNAL";
        j["invoke_template"] = a.invoke_template;
        j["report_source"] = a.report_source == ReportSource::Stdout ? "STDOUT" : "FILE";
        if (a.report_source == ReportSource::File)
            j["report_path_template"] = a.report_path_template;
    }
    if (a.version_command)
        j["version_command"] = *a.version_command;
    if (a.reset_command)
        j["reset_command"] = *a.reset_command;
    if (a.timeout_seconds)
        j["timeout"] = *a.timeout_seconds;
    if (!a.env.empty())
        j["env"] = a.env;
    return j;
}

AdapterConfig adapter_from_json(const nlohmann::json& j)
{
    AdapterConfig a;
    a.name = j.at("name").get<std::string>();
    const auto kind = j.value("kind", std::string("BUILTIN"));
    if (kind == "BUILTIN") {
        a.kind = AdapterKind::Builtin;
        a.profile = j.value("profile", a.name);
        if (j.contains("db"))
            a.db = j.at("db").get<std::string>();
    } else if (kind == "EXTERNAL") {
        a.kind = AdapterKind::External;
        a.invoke_template = j.at("invoke_template").get<std::string>();
        const auto source = j.value("report_source", std::string("STDOUT"));
        if (source == "FILE") {
            a.report_source = ReportSource::File;
            a.report_path_template = j.at("report_path_template").get<std::string>();
        } else if (source != "STDOUT") {
            throw InvalidAdapterConfig("adapter '" + a.name + "': report_source must be STDOUT or FILE");
        }
    } else {
        throw InvalidAdapterConfig("adapter '" + a.name + "': kind must be BUILTIN or EXTERNAL");
    }
    if (j.contains("version_command"))
        a.version_command = j.at("version_command").get<std::string>();
    if (j.contains("reset_command"))
        a.reset_command = j.at("reset_command").get<std::string>();
    if (j.contains("timeout"))
        a.timeout_seconds = j.at("timeout").get<int>();
    if (j.contains("env"))
        a.env = j.at("env").get<std::map<std::string, std::string>>();
    a.validate();
    return a;
}

std::string compact_timestamp()
{
    auto ts = utc_timestamp_now();
    std::erase_if(ts, [](char c) { return c == '-' || c == ':' || c == '.'; });
    return ts;
}

RunRecord run_builtin(const SuiteCase& c, const AdapterConfig& adapter, const vulndb::Snapshot& snapshot,
                      const refscanner::ScanConfig& config)
{
    RunRecord r;
    r.case_id = c.id;
    r.started_at = utc_timestamp_now();
    try {
        const auto bom = sbom::parse_bom(read_file(c.sbom_path));
        const auto report = refscanner::scan(bom, snapshot, config);
        r.report_text = refscanner::serialize_report(report);
        r.stderr_text = refscanner::render_warning_lines(report);
        r.exit_status = 0;
    } catch (const sbom::SbomError& e) {
        r.stderr_text = std::string("error: ") + e.what() + "\n";
        r.exit_status = 1;
    } catch (const IoFailure& e) {
        r.stderr_text = std::string("error: ") + e.what() + "\n";
        r.exit_status = 1;
    }
    r.finished_at = utc_timestamp_now();
    r.db_snapshot_id = snapshot.snapshot_id;
    (void)adapter;
    return r;
}

RunRecord run_external(const SuiteCase& c, const AdapterConfig& adapter)
{
    const auto sbom_path = std::filesystem::absolute(c.sbom_path).string();
    const auto fill = [&](const std::string& t) {
        return substitute(substitute(t, "{sbom}", shell_quote(sbom_path)), "{case}", c.id);
    };
    const auto fill_path = [&](const std::string& t) { return substitute(substitute(t, "{sbom}", sbom_path), "{case}", c.id); };

    RunRecord r;
    r.case_id = c.id;
    r.started_at = utc_timestamp_now();
    const auto result = run_command(fill(adapter.invoke_template), std::chrono::seconds(adapter.effective_timeout()), adapter.env);
    r.finished_at = utc_timestamp_now();
    r.exit_status = result.exit_status;
    r.timed_out = result.timed_out;
    r.stderr_text = result.err;
    if (adapter.report_source == ReportSource::Stdout) {
        r.report_text = result.out;
    } else {
        const std::filesystem::path report_path = fill_path(adapter.report_path_template);
        try {
            r.report_text = read_file(report_path);
        } catch (const IoFailure&) {
            r.report_text.clear(); // the tool wrote nothing; evaluation sees an empty report
        }
    }
    return r;
}

} // namespace

void AdapterConfig::validate() const
{
    if (name.empty())
        throw InvalidAdapterConfig("adapter needs a name");
    if (name.find('/') != std::string::npos || name == "." || name == "..")
        throw InvalidAdapterConfig("adapter name '" + name + "' cannot be used as a directory name");
    if (kind == AdapterKind::Builtin) {
        try {
            refscanner::find_profile(profile);
        } catch (const refscanner::UnknownProfile& e) {
            throw InvalidAdapterConfig("adapter '" + name + "': " + e.what());
        }
    } else {
        if (count_of(invoke_template, "{sbom}") != 1)
            throw InvalidAdapterConfig("adapter '" + name + "': invoke_template must contain {sbom} exactly once");
        if (report_source == ReportSource::File && report_path_template.empty())
            throw InvalidAdapterConfig("adapter '" + name + "': FILE report source needs report_path_template");
    }
    if (timeout_seconds && *timeout_seconds <= 0)
        throw InvalidAdapterConfig("adapter '" + name + "': timeout must be positive");
}

int AdapterConfig::effective_timeout() const
{
    if (timeout_seconds)
        return *timeout_seconds;
    if (const char* env_default = std::getenv("SVS_TEST_TIMEOUT_DEFAULT")) {
        try {
            const int v = std::stoi(env_default);
            if (v > 0)
                return v;
        } catch (const std::exception&) {
        }
    }
    return kFallbackTimeout;
}

std::vector<AdapterConfig> parse_adapters(std::string_view json_text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidAdapterConfig(std::string("adapters file is not valid JSON: ") + e.what());
    }
    if (!doc.is_array())
        throw InvalidAdapterConfig("adapters file must hold a JSON array");
    std::vector<AdapterConfig> out;
    for (const auto& item : doc) {
        try {
            out.push_back(adapter_from_json(item));
        } catch (const nlohmann::json::exception& e) {
            throw InvalidAdapterConfig(std::string("invalid adapter entry: ") + e.what());
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t k = i + 1; k < out.size(); ++k) {
            if (out[i].name == out[k].name)
                throw InvalidAdapterConfig("duplicate adapter name '" + out[i].name + "'");
        }
    }
    return out;
}

std::string adapters_json(const std::vector<AdapterConfig>& adapters)
{
    ordered_json arr = ordered_json::array();
    for (const auto& a : adapters)
        arr.push_back(adapter_to_json(a));
    return arr.dump(2) + "\n";
}

std::string config_digest(const AdapterConfig& adapter)
{
    return "sha256:" + sha256_hex(adapter_to_json(adapter).dump());
}

std::vector<SuiteCase> load_suite(const std::filesystem::path& cases_dir)
{
    std::vector<SuiteCase> out;
    for (const auto& e : testlib::load_manifest(cases_dir).entries)
        out.push_back({e.id, cases_dir / e.file});
    return out;
}

std::string new_run_id(const AdapterConfig& adapter)
{
    const auto stamp = compact_timestamp();
    return adapter.name + "-" + stamp + "-" + sha256_hex(config_digest(adapter) + stamp + std::to_string(::getpid())).substr(0, 8);
}

std::vector<RunRecord> execute_suite(const std::vector<SuiteCase>& cases, const AdapterConfig& adapter, std::string run_id)
{
    adapter.validate();
    if (run_id.empty())
        run_id = new_run_id(adapter);
    const auto digest = config_digest(adapter);
    const auto timeout = std::chrono::seconds(adapter.effective_timeout());

    std::string tool_version = "unknown";
    if (adapter.version_command) {
        const auto v = run_command(*adapter.version_command, timeout, adapter.env);
        if (v.exit_status == 127)
            throw AdapterUnavailable("adapter '" + adapter.name + "': version command not executable: " + *adapter.version_command);
        auto text = v.out.empty() ? v.err : v.out;
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' '))
            text.pop_back();
        if (const auto nl = text.find('\n'); nl != std::string::npos)
            text.resize(nl);
        if (v.exit_status == 0 && !text.empty())
            tool_version = text;
    }

    std::vector<RunRecord> records;
    if (adapter.kind == AdapterKind::Builtin) {
        const auto& profile = refscanner::find_profile(adapter.profile);
        const auto snapshot = adapter.db ? vulndb::load_snapshot_file(*adapter.db) : vulndb::seed_snapshot();
        if (!adapter.version_command)
            tool_version = "svs-test " + std::string(svstest::tool_version()) + " profile " + profile.name;
        for (const auto& c : cases)
            records.push_back(run_builtin(c, adapter, snapshot, profile.config));
    } else {
        const auto program = first_word(adapter.invoke_template);
        if (program.empty() || !executable_on_path(program))
            throw AdapterUnavailable("adapter '" + adapter.name + "': command not executable: " + program);
        for (const auto& c : cases) {
            auto r = run_external(c, adapter);
            if (records.empty() && r.exit_status == 127)
                throw AdapterUnavailable("adapter '" + adapter.name + "': invoke command could not be executed: "
                                         + r.stderr_text);
            records.push_back(std::move(r));
            if (adapter.reset_command)
                run_command(*adapter.reset_command, timeout, adapter.env);
        }
    }

    for (auto& r : records) {
        r.run_id = run_id;
        r.adapter_name = adapter.name;
        r.tool_version = tool_version;
        r.config_digest = digest;
    }
    return records;
}

std::string record_json(const RunRecord& r)
{
    ordered_json j;
    j["run_id"] = r.run_id;
    j["adapter_name"] = r.adapter_name;
    j["tool_version"] = r.tool_version;
    j["case_id"] = r.case_id;
    j["started_at"] = r.started_at;
    j["finished_at"] = r.finished_at;
    j["exit_status"] = r.timed_out ? ordered_json("timeout") : r.exit_status ? ordered_json(*r.exit_status) : ordered_json(nullptr);
    j["report_text"] = r.report_text;
    j["stderr_text"] = r.stderr_text;
    j["db_snapshot_id"] = r.db_snapshot_id ? ordered_json(*r.db_snapshot_id) : ordered_json(nullptr);
    j["config_digest"] = r.config_digest;
    return j.dump(2) + "\n";
}

RunRecord parse_record(std::string_view json_text)
{
    try {
        const auto j = nlohmann::json::parse(json_text);
        RunRecord r;
        r.run_id = j.at("run_id").get<std::string>();
        r.adapter_name = j.at("adapter_name").get<std::string>();
        r.tool_version = j.at("tool_version").get<std::string>();
        r.case_id = j.at("case_id").get<std::string>();
        r.started_at = j.at("started_at").get<std::string>();
        r.finished_at = j.at("finished_at").get<std::string>();
        const auto& status = j.at("exit_status");
        if (status.is_string() && status.get<std::string>() == "timeout")
            r.timed_out = true;
        else if (status.is_number_integer())
            r.exit_status = status.get<int>();
        r.report_text = j.at("report_text").get<std::string>();
        r.stderr_text = j.at("stderr_text").get<std::string>();
        if (j.contains("db_snapshot_id") && j["db_snapshot_id"].is_string())
            r.db_snapshot_id = j["db_snapshot_id"].get<std::string>();
        r.config_digest = j.at("config_digest").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("invalid run record: ") + e.what());
    }
}

std::filesystem::path persist_run(const std::vector<RunRecord>& records, const std::filesystem::path& dir)
{
    if (records.empty())
        throw std::invalid_argument("no records to persist");
    const auto& first = records.front();
    const auto run_dir = dir / first.run_id;

    ordered_json run;
    run["schema"] = "svs-test/run/1";
    run["run_id"] = first.run_id;
    run["adapter"] = first.adapter_name;
    run["tool_version"] = first.tool_version;
    run["tool_version_unknown"] = first.tool_version == "unknown";
    run["config_digest"] = first.config_digest;
    run["db_snapshot_id"] = first.db_snapshot_id ? ordered_json(*first.db_snapshot_id) : ordered_json(nullptr);
    run["started_at"] = first.started_at;
    run["finished_at"] = records.back().finished_at;
    run["cases"] = ordered_json::array();
    for (const auto& r : records) {
        if (r.run_id != first.run_id)
            throw std::invalid_argument("records from different runs: " + first.run_id + ", " + r.run_id);
        write_file(run_dir / (r.case_id + ".json"), record_json(r));
        run["cases"].push_back({{"case_id", r.case_id}, {"file", r.case_id + ".json"}});
    }
    write_file(run_dir / "run.json", run.dump(2) + "\n");
    return run_dir;
}

std::vector<RunRecord> load_run(const std::filesystem::path& run_dir)
{
    nlohmann::json run;
    try {
        run = nlohmann::json::parse(read_file(run_dir / "run.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoFailure("invalid run.json in " + run_dir.string() + ": " + e.what());
    }
    std::vector<RunRecord> out;
    for (const auto& c : run.at("cases"))
        out.push_back(parse_record(read_file(run_dir / c.at("file").get<std::string>())));
    return out;
}

} // namespace svstest::harness
