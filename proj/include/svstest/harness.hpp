#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace svstest::harness {

class AdapterUnavailable : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class InvalidAdapterConfig : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

enum class AdapterKind { Builtin, External };
enum class ReportSource { Stdout, File };

struct AdapterConfig
{
    std::string name;
    AdapterKind kind = AdapterKind::Builtin;
    std::string profile;                  ///< BUILTIN only
    std::optional<std::string> db;        ///< BUILTIN snapshot file; the seed when absent
    std::string invoke_template;          ///< EXTERNAL; `{sbom}` once, `{case}` optional
    ReportSource report_source = ReportSource::Stdout;
    std::string report_path_template;     ///< for ReportSource::File, same placeholders
    std::optional<std::string> version_command;
    std::optional<std::string> reset_command;
    std::optional<int> timeout_seconds;   ///< SVS_TEST_TIMEOUT_DEFAULT or 60 when absent
    std::map<std::string, std::string> env;

    /// Throws InvalidAdapterConfig.
    void validate() const;
    int effective_timeout() const;

    bool operator==(const AdapterConfig&) const = default;
};

/// Parses an adapters file: a JSON array of adapter objects.
std::vector<AdapterConfig> parse_adapters(std::string_view json_text);
std::string adapters_json(const std::vector<AdapterConfig>& adapters);
/// `sha256:` digest of the adapter's canonical JSON.
std::string config_digest(const AdapterConfig& adapter);

struct RunRecord
{
    std::string run_id;
    std::string adapter_name;
    std::string tool_version; ///< "unknown" when it could not be captured
    std::string case_id;
    std::string started_at;
    std::string finished_at;
    std::optional<int> exit_status; ///< empty on timeout or signal
    bool timed_out = false;
    std::string report_text;
    std::string stderr_text;
    std::optional<std::string> db_snapshot_id;
    std::string config_digest;

    bool operator==(const RunRecord&) const = default;
};

struct SuiteCase
{
    std::string id;
    std::filesystem::path sbom_path;
};

/// Cases listed in `<dir>/manifest.json`, in manifest order.
std::vector<SuiteCase> load_suite(const std::filesystem::path& cases_dir);

/// Runs every case sequentially, resetting between cases. Throws
/// AdapterUnavailable when the adapter's commands cannot be executed.
std::vector<RunRecord> execute_suite(const std::vector<SuiteCase>& cases, const AdapterConfig& adapter,
                                     std::string run_id = {});

std::string new_run_id(const AdapterConfig& adapter);

/// Writes `<dir>/<run_id>/<case>.json` and `<dir>/<run_id>/run.json`; returns
/// the run directory. Throws IoFailure.
std::filesystem::path persist_run(const std::vector<RunRecord>& records, const std::filesystem::path& dir);
/// Records of one run directory, in run.json case order.
std::vector<RunRecord> load_run(const std::filesystem::path& run_dir);

std::string record_json(const RunRecord& record);
RunRecord parse_record(std::string_view json_text);

struct ProcessResult
{
    std::optional<int> exit_status;
    bool timed_out = false;
    std::string out;
    std::string err;
};

/// Runs `command` through /bin/sh with stdin closed. On timeout the whole
/// process group is killed.
ProcessResult run_command(const std::string& command, std::chrono::milliseconds timeout,
                          const std::map<std::string, std::string>& env = {});

/// Single-quotes `text` for /bin/sh.
std::string shell_quote(std::string_view text);

} // namespace svstest::harness
