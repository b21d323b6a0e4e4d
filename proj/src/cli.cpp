#include "svstest/cli.hpp"

#include "svstest/evaluator.hpp"
#include "svstest/harness.hpp"
#include "svstest/lint.hpp"
#include "svstest/refscanner.hpp"
#include "svstest/sbom.hpp"
#include "svstest/testlib.hpp"
#include "svstest/util.hpp"
#include "svstest/vulndb.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>

namespace svstest::cli {

namespace fs = std::filesystem;

namespace {

struct Options
{
    std::string out_dir;
    std::string out_file;

    std::vector<std::string> osv_inputs;
    std::string created_at;

    std::string sbom;
    std::string db;
    std::string profile = "IDEAL";
    std::string format;

    std::string cases_dir;
    std::string adapters_file;
    std::vector<std::string> only_adapters;

    std::string runs_dir;
    std::string results_file;
    std::string corpus;
};

std::vector<fs::path> json_files_in(const fs::path& path)
{
    if (!fs::is_directory(path))
        return {path};
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

void emit(const std::string& content, const std::string& out_file, std::ostream& out)
{
    if (out_file.empty())
        out << content;
    else
        write_file(out_file, content);
}

int cmd_gen_cases(const Options& o, std::ostream& out)
{
    const auto manifest = testlib::emit_sbom_files(o.out_dir);
    out << "wrote " << manifest.entries.size() << " cases to " << o.out_dir << "\n";
    return kExitOk;
}

int cmd_ingest_osv(const Options& o, std::ostream& out, std::ostream& err)
{
    std::vector<vulndb::OsvDocument> docs;
    for (const auto& input : o.osv_inputs) {
        for (const auto& f : json_files_in(input))
            docs.push_back({f.filename().string(), read_file(f)});
    }
    std::vector<vulndb::IngestReportEntry> report;
    const auto snapshot = vulndb::ingest_osv(docs, o.created_at.empty() ? utc_timestamp_now() : o.created_at, &report);
    for (const auto& r : report)
        err << "skipped " << r.source << ": " << r.error << "\n";
    write_file(o.out_file, vulndb::serialize_snapshot(snapshot));
    out << snapshot.snapshot_id << " (" << snapshot.records.size() << " records) -> " << o.out_file << "\n";
    return kExitOk;
}

int cmd_scan(const Options& o, std::ostream& out, std::ostream& err)
{
    const auto& profile = refscanner::find_profile(o.profile);
    const auto snapshot = o.db.empty() ? vulndb::seed_snapshot() : vulndb::load_snapshot_file(o.db);
    const auto bom = sbom::parse_bom(read_file(o.sbom));
    const auto report = refscanner::scan(bom, snapshot, profile.config);
    if (o.format == "text") {
        out << refscanner::render_report_text(report);
    } else {
        out << refscanner::serialize_report(report);
        err << refscanner::render_warning_lines(report);
    }
    return kExitOk;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err)
{
    const auto suite = harness::load_suite(o.cases_dir);
    auto adapters = harness::parse_adapters(read_file(o.adapters_file));
    if (!o.only_adapters.empty()) {
        for (const auto& name : o.only_adapters) {
            if (std::none_of(adapters.begin(), adapters.end(), [&](const auto& a) { return a.name == name; }))
                throw harness::InvalidAdapterConfig("no adapter named '" + name + "' in " + o.adapters_file);
        }
        std::erase_if(adapters, [&](const auto& a) {
            return std::find(o.only_adapters.begin(), o.only_adapters.end(), a.name) == o.only_adapters.end();
        });
    }
    // BUILTIN db paths are relative to the adapters file
    const auto base = fs::path(o.adapters_file).parent_path();
    int status = kExitOk;
    for (auto& adapter : adapters) {
        if (adapter.db && fs::path(*adapter.db).is_relative())
            adapter.db = (base / *adapter.db).string();
        try {
            const auto records = harness::execute_suite(suite, adapter);
            out << harness::persist_run(records, o.out_dir).string() << "\n";
        } catch (const harness::AdapterUnavailable& e) {
            err << "error: " << e.what() << "\n";
            status = kExitOperational;
        }
    }
    return status;
}

std::vector<fs::path> run_dirs_under(const fs::path& runs)
{
    if (fs::exists(runs / "run.json"))
        return {runs};
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(runs)) {
        if (entry.is_directory() && fs::exists(entry.path() / "run.json"))
            dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty())
        throw IoFailure("no run directories under " + runs.string());
    return dirs;
}

int cmd_eval(const Options& o, std::ostream& out)
{
    const auto expectations = testlib::load_expectations(o.cases_dir);
    evaluator::ResultSet set;
    set.scenarios = expectations.scenarios;
    for (const auto& dir : run_dirs_under(o.runs_dir)) {
        const auto records = harness::load_run(dir);
        set.runs.push_back(evaluator::run_info(records));
        const auto results = evaluator::evaluate_run(records, expectations);
        set.results.insert(set.results.end(), results.begin(), results.end());
    }
    write_file(o.out_file, evaluator::results_json(set));
    out << evaluator::render_matrix(set, evaluator::MatrixFormat::Markdown);
    return evaluator::has_silent_failure(set.results) ? kExitSilentFailures : kExitOk;
}

int cmd_report(const Options& o, std::ostream& out)
{
    const auto set = evaluator::parse_results(read_file(o.results_file));
    const auto format = o.format == "json" ? evaluator::MatrixFormat::Json : evaluator::MatrixFormat::Markdown;
    emit(evaluator::render_matrix(set, format), o.out_file, out);
    return evaluator::has_silent_failure(set.results) ? kExitSilentFailures : kExitOk;
}

int cmd_lint(const Options& o, std::ostream& out)
{
    if (!fs::is_directory(o.corpus))
        throw IoFailure("not a directory: " + o.corpus);
    emit(lint::stats_json(lint::lint_corpus(o.corpus)), o.out_file, out);
    return kExitOk;
}

int cmd_profiles(std::ostream& out)
{
    for (const auto& p : refscanner::profiles())
        out << p.name << "\t" << p.description << "\n";
    return kExitOk;
}

std::string version_text()
{
    return "svs-test " + std::string(tool_version()) + "\nfixture library " + testlib::library_id() + "\nseed snapshot "
           + vulndb::seed_snapshot().snapshot_id + "\n";
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Conformance harness for SBOM vulnerability scanners", "svs-test"};
    app.require_subcommand(1);
    app.set_version_flag("--version", [] { return version_text(); }, "Print tool, fixture library and seed snapshot ids");

    Options o;

    auto* gen = app.add_subcommand("gen-cases", "Write the fixture SBOMs, manifest.json and expectations.json");
    gen->add_option("--out", o.out_dir, "Output directory")->required();

    auto* ingest = app.add_subcommand("ingest-osv", "Build a vulnerability snapshot from OSV JSON files");
    ingest->add_option("--osv", o.osv_inputs, "OSV file or directory of *.json files")->required();
    ingest->add_option("--created-at", o.created_at, "Snapshot timestamp (default: now)");
    ingest->add_option("--out", o.out_file, "Snapshot file to write")->required();

    auto* scan = app.add_subcommand("scan", "Scan one SBOM with the reference scanner");
    scan->add_option("--sbom", o.sbom, "CycloneDX JSON file")->required()->check(CLI::ExistingFile);
    scan->add_option("--db", o.db, "Snapshot file (default: built-in seed)")->check(CLI::ExistingFile);
    scan->add_option("--profile", o.profile, "Scanner profile")->capture_default_str();
    o.format = "json";
    scan->add_option("--format", o.format, "json or text")->check(CLI::IsMember({"json", "text"}))->capture_default_str();

    auto* run = app.add_subcommand("run", "Execute the fixture suite against adapters");
    run->add_option("--cases", o.cases_dir, "Directory written by gen-cases")->required()->check(CLI::ExistingDirectory);
    run->add_option("--adapters", o.adapters_file, "Adapters JSON file")->required()->check(CLI::ExistingFile);
    run->add_option("--adapter", o.only_adapters, "Run only the named adapter (repeatable)");
    run->add_option("--out", o.out_dir, "Directory for run records")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate run records against the expectations");
    eval->add_option("--runs", o.runs_dir, "A run directory or a directory of runs")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--cases", o.cases_dir, "Directory written by gen-cases")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--out", o.out_file, "Results file to write")->required();

    auto* report = app.add_subcommand("report", "Render the results matrix");
    report->add_option("--results", o.results_file, "Results file written by eval")->required()->check(CLI::ExistingFile);
    auto* report_format = report->add_option("--format", o.format, "markdown or json")->check(CLI::IsMember({"markdown", "json"}));
    report->add_option("--out", o.out_file, "Output file (default: stdout)");

    auto* lint_cmd = app.add_subcommand("lint", "Count failure-triggering conditions in a corpus of CycloneDX files");
    lint_cmd->add_option("--corpus", o.corpus, "Directory searched recursively for *.json")->required();
    lint_cmd->add_option("--out", o.out_file, "Stats file (default: stdout)");

    auto* prof = app.add_subcommand("profiles", "List reference scanner profiles");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (report->parsed() && report_format->count() == 0)
        o.format = "markdown";

    try {
        if (gen->parsed())
            return cmd_gen_cases(o, out);
        if (ingest->parsed())
            return cmd_ingest_osv(o, out, err);
        if (scan->parsed())
            return cmd_scan(o, out, err);
        if (run->parsed())
            return cmd_run(o, out, err);
        if (eval->parsed())
            return cmd_eval(o, out);
        if (report->parsed())
            return cmd_report(o, out);
        if (lint_cmd->parsed())
            return cmd_lint(o, out);
        if (prof->parsed())
            return cmd_profiles(out);
    } catch (const refscanner::UnknownProfile& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitOperational;
    }
    return kExitUsage;
}

} // namespace svstest::cli
