#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "formatscope/analyzer.hpp"
#include "formatscope/corpusgen.hpp"
#include "formatscope/errors.hpp"
#include "formatscope/profiler.hpp"
#include "formatscope/signature.hpp"
#include "formatscope/util.hpp"

namespace {

namespace fsys = std::filesystem;

// Configuration problems exit with 2, runtime data problems with 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool archive_name(const std::string& name) {
    auto ends = [&](const char* suffix) {
        std::string_view s(suffix);
        return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
    };
    return ends(".warc") || ends(".warc.gz") || ends(".arc") || ends(".arc.gz");
}

std::vector<std::string> collect_inputs(const std::vector<std::string>& inputs) {
    std::vector<std::string> files;
    for (const auto& input : inputs) {
        fsys::path path(input);
        if (!fsys::exists(path)) throw UsageError("input path does not exist: " + input);
        if (fsys::is_directory(path)) {
            for (const auto& entry : fsys::recursive_directory_iterator(path)) {
                if (entry.is_regular_file() && archive_name(entry.path().filename().string())) {
                    files.push_back(entry.path().string());
                }
            }
        } else {
            files.push_back(path.string());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

void print_kv(const char* key, const std::string& value) {
    std::printf("%s\t%s\n", key, value.c_str());
}

void print_kv(const char* key, uint64_t value) { print_kv(key, std::to_string(value)); }

int cmd_profile(const std::vector<std::string>& inputs, const std::string& fine_path,
                const std::string& broad_path, const std::string& output, size_t shards,
                uint64_t max_payload) {
    auto fine = formatscope::SignatureSet::load_file(fine_path);
    auto broad = formatscope::SignatureSet::load_file(broad_path);

    std::vector<std::string> files = collect_inputs(inputs);
    if (files.empty()) {
        formatscope::log_warn("no archive files found; writing an empty profile");
    }

    formatscope::PipelineOptions options;
    options.shards = shards;
    options.max_payload = max_payload;
    formatscope::PipelineSummary summary;
    formatscope::ProfileDataset dataset =
        formatscope::run_pipeline(files, fine, broad, options, &summary);
    dataset.save_file(output);

    print_kv("archive files", files.size());
    print_kv("records processed", summary.records);
    print_kv("records skipped", summary.skipped);
    print_kv("corrupt records", summary.corrupt);
    print_kv("broad unidentified", summary.broad_unidentified);
    print_kv("fine unidentified", summary.fine_unidentified);
    print_kv("distinct keys", dataset.size());
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", summary.seconds);
    print_kv("elapsed seconds", std::string(buf));
    double rate = summary.seconds > 0 ? static_cast<double>(summary.records) / summary.seconds : 0;
    std::snprintf(buf, sizeof buf, "%.0f", rate);
    print_kv("records per second", std::string(buf));
    print_kv("output", output);
    return 0;
}

int cmd_analyze(const std::string& input, const std::string& report_dir,
                const std::string& tool_name) {
    if (!fsys::exists(input)) throw UsageError("profile TSV does not exist: " + input);
    formatscope::ProfileDataset dataset = formatscope::ProfileDataset::load_file(input);
    formatscope::Tool tool =
        tool_name == "fine" ? formatscope::Tool::fine : formatscope::Tool::broad;
    formatscope::TrendReport report = formatscope::build_trend_report(dataset, tool);
    formatscope::write_report(report, report_dir);

    print_kv("profile rows", dataset.size());
    print_kv("resources", dataset.total());
    print_kv("tool", tool_name);
    print_kv("base types", report.lifespans.size());
    print_kv("conflict pairs", report.conflicts.distinct_pairs());
    print_kv("fit", report.fit ? "yes" : "no");
    print_kv("report dir", report_dir);
    return 0;
}

int cmd_gen_corpus(const std::string& spec_path, const std::string& out_dir,
                   std::optional<uint64_t> seed) {
    formatscope::CorpusSpec spec = formatscope::CorpusSpec::load_file(spec_path);
    if (seed) spec.seed = *seed;
    formatscope::GenerateResult result = formatscope::generate(spec, out_dir);

    print_kv("archive files", result.archive_files.size());
    print_kv("records", result.manifest.size());
    print_kv("seed", spec.seed);
    print_kv("manifest", result.manifest_path);
    return 0;
}

int cmd_validate(const std::vector<std::string>& inputs) {
    for (const auto& input : inputs) {
        auto set = formatscope::SignatureSet::load_file(input);
        print_kv("file", input);
        print_kv("name", set.name());
        print_kv("mode", formatscope::to_string(set.mode()));
        print_kv("signatures", set.signatures().size());
        size_t weak = 0;
        for (const auto& sig : set.signatures()) {
            if (sig.literal_byte_count() < 3) {
                ++weak;
                std::printf("weak\t%s\t%zu\n", sig.id.c_str(), sig.literal_byte_count());
            }
        }
        print_kv("weak signatures", weak);
        print_kv("errors", 0);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"format profiles of web-archive corpora over time"};
    app.footer("Log verbosity comes from the FORMATSCOPE_LOG environment variable\n"
               "(error, warn, info, debug).");
    app.require_subcommand(1);

    std::vector<std::string> inputs;
    std::string fine_path;
    std::string broad_path;
    std::string output = "profile.tsv";
    size_t shards = 1;
    uint64_t max_payload = 100ull * 1024 * 1024;
    std::string report_dir = "report";
    std::string tool_name = "broad";
    std::string spec_path;
    std::optional<uint64_t> seed;

    auto* profile = app.add_subcommand("profile", "profile archives into a TSV dataset");
    profile->add_option("--input", inputs, "archive files or directories")->required();
    profile->add_option("--fine-sig", fine_path, "fine signature file")->required();
    profile->add_option("--broad-sig", broad_path, "broad signature file")->required();
    profile->add_option("--output", output, "profile TSV path");
    profile->add_option("--shards", shards, "worker count")->check(CLI::Range(size_t(1), size_t(4096)));
    profile->add_option("--max-payload", max_payload, "payload byte cap per record");

    auto* analyze = app.add_subcommand("analyze", "compute trend reports from a profile TSV");
    analyze->add_option("--input", inputs, "profile TSV")->required()->expected(1);
    analyze->add_option("--report-dir", report_dir, "output directory")->required();
    analyze->add_option("--tool", tool_name, "engine column the per-format analyses read")
        ->check(CLI::IsMember({"broad", "fine"}));

    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic archive corpus");
    gen->add_option("--spec", spec_path, "corpus recipe JSON")->required();
    gen->add_option("--output", output, "output directory")->required();
    gen->add_option("--seed", seed, "override the recipe seed");

    auto* validate = app.add_subcommand("validate-signatures", "compile and audit signature files");
    validate->add_option("--input", inputs, "signature files")->required();

    try {
        app.parse(argc, argv);
        if (profile->parsed()) {
            return cmd_profile(inputs, fine_path, broad_path, output, shards, max_payload);
        }
        if (analyze->parsed()) return cmd_analyze(inputs.at(0), report_dir, tool_name);
        if (gen->parsed()) return cmd_gen_corpus(spec_path, output, seed);
        if (validate->parsed()) return cmd_validate(inputs);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        formatscope::log_error(e.what());
        return 2;
    } catch (const formatscope::SchemaError& e) {
        formatscope::log_error(e.what());
        return 2;
    } catch (const formatscope::CycleError& e) {
        formatscope::log_error(e.what());
        return 2;
    } catch (const formatscope::SpecError& e) {
        formatscope::log_error(e.what());
        return 2;
    } catch (const formatscope::ParseError& e) {
        formatscope::log_error(e.what());
        return 2;
    } catch (const formatscope::Error& e) {
        formatscope::log_error(e.what());
        return 1;
    } catch (const std::exception& e) {
        formatscope::log_error(e.what());
        return 1;
    }
}
