#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "formatscope/analyzer.hpp"
#include "formatscope/corpusgen.hpp"
#include "formatscope/errors.hpp"
#include "formatscope/mimetype.hpp"
#include "formatscope/profiler.hpp"
#include "formatscope/signature.hpp"
#include "formatscope/warc.hpp"

namespace py = pybind11;
using namespace formatscope;

PYBIND11_MODULE(_core, m) {
    m.doc() = "format profiles of web-archive corpora over time";

    // translators run newest-first, so the base class goes in before the
    // subclasses that must win
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<MalformedMimeError>(m, "MalformedMimeError", PyExc_ValueError);
    py::register_exception<BadTimestampError>(m, "BadTimestampError", PyExc_ValueError);
    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
    py::register_exception<CycleError>(m, "CycleError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);

    m.def(
        "canonical_mime",
        [](const std::string& text) { return ExtendedMimeType::parse(text).serialize(); },
        py::arg("text"), "Parse an extended MIME type and return its canonical serialization.");

    m.def("normalize_server_mime", &normalize_server_mime, py::arg("header"),
          "Normalize a Content-Type header value to type/subtype or unknown/unknown.");

    m.def("extract_year", &extract_year, py::arg("timestamp"),
          "Crawl year of a 14-digit timestamp.");

    py::class_<SignatureSet>(m, "SignatureSet")
        .def_static("load", [](const std::string& path) { return SignatureSet::load_file(path); },
                    py::arg("path"))
        .def_static("compile", &SignatureSet::compile, py::arg("json_text"))
        .def_property_readonly("name", &SignatureSet::name)
        .def_property_readonly("mode",
                               [](const SignatureSet& s) { return std::string(to_string(s.mode())); })
        .def_property_readonly("size",
                               [](const SignatureSet& s) { return s.signatures().size(); })
        .def(
            "identify",
            [](const SignatureSet& s, const py::bytes& payload) {
                return s.identify(std::string_view(std::string(payload))).serialize();
            },
            py::arg("payload"), "Identify a payload; returns the serialized outcome.");

    m.def(
        "profile",
        [](const std::vector<std::string>& files, const std::string& fine_sig,
           const std::string& broad_sig, size_t shards, uint64_t max_payload) {
            auto fine = SignatureSet::load_file(fine_sig);
            auto broad = SignatureSet::load_file(broad_sig);
            PipelineOptions options;
            options.shards = shards;
            options.max_payload = max_payload;
            PipelineSummary summary;
            ProfileDataset dataset;
            {
                py::gil_scoped_release release;
                dataset = run_pipeline(files, fine, broad, options, &summary);
            }
            py::dict info;
            info["records"] = summary.records;
            info["skipped"] = summary.skipped;
            info["corrupt"] = summary.corrupt;
            info["broad_unidentified"] = summary.broad_unidentified;
            info["fine_unidentified"] = summary.fine_unidentified;
            info["seconds"] = summary.seconds;
            return py::make_tuple(dataset.emit(), info);
        },
        py::arg("files"), py::arg("fine_sig"), py::arg("broad_sig"), py::arg("shards") = 1,
        py::arg("max_payload") = uint64_t(100) * 1024 * 1024,
        "Profile archive files; returns (tsv_text, summary_dict).");

    m.def(
        "generate_corpus",
        [](const std::string& spec_json, const std::string& out_dir) {
            GenerateResult result = generate(CorpusSpec::from_json(spec_json), out_dir);
            py::dict info;
            info["archives"] = result.archive_files;
            info["manifest"] = result.manifest_path;
            info["records"] = result.manifest.size();
            info["expected_profile"] = result.manifest.expected_profile().emit();
            return info;
        },
        py::arg("spec_json"), py::arg("out_dir"),
        "Generate a synthetic corpus; returns paths and the expected profile TSV.");

    m.def(
        "analyze",
        [](const std::string& profile_tsv, const std::string& report_dir,
           const std::string& tool) {
            ProfileDataset dataset = ProfileDataset::load_file(profile_tsv);
            TrendReport report =
                build_trend_report(dataset, tool == "fine" ? Tool::fine : Tool::broad);
            write_report(report, report_dir);
            return report_dir;
        },
        py::arg("profile_tsv"), py::arg("report_dir"), py::arg("tool") = "broad",
        "Load a profile TSV, build the trend report, write CSV/SVG outputs.");
}
