#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "formatscope/profiler.hpp"
#include "formatscope/util.hpp"

namespace formatscope {

// Pathologies a recipe line can plant on demand.
struct Malformations {
    bool truncate_eof = false;    // PDF trailer cut to "%%EO"
    bool no_content_type = false; // omit the HTTP Content-Type header
};

// One homogeneous batch of synthetic records.
struct RecipeLine {
    int year = 0;
    std::string format; // template name, see kTemplateNames
    uint64_t count = 0;
    Malformations malform;
    std::string version;  // pdf: 1.0..1.7; html: 2.0/3.2/4.0/4.01/xhtml-1.0/xhtml-1.1
    std::string software; // pdf /Producer, exif Software
    std::string make;     // exif Make
    std::string model;    // exif Model
    size_t pad = 0;       // extra filler bytes
    bool server_mime_set = false;
    std::string server_mime; // overrides the template default when set
};

struct CorpusSpec {
    uint64_t seed = 0;
    uint64_t records_per_file = 1000;
    std::vector<RecipeLine> recipe;

    static CorpusSpec from_json(const std::string& text);
    static CorpusSpec load_file(const std::string& path);
};

extern const std::vector<std::string> kTemplateNames;

// What the pipeline must conclude about one record. Expected outcomes are
// fixed by construction of the template, never by running an engine.
struct ManifestEntry {
    uint64_t index = 0;
    std::string url;
    std::string timestamp; // 14 digits
    std::string server_mime;
    std::string expected_broad;
    std::string expected_fine;
    uint64_t payload_size = 0;
    uint32_t payload_crc32 = 0;
};

class GroundTruthManifest {
public:
    void add(ManifestEntry entry) { entries_.push_back(std::move(entry)); }
    const std::vector<ManifestEntry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }

    // The dataset the pipeline must produce: a direct count over entries.
    ProfileDataset expected_profile() const;

    void save_file(const std::string& path) const;
    static GroundTruthManifest load_file(const std::string& path);

private:
    std::vector<ManifestEntry> entries_;
};

// One fully rendered record before archive framing.
struct BuiltRecord {
    Bytes payload;
    std::string server_mime;
    std::string url;
    std::string timestamp;
    std::string expected_broad;
    std::string expected_fine;
};

// Deterministic in (spec.seed, index); exposed for template-level tests.
BuiltRecord build_record(const CorpusSpec& spec, const RecipeLine& line, uint64_t index);

struct GenerateResult {
    std::vector<std::string> archive_files;
    std::string manifest_path;
    GroundTruthManifest manifest;
};

// Writes per-record-gzip WARC files plus manifest.tsv into out_dir.
GenerateResult generate(const CorpusSpec& spec, const std::string& out_dir);

} // namespace formatscope
