#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "formatscope/util.hpp"

namespace formatscope {

// One crawled resource pulled out of an ARC or WARC file. Payloads larger
// than the reader's cap are kept truncated, with the flag set.
struct ArchiveRecord {
    std::string url;
    std::string crawl_timestamp; // YYYYMMDDhhmmss
    std::string server_mime_raw;
    Bytes payload;
    std::string source_file;
    uint64_t source_offset = 0;
    bool truncated = false;
};

struct CorruptionEvent {
    uint64_t offset = 0;
    std::string message;
};

struct ReaderOptions {
    size_t max_payload = 100ull << 20;
    // Throw CorruptArchiveError instead of resynchronizing; the pipeline
    // runs lenient and counts events.
    bool strict = false;
};

// First four digits of a 14-digit crawl timestamp.
int extract_year(std::string_view crawl_timestamp);

// Lowercased base type with parameters stripped; anything that does not
// reduce to token/token becomes "unknown/unknown".
std::string normalize_server_mime(std::string_view raw);

// Streams response records from .warc/.warc.gz/.arc/.arc.gz files in file
// order. Request, metadata, revisit and filedesc records are skipped.
// Framing damage is reported through corruption_events() and reading
// resumes at the next gzip member boundary (or the next record magic for
// plain files).
class ArchiveReader {
public:
    explicit ArchiveReader(std::string path, ReaderOptions options = {});
    ~ArchiveReader();
    ArchiveReader(ArchiveReader&&) noexcept;
    ArchiveReader& operator=(ArchiveReader&&) noexcept;

    std::optional<ArchiveRecord> next();

    const std::vector<CorruptionEvent>& corruption_events() const;
    uint64_t response_count() const;
    uint64_t skipped_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace formatscope
