#include "formatscope/warc.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <map>

#include "formatscope/errors.hpp"

namespace formatscope {

int extract_year(std::string_view crawl_timestamp) {
    if (crawl_timestamp.size() != 14 ||
        !std::all_of(crawl_timestamp.begin(), crawl_timestamp.end(),
                     [](char c) { return c >= '0' && c <= '9'; })) {
        throw BadTimestampError("bad crawl timestamp: " + std::string(crawl_timestamp));
    }
    int year = 0;
    for (int i = 0; i < 4; ++i) year = year * 10 + (crawl_timestamp[i] - '0');
    return year;
}

std::string normalize_server_mime(std::string_view raw) {
    std::string_view text = trim(raw);
    if (size_t semi = text.find(';'); semi != std::string_view::npos) {
        text = trim(text.substr(0, semi));
    }
    size_t slash = text.find('/');
    if (slash == std::string_view::npos) return "unknown/unknown";
    std::string type = to_lower(trim(text.substr(0, slash)));
    std::string subtype = to_lower(trim(text.substr(slash + 1)));
    if (!is_valid_token(type) || !is_valid_token(subtype)) return "unknown/unknown";
    return type + "/" + subtype;
}

namespace {

constexpr size_t kInChunk = 256 * 1024;
constexpr size_t kHeadScan = 64 * 1024;
constexpr size_t kMaxEvents = 10000;

bool ends_with(std::string_view text, std::string_view suffix) {
    return text.size() >= suffix.size() && text.substr(text.size() - suffix.size()) == suffix;
}

// Pull-based byte producer over the raw file, with format-aware
// resynchronization after damage.
class Source {
public:
    virtual ~Source() = default;
    virtual size_t read(char* out, size_t n) = 0; // 0 means EOF or damage
    virtual bool corrupt() const { return false; }
    // Skip forward to the next plausible boundary; false when none remains.
    virtual bool resync() = 0;
    // Diagnostic byte offset into the underlying file.
    virtual uint64_t position() const = 0;
    // Offset of the most recent member/record boundary seen.
    virtual uint64_t boundary() const { return 0; }
};

class RawFile {
public:
    explicit RawFile(const std::string& path) : file_(std::fopen(path.c_str(), "rb")) {
        if (!file_) throw IoError("cannot open " + path);
    }
    ~RawFile() {
        if (file_) std::fclose(file_);
    }
    RawFile(const RawFile&) = delete;
    RawFile& operator=(const RawFile&) = delete;

    size_t read(char* out, size_t n) {
        size_t got = std::fread(out, 1, n, file_);
        offset_ += got;
        return got;
    }
    uint64_t offset() const { return offset_; }

private:
    FILE* file_ = nullptr;
    uint64_t offset_ = 0;
};

class PlainSource : public Source {
public:
    PlainSource(const std::string& path, std::string resync_token)
        : raw_(path), token_(std::move(resync_token)) {}

    size_t read(char* out, size_t n) override {
        size_t produced = 0;
        if (!pending_.empty()) {
            produced = std::min(n, pending_.size() - pending_pos_);
            std::memcpy(out, pending_.data() + pending_pos_, produced);
            pending_pos_ += produced;
            if (pending_pos_ == pending_.size()) {
                pending_.clear();
                pending_pos_ = 0;
            }
        }
        if (produced < n) produced += raw_.read(out + produced, n - produced);
        return produced;
    }

    // Scans for the record magic, always advancing at least one byte.
    bool resync() override {
        bool first = true;
        std::string carry;
        while (true) {
            std::string chunk = std::move(carry);
            carry.clear();
            size_t base = chunk.size();
            chunk.resize(base + kInChunk);
            size_t got = read(chunk.data() + base, kInChunk);
            chunk.resize(base + got);
            size_t from = first ? 1 : 0;
            first = false;
            size_t at = chunk.size() > from ? chunk.find(token_, from) : std::string::npos;
            if (at != std::string::npos) {
                pending_ = chunk.substr(at);
                pending_pos_ = 0;
                return true;
            }
            if (got == 0) return false;
            if (chunk.size() >= token_.size()) {
                carry = chunk.substr(chunk.size() - (token_.size() - 1));
            } else {
                carry = std::move(chunk);
            }
        }
    }

    uint64_t position() const override {
        return raw_.offset() - (pending_.size() - pending_pos_);
    }

private:
    RawFile raw_;
    std::string token_;
    std::string pending_;
    size_t pending_pos_ = 0;
};

class GzipSource : public Source {
public:
    explicit GzipSource(const std::string& path) : raw_(path), in_(kInChunk, '\0') {
        std::memset(&z_, 0, sizeof z_);
        if (inflateInit2(&z_, 31) != Z_OK) throw IoError("zlib init failed for " + path);
    }
    ~GzipSource() override { inflateEnd(&z_); }

    size_t read(char* out, size_t n) override {
        if (corrupt_) return 0;
        size_t produced = 0;
        while (produced < n) {
            if (in_pos_ == in_len_ && !fill()) break;
            z_.next_in = reinterpret_cast<Bytef*>(in_.data() + in_pos_);
            z_.avail_in = static_cast<uInt>(in_len_ - in_pos_);
            z_.next_out = reinterpret_cast<Bytef*>(out + produced);
            z_.avail_out = static_cast<uInt>(n - produced);
            int rc = inflate(&z_, Z_NO_FLUSH);
            in_pos_ = in_len_ - z_.avail_in;
            produced = n - z_.avail_out;
            if (rc == Z_STREAM_END) {
                boundary_ = position();
                inflateReset(&z_);
                continue;
            }
            if (rc == Z_OK || rc == Z_BUF_ERROR) continue;
            corrupt_ = true;
            break;
        }
        return produced;
    }

    bool corrupt() const override { return corrupt_; }

    bool resync() override {
        corrupt_ = false;
        inflateReset(&z_);
        bool first_scan = true;
        while (true) {
            size_t start = in_pos_ + (first_scan ? 1 : 0);
            for (size_t i = start; i + 2 < in_len_; ++i) {
                if (static_cast<unsigned char>(in_[i]) == 0x1f &&
                    static_cast<unsigned char>(in_[i + 1]) == 0x8b &&
                    static_cast<unsigned char>(in_[i + 2]) == 0x08) {
                    in_pos_ = i;
                    boundary_ = position();
                    return true;
                }
            }
            // keep a tail so the magic can straddle chunk boundaries
            size_t tail = std::min<size_t>(2, in_len_ > in_pos_ ? in_len_ - in_pos_ : 0);
            std::memmove(in_.data(), in_.data() + in_len_ - tail, tail);
            in_pos_ = 0;
            in_len_ = tail;
            size_t got = raw_.read(in_.data() + tail, in_.size() - tail);
            if (got == 0) {
                in_pos_ = in_len_;
                return false;
            }
            in_len_ += got;
            first_scan = false;
        }
    }

    uint64_t position() const override { return raw_.offset() - (in_len_ - in_pos_); }
    uint64_t boundary() const override { return boundary_; }

private:
    bool fill() {
        in_pos_ = 0;
        in_len_ = raw_.read(in_.data(), in_.size());
        return in_len_ > 0;
    }

    RawFile raw_;
    std::string in_;
    size_t in_pos_ = 0;
    size_t in_len_ = 0;
    z_stream z_;
    bool corrupt_ = false;
    uint64_t boundary_ = 0;
};

// Line/block reader over a Source, owning the decompressed lookahead.
class BufferedSource {
public:
    explicit BufferedSource(Source& source) : source_(source) {}

    // Line without its terminator; nullopt at end of data. Overlong lines
    // (no newline within 1 MB) are returned as-is so the caller can reject
    // them as damage.
    std::optional<std::string> read_line() {
        size_t scanned = 0;
        while (true) {
            size_t nl = buf_.find('\n', pos_ + scanned);
            if (nl != std::string::npos) {
                std::string line = buf_.substr(pos_, nl - pos_);
                pos_ = nl + 1;
                compact();
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            scanned = buf_.size() - pos_;
            if (scanned > 1024 * 1024) break;
            if (!fill()) break;
        }
        if (pos_ == buf_.size()) return std::nullopt;
        std::string line = buf_.substr(pos_);
        pos_ = buf_.size();
        compact();
        return line;
    }

    // Appends up to n bytes to out; returns bytes delivered.
    size_t read_into(std::string& out, size_t n) {
        size_t delivered = 0;
        while (delivered < n) {
            if (pos_ == buf_.size() && !fill()) break;
            size_t take = std::min(n - delivered, buf_.size() - pos_);
            out.append(buf_, pos_, take);
            pos_ += take;
            delivered += take;
        }
        compact();
        return delivered;
    }

    // Discards up to n bytes; returns bytes discarded.
    size_t skip(size_t n) {
        size_t discarded = 0;
        while (discarded < n) {
            if (pos_ == buf_.size() && !fill()) break;
            size_t take = std::min(n - discarded, buf_.size() - pos_);
            pos_ += take;
            discarded += take;
        }
        compact();
        return discarded;
    }

    bool source_corrupt() const { return source_.corrupt(); }

    void discard_pending() {
        buf_.clear();
        pos_ = 0;
    }

private:
    bool fill() {
        compact();
        size_t base = buf_.size();
        buf_.resize(base + kInChunk);
        size_t got = source_.read(buf_.data() + base, kInChunk);
        buf_.resize(base + got);
        return got > 0;
    }

    void compact() {
        if (pos_ > 256 * 1024 && pos_ * 2 > buf_.size()) {
            buf_.erase(0, pos_);
            pos_ = 0;
        }
    }

    Source& source_;
    std::string buf_;
    size_t pos_ = 0;
};

// Digits of an ISO-8601 WARC-Date collapsed to a 14-digit timestamp.
std::optional<std::string> warc_date_to_timestamp(std::string_view date) {
    std::string digits;
    for (char c : date) {
        if (c >= '0' && c <= '9') {
            digits.push_back(c);
            if (digits.size() == 14) return digits;
        }
    }
    return std::nullopt;
}

struct HttpSplit {
    size_t body_offset = 0; // into the block
    std::string content_type;
    bool found = false;
};

// Locates the header/body boundary of an HTTP response block and pulls
// out the Content-Type value.
HttpSplit split_http(std::string_view head) {
    HttpSplit split;
    if (!head.starts_with("HTTP/")) return split;
    size_t crlf = head.find("\r\n\r\n");
    size_t lf = head.find("\n\n");
    size_t end;
    size_t skip;
    if (crlf != std::string_view::npos && (lf == std::string_view::npos || crlf < lf)) {
        end = crlf;
        skip = 4;
    } else if (lf != std::string_view::npos) {
        end = lf;
        skip = 2;
    } else {
        return split;
    }
    split.found = true;
    split.body_offset = end + skip;
    std::string_view headers = head.substr(0, end);
    size_t line_start = 0;
    while (line_start < headers.size()) {
        size_t line_end = headers.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = headers.size();
        std::string_view line = headers.substr(line_start, line_end - line_start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (starts_with_ci(line, "content-type:")) {
            split.content_type = std::string(trim(line.substr(13)));
        }
        line_start = line_end + 1;
    }
    return split;
}

} // namespace

struct ArchiveReader::Impl {
    std::string path;
    ReaderOptions opts;
    bool is_arc = false;
    std::unique_ptr<Source> source;
    std::unique_ptr<BufferedSource> in;
    std::vector<CorruptionEvent> events;
    uint64_t total_events = 0;
    uint64_t yielded = 0;
    uint64_t skipped = 0;
    bool done = false;

    Impl(std::string p, ReaderOptions o) : path(std::move(p)), opts(o) {
        std::string lower = to_lower(path);
        bool gz = ends_with(lower, ".gz");
        std::string stem = gz ? lower.substr(0, lower.size() - 3) : lower;
        if (ends_with(stem, ".warc")) {
            is_arc = false;
        } else if (ends_with(stem, ".arc")) {
            is_arc = true;
        } else {
            throw UnsupportedFormatError("unsupported archive extension: " + path);
        }
        if (gz) {
            source = std::make_unique<GzipSource>(path);
        } else {
            source = std::make_unique<PlainSource>(path, is_arc ? "\nhttp" : "WARC/");
        }
        in = std::make_unique<BufferedSource>(*source);
    }

    void damage(const std::string& message) {
        uint64_t at = source->position();
        if (opts.strict) throw CorruptArchiveError(at, message);
        ++total_events;
        if (events.size() < kMaxEvents) events.push_back({at, message});
        log_warn(path + ": " + message + " at offset " + std::to_string(at));
        in->discard_pending();
        if (!source->resync()) done = true;
    }

    // Structurally sound record with an unusable field: note it, skip its
    // block, keep framing intact.
    void semantic_skip(const std::string& message, uint64_t length) {
        if (opts.strict) throw CorruptArchiveError(source->position(), message);
        ++total_events;
        if (events.size() < kMaxEvents) events.push_back({source->position(), message});
        log_warn(path + ": " + message);
        if (!read_block(length, false, nullptr)) damage("record truncated at end of file");
    }

    // Reads a content block of `length` bytes: HTTP headers are stripped
    // when present and the payload is capped. Returns false when the
    // stream ended early.
    bool read_block(uint64_t length, bool want_payload, ArchiveRecord* record) {
        uint64_t remaining = length;
        if (!want_payload) {
            uint64_t skipped_bytes = in->skip(remaining);
            return skipped_bytes == remaining;
        }
        std::string head;
        size_t head_take = static_cast<size_t>(std::min<uint64_t>(remaining, kHeadScan));
        if (in->read_into(head, head_take) != head_take) return false;
        remaining -= head_take;

        HttpSplit split = split_http(head);
        if (split.found) {
            record->server_mime_raw = split.content_type;
            record->payload.assign(head, split.body_offset, head.size() - split.body_offset);
        } else {
            record->payload = std::move(head);
        }

        if (record->payload.size() > opts.max_payload) {
            record->payload.resize(opts.max_payload);
            record->truncated = true;
        }
        uint64_t budget = opts.max_payload - record->payload.size();
        uint64_t keep = std::min<uint64_t>(remaining, budget);
        if (in->read_into(record->payload, static_cast<size_t>(keep)) != keep) return false;
        remaining -= keep;
        if (remaining > 0) {
            record->truncated = true;
            if (in->skip(remaining) != remaining) return false;
        }
        return true;
    }

    std::optional<ArchiveRecord> next() {
        while (!done) {
            auto r = is_arc ? next_arc() : next_warc();
            if (r) {
                ++yielded;
                return r;
            }
            // nullopt from the inner parser means "no record this round";
            // loop again unless the stream is finished.
        }
        return std::nullopt;
    }

    std::optional<ArchiveRecord> next_warc() {
        auto line = in->read_line();
        if (!line) {
            if (in->source_corrupt()) {
                damage("gzip stream corrupt");
            } else {
                done = true;
            }
            return std::nullopt;
        }
        if (line->empty()) return std::nullopt; // record separator
        if (!line->starts_with("WARC/")) {
            damage("missing WARC record magic");
            return std::nullopt;
        }

        uint64_t offset = source->boundary();
        std::map<std::string, std::string> headers;
        std::string last_key;
        while (true) {
            auto h = in->read_line();
            if (!h) {
                damage("unterminated WARC header block");
                return std::nullopt;
            }
            if (h->empty()) break;
            if ((h->front() == ' ' || h->front() == '\t') && !last_key.empty()) {
                headers[last_key] += ' ';
                headers[last_key] += trim(*h);
                continue;
            }
            size_t colon = h->find(':');
            if (colon == std::string::npos || colon == 0) {
                damage("malformed WARC header line");
                return std::nullopt;
            }
            last_key = to_lower(trim(h->substr(0, colon)));
            headers[last_key] = std::string(trim(std::string_view(*h).substr(colon + 1)));
            if (headers.size() > 256) {
                damage("oversized WARC header block");
                return std::nullopt;
            }
        }

        auto cl = headers.find("content-length");
        uint64_t length = 0;
        if (cl == headers.end() || cl->second.empty() ||
            !std::all_of(cl->second.begin(), cl->second.end(),
                         [](char c) { return c >= '0' && c <= '9'; }) ||
            cl->second.size() > 15) {
            damage("missing or malformed Content-Length");
            return std::nullopt;
        }
        length = std::stoull(cl->second);

        bool is_response = to_lower(headers["warc-type"]) == "response";
        if (!is_response) {
            ++skipped;
            if (!read_block(length, false, nullptr)) {
                if (in->source_corrupt()) {
                    damage("gzip stream corrupt inside record");
                } else {
                    damage("record truncated at end of file");
                }
            }
            return std::nullopt;
        }

        ArchiveRecord record;
        record.source_file = path;
        record.source_offset = offset;
        record.url = headers["warc-target-uri"];
        auto ts = warc_date_to_timestamp(headers["warc-date"]);
        if (!ts) {
            semantic_skip("missing or malformed WARC-Date", length);
            return std::nullopt;
        }
        record.crawl_timestamp = *ts;
        int year = extract_year(record.crawl_timestamp);
        if (year < 1994 || year > 2100) {
            semantic_skip("crawl year out of range", length);
            return std::nullopt;
        }

        // The record's own Content-Type covers the block; for non-HTTP
        // blocks it doubles as the payload type.
        std::string block_type = headers["content-type"];
        if (!read_block(length, true, &record)) {
            if (in->source_corrupt()) {
                damage("gzip stream corrupt inside record");
            } else {
                damage("record truncated at end of file");
            }
            return std::nullopt;
        }
        if (record.server_mime_raw.empty() && !block_type.empty() &&
            !starts_with_ci(block_type, "application/http")) {
            record.server_mime_raw = block_type;
        }
        return record;
    }

    std::optional<ArchiveRecord> next_arc() {
        auto line = in->read_line();
        if (!line) {
            if (in->source_corrupt()) {
                damage("gzip stream corrupt");
            } else {
                done = true;
            }
            return std::nullopt;
        }
        if (line->empty()) return std::nullopt;

        uint64_t offset = source->boundary();
        std::vector<std::string> fields;
        size_t start = 0;
        while (start <= line->size()) {
            size_t space = line->find(' ', start);
            if (space == std::string::npos) {
                fields.push_back(line->substr(start));
                break;
            }
            fields.push_back(line->substr(start, space - start));
            start = space + 1;
        }
        if (fields.size() != 5 && fields.size() != 10) {
            damage("malformed ARC header line");
            return std::nullopt;
        }

        const std::string& url = fields[0];
        const std::string& date = fields[2];
        const std::string& mime = fields[3];
        const std::string& len_text = fields.back();
        if (len_text.empty() || len_text.size() > 15 ||
            !std::all_of(len_text.begin(), len_text.end(),
                         [](char c) { return c >= '0' && c <= '9'; })) {
            damage("malformed ARC length field");
            return std::nullopt;
        }
        uint64_t length = std::stoull(len_text);

        bool is_meta = url.starts_with("filedesc:") || url.starts_with("dns:");
        if (is_meta) {
            ++skipped;
            if (!read_block(length, false, nullptr)) {
                damage("record truncated at end of file");
            }
            return std::nullopt;
        }

        ArchiveRecord record;
        record.source_file = path;
        record.source_offset = offset;
        record.url = url;
        if (date.size() != 14 ||
            !std::all_of(date.begin(), date.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            semantic_skip("malformed ARC date field", length);
            return std::nullopt;
        }
        record.crawl_timestamp = date;
        int year = extract_year(date);
        if (year < 1994 || year > 2100) {
            semantic_skip("crawl year out of range", length);
            return std::nullopt;
        }

        if (!read_block(length, true, &record)) {
            if (in->source_corrupt()) {
                damage("gzip stream corrupt inside record");
            } else {
                damage("record truncated at end of file");
            }
            return std::nullopt;
        }
        // The ARC header field wins over any embedded HTTP header.
        record.server_mime_raw = mime == "-" ? "" : mime;
        return record;
    }
};

ArchiveReader::ArchiveReader(std::string path, ReaderOptions options)
    : impl_(std::make_unique<Impl>(std::move(path), options)) {}

ArchiveReader::~ArchiveReader() = default;
ArchiveReader::ArchiveReader(ArchiveReader&&) noexcept = default;
ArchiveReader& ArchiveReader::operator=(ArchiveReader&&) noexcept = default;

std::optional<ArchiveRecord> ArchiveReader::next() { return impl_->next(); }

const std::vector<CorruptionEvent>& ArchiveReader::corruption_events() const {
    return impl_->events;
}

uint64_t ArchiveReader::response_count() const { return impl_->yielded; }
uint64_t ArchiveReader::skipped_count() const { return impl_->skipped; }

} // namespace formatscope
