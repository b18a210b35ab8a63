#include "formatscope/profiler.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "formatscope/errors.hpp"
#include "formatscope/extractors.hpp"

namespace formatscope {

void ProfileDataset::add(const ProfileKey& key, uint64_t count) {
    if (count == 0) return;
    uint64_t& slot = entries_[key];
    if (slot > std::numeric_limits<uint64_t>::max() - count) {
        throw OverflowError("profile count overflow for key " + key.server);
    }
    slot += count;
    if (total_ > std::numeric_limits<uint64_t>::max() - count) {
        throw OverflowError("profile total overflow");
    }
    total_ += count;
}

void ProfileDataset::emit_to(std::ostream& out) const {
    for (const auto& [key, count] : entries_) {
        out << key.server << '\t' << key.broad << '\t' << key.fine << '\t' << key.year << '\t'
            << count << '\n';
    }
}

std::string ProfileDataset::emit() const {
    std::ostringstream out;
    emit_to(out);
    return out.str();
}

void ProfileDataset::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    emit_to(out);
    out.flush();
    if (!out) throw IoError("write failed for " + path);
}

namespace {

// Canonical serialization of an outcome field, or nullopt when the text is
// not parseable at all.
std::optional<std::string> canonical_outcome(const std::string& text) {
    try {
        return IdentificationOutcome::parse(text).serialize();
    } catch (const MalformedMimeError&) {
        return std::nullopt;
    }
}

std::optional<int> parse_year(const std::string& text) {
    if (text.empty() || text.size() > 6 ||
        !std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return std::nullopt;
    }
    int year = std::stoi(text);
    if (year < 1994 || year > 2100) return std::nullopt; // same domain the reader enforces
    return year;
}

std::optional<uint64_t> parse_count(const std::string& text) {
    if (text.empty() || text.size() > 19 ||
        !std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return std::nullopt;
    }
    uint64_t value = std::stoull(text);
    if (value == 0) return std::nullopt;
    return value;
}

bool valid_server_field(const std::string& text) {
    return !text.empty() && normalize_server_mime(text) == text;
}

std::string join_tokens(const std::vector<std::string>& tokens, size_t from, size_t to) {
    std::string out;
    for (size_t i = from; i < to; ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i];
    }
    return out;
}

// Space-separated fallback: server is the first token, count and year the
// last two; the middle tokens split into broad and fine wherever both
// halves round-trip canonically.
std::optional<ProfileKey> parse_space_line(const std::string& line, uint64_t* count_out) {
    std::vector<std::string> tokens;
    size_t start = 0;
    while (start <= line.size()) {
        size_t space = line.find(' ', start);
        if (space == std::string::npos) {
            tokens.push_back(line.substr(start));
            break;
        }
        tokens.push_back(line.substr(start, space - start));
        start = space + 1;
    }
    if (tokens.size() < 5) return std::nullopt;

    auto count = parse_count(tokens.back());
    auto year = parse_year(tokens[tokens.size() - 2]);
    if (!count || !year || !valid_server_field(tokens[0])) return std::nullopt;

    size_t mid_end = tokens.size() - 2;
    for (size_t split = 2; split < mid_end; ++split) {
        std::string broad_text = join_tokens(tokens, 1, split);
        std::string fine_text = join_tokens(tokens, split, mid_end);
        auto broad = canonical_outcome(broad_text);
        auto fine = canonical_outcome(fine_text);
        if (broad && fine && *broad == broad_text && *fine == fine_text) {
            *count_out = *count;
            return ProfileKey{tokens[0], broad_text, fine_text, *year};
        }
    }
    return std::nullopt;
}

} // namespace

ProfileDataset ProfileDataset::load(std::string_view text) {
    ProfileDataset dataset;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        if (pos == text.size()) break;
        size_t nl = text.find('\n', pos);
        std::string line(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                       : nl - pos));
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> fields;
        size_t start = 0;
        while (start <= line.size()) {
            size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }

        if (fields.size() == 5) {
            if (!valid_server_field(fields[0])) {
                throw ParseError(line_no, "bad server field: " + fields[0]);
            }
            auto broad = canonical_outcome(fields[1]);
            if (!broad) throw ParseError(line_no, "bad broad field: " + fields[1]);
            auto fine = canonical_outcome(fields[2]);
            if (!fine) throw ParseError(line_no, "bad fine field: " + fields[2]);
            auto year = parse_year(fields[3]);
            if (!year) throw ParseError(line_no, "bad year field: " + fields[3]);
            auto count = parse_count(fields[4]);
            if (!count) throw ParseError(line_no, "bad count field: " + fields[4]);
            dataset.add(ProfileKey{fields[0], *broad, *fine, *year}, *count);
            continue;
        }
        if (fields.size() == 1) {
            uint64_t count = 0;
            if (auto key = parse_space_line(line, &count)) {
                dataset.add(*key, count);
                continue;
            }
        }
        throw ParseError(line_no, "expected 5 TAB-separated fields");
    }
    return dataset;
}

ProfileDataset ProfileDataset::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load(buf.str());
}

ProfileDataset merge(const ProfileDataset& a, const ProfileDataset& b) {
    ProfileDataset out = a;
    for (const auto& [key, count] : b.entries()) out.add(key, count);
    return out;
}

ProfileKey profile_record(const ArchiveRecord& record, const SignatureSet& fine_set,
                          const SignatureSet& broad_set) {
    ProfileKey key;
    key.year = extract_year(record.crawl_timestamp);
    key.server = normalize_server_mime(record.server_mime_raw);

    std::optional<PayloadMetadata> pdf_meta;
    std::optional<PayloadMetadata> html_meta;
    std::optional<PayloadMetadata> exif_meta;
    auto enrich = [&](IdentificationOutcome outcome) {
        if (!outcome.identified()) return outcome;
        std::string base = outcome.mime->base();
        if (base == "application/pdf") {
            if (!pdf_meta) pdf_meta = extract_pdf_metadata(record.payload);
            return apply_metadata(std::move(outcome), *pdf_meta);
        }
        if (base == "text/html") {
            if (!html_meta) html_meta = extract_html_version(record.payload);
            return apply_metadata(std::move(outcome), *html_meta);
        }
        if (base == "image/jpeg" || base == "image/tiff") {
            if (!exif_meta) exif_meta = extract_exif_software(record.payload);
            return apply_metadata(std::move(outcome), *exif_meta);
        }
        return outcome;
    };

    key.broad = enrich(broad_set.identify(record.payload)).serialize();
    key.fine = enrich(fine_set.identify(record.payload)).serialize();
    return key;
}

ProfileDataset aggregate(const std::vector<ProfileKey>& keys) {
    ProfileDataset dataset;
    for (const auto& key : keys) dataset.add(key);
    return dataset;
}

ProfileDataset run_pipeline(std::vector<std::string> files, const SignatureSet& fine_set,
                            const SignatureSet& broad_set, const PipelineOptions& options,
                            PipelineSummary* summary) {
    auto started = std::chrono::steady_clock::now();
    std::sort(files.begin(), files.end());

    size_t shards = std::max<size_t>(1, options.shards);
    shards = std::min(shards, std::max<size_t>(1, files.size()));

    std::vector<ProfileDataset> partials(shards);
    std::vector<PipelineSummary> partial_summaries(shards);
    std::atomic<size_t> next_file{0};
    std::vector<std::exception_ptr> failures(shards);

    auto worker = [&](size_t shard) {
        try {
            while (true) {
                size_t index = next_file.fetch_add(1);
                if (index >= files.size()) break;
                ArchiveReader reader(files[index], ReaderOptions{options.max_payload, false});
                while (auto record = reader.next()) {
                    ProfileKey key = profile_record(*record, fine_set, broad_set);
                    if (key.broad == std::string(kUnidentifiedToken)) {
                        ++partial_summaries[shard].broad_unidentified;
                    }
                    if (key.fine == std::string(kUnidentifiedToken)) {
                        ++partial_summaries[shard].fine_unidentified;
                    }
                    partials[shard].add(key);
                    ++partial_summaries[shard].records;
                }
                partial_summaries[shard].skipped += reader.skipped_count();
                partial_summaries[shard].corrupt += reader.corruption_events().size();
            }
        } catch (...) {
            failures[shard] = std::current_exception();
        }
    };

    if (shards == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(shards);
        for (size_t s = 0; s < shards; ++s) threads.emplace_back(worker, s);
        for (auto& t : threads) t.join();
    }
    for (auto& failure : failures) {
        if (failure) std::rethrow_exception(failure);
    }

    ProfileDataset result;
    for (auto& partial : partials) result = merge(result, partial);

    if (summary) {
        PipelineSummary total;
        for (const auto& part : partial_summaries) {
            total.records += part.records;
            total.skipped += part.skipped;
            total.corrupt += part.corrupt;
            total.broad_unidentified += part.broad_unidentified;
            total.fine_unidentified += part.fine_unidentified;
        }
        total.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        *summary = total;
    }
    return result;
}

} // namespace formatscope
