#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "formatscope/signature.hpp"
#include "formatscope/warc.hpp"

namespace formatscope {

// One dataset key: what the server claimed, what each engine concluded,
// and the crawl year.
struct ProfileKey {
    std::string server; // base MIME or unknown/unknown
    std::string broad;  // serialized IdentificationOutcome
    std::string fine;   // serialized IdentificationOutcome
    int year = 0;

    friend bool operator==(const ProfileKey&, const ProfileKey&) = default;
    friend bool operator<(const ProfileKey& a, const ProfileKey& b) {
        return std::tie(a.year, a.server, a.broad, a.fine) <
               std::tie(b.year, b.server, b.broad, b.fine);
    }
};

// Keyed resource counts. Merging is associative and commutative with the
// empty dataset as identity, so shard partials can be folded in any order.
class ProfileDataset {
public:
    void add(const ProfileKey& key, uint64_t count = 1);

    const std::map<ProfileKey, uint64_t>& entries() const { return entries_; }
    uint64_t total() const { return total_; }
    bool empty() const { return entries_.empty(); }
    size_t size() const { return entries_.size(); }

    friend bool operator==(const ProfileDataset&, const ProfileDataset&) = default;

    // TSV, one line per entry, sorted by (year, server, broad, fine):
    // server<TAB>broad<TAB>fine<TAB>year<TAB>count
    std::string emit() const;
    void emit_to(std::ostream& out) const;
    void save_file(const std::string& path) const;

    // Exact inverse of emit. Space-separated lines are accepted as a
    // fallback; the last two fields are year and count and the middle is
    // re-split on canonical serialization boundaries.
    static ProfileDataset load(std::string_view text);
    static ProfileDataset load_file(const std::string& path);

private:
    std::map<ProfileKey, uint64_t> entries_;
    uint64_t total_ = 0;
};

ProfileDataset merge(const ProfileDataset& a, const ProfileDataset& b);

// Runs both engines on one record and builds its key. Extractors run only
// for base types that carry embedded metadata, at most once per payload.
ProfileKey profile_record(const ArchiveRecord& record, const SignatureSet& fine_set,
                          const SignatureSet& broad_set);

ProfileDataset aggregate(const std::vector<ProfileKey>& keys);

struct PipelineOptions {
    size_t shards = 1;
    size_t max_payload = 100ull << 20;
};

struct PipelineSummary {
    uint64_t records = 0;
    uint64_t skipped = 0;
    uint64_t corrupt = 0;
    uint64_t broad_unidentified = 0;
    uint64_t fine_unidentified = 0;
    double seconds = 0.0;
};

// Profiles a set of archive files with one worker per shard. Workers own
// private partial datasets; the fold of partials is shard-count invariant.
ProfileDataset run_pipeline(std::vector<std::string> files, const SignatureSet& fine_set,
                            const SignatureSet& broad_set, const PipelineOptions& options,
                            PipelineSummary* summary = nullptr);

} // namespace formatscope
