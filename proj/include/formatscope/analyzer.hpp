#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "formatscope/profiler.hpp"

namespace formatscope {

enum class Tool { broad, fine };
const char* to_string(Tool tool);

// Fraction of resources each engine failed to identify, per year.
struct FailureRateTable {
    std::map<int, double> broad;
    std::map<int, double> fine;
};
FailureRateTable failure_rates(const ProfileDataset& d);

// Rows where both engines identified but disagree on the base type,
// keyed (broad_base, fine_base), counts summed across years.
struct ConflictMatrix {
    std::map<std::pair<std::string, std::string>, uint64_t> counts;
    uint64_t total = 0; // resources in conflict
    size_t distinct_pairs() const { return counts.size(); }
};
ConflictMatrix conflict_matrix(const ProfileDataset& d);

struct LifespanEntry {
    std::string base_type;
    int first_year = 0;
    int last_year = 0;
    int lifespan = 0; // inclusive: last - first + 1
    uint64_t total_count = 0;
};
std::vector<LifespanEntry> lifespan_table(const ProfileDataset& d, Tool tool);

// Least squares of log10(total_count) on lifespan.
struct ExponentialFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
ExponentialFit fit_exponential(const std::vector<LifespanEntry>& entries);

// New and lost base types per year; a format still present in the final
// year is right-censored, never counted as lost.
struct BirthsDeaths {
    uint64_t births = 0;
    uint64_t deaths = 0;
};
std::map<int, BirthsDeaths> births_deaths(const ProfileDataset& d, Tool tool);

// year -> value -> fraction of the base type's resources that year.
using ShareTable = std::map<int, std::map<std::string, double>>;

// Shares keyed on the version parameter; absent versions group as
// "unversioned". Throws UnknownBaseTypeError when the base never occurs.
ShareTable version_shares(const ProfileDataset& d, const std::string& base_type, Tool tool);

struct SoftwareShares {
    ShareTable shares; // absent software groups as "unknown"
    size_t distinct_software = 0;
    size_t distinct_hardware = 0;
};
SoftwareShares software_shares(const ProfileDataset& d, const std::string& base_type, Tool tool);

struct TrendReport {
    Tool tool = Tool::broad;
    FailureRateTable failures;
    ConflictMatrix conflicts;
    std::vector<LifespanEntry> lifespans;
    std::optional<ExponentialFit> fit; // absent when degenerate
    std::map<int, BirthsDeaths> births;
    std::map<std::string, ShareTable> versions;  // per base type
    std::map<std::string, SoftwareShares> software; // per base type
};

// Runs every analysis; share tables cover the bases that actually occur.
TrendReport build_trend_report(const ProfileDataset& d, Tool tool);

// CSV tables, SVG charts, and a digest manifest, all byte-deterministic
// for a given report.
void write_report(const TrendReport& report, const std::string& directory);

} // namespace formatscope
