#include "formatscope/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "formatscope/errors.hpp"
#include "formatscope/mimetype.hpp"

namespace formatscope {

const char* to_string(Tool tool) { return tool == Tool::broad ? "broad" : "fine"; }

namespace {

const std::string& field_of(const ProfileKey& key, Tool tool) {
    return tool == Tool::broad ? key.broad : key.fine;
}

// Serialized outcome fields repeat heavily across rows; parse each
// distinct string once. Unparseable text counts as unidentified.
class OutcomeCache {
public:
    const std::optional<ExtendedMimeType>& get(const std::string& text) {
        auto it = cache_.find(text);
        if (it != cache_.end()) return it->second;
        std::optional<ExtendedMimeType> parsed;
        try {
            IdentificationOutcome outcome = IdentificationOutcome::parse(text);
            if (outcome.identified()) parsed = *outcome.mime;
        } catch (const MalformedMimeError&) {
        }
        return cache_.emplace(text, std::move(parsed)).first->second;
    }

private:
    std::map<std::string, std::optional<ExtendedMimeType>> cache_;
};

} // namespace

FailureRateTable failure_rates(const ProfileDataset& d) {
    std::map<int, uint64_t> totals;
    std::map<int, uint64_t> broad_fail;
    std::map<int, uint64_t> fine_fail;
    for (const auto& [key, count] : d.entries()) {
        totals[key.year] += count;
        if (key.broad == kUnidentifiedToken) broad_fail[key.year] += count;
        if (key.fine == kUnidentifiedToken) fine_fail[key.year] += count;
    }
    FailureRateTable table;
    for (const auto& [year, total] : totals) {
        auto b = broad_fail.find(year);
        auto f = fine_fail.find(year);
        table.broad[year] = static_cast<double>(b == broad_fail.end() ? 0 : b->second) /
                            static_cast<double>(total);
        table.fine[year] = static_cast<double>(f == fine_fail.end() ? 0 : f->second) /
                           static_cast<double>(total);
    }
    return table;
}

ConflictMatrix conflict_matrix(const ProfileDataset& d) {
    ConflictMatrix matrix;
    OutcomeCache cache;
    for (const auto& [key, count] : d.entries()) {
        const auto& broad = cache.get(key.broad);
        const auto& fine = cache.get(key.fine);
        if (!broad || !fine) continue;
        std::string broad_base = broad->base();
        std::string fine_base = fine->base();
        if (broad_base == fine_base) continue;
        matrix.counts[{broad_base, fine_base}] += count;
        matrix.total += count;
    }
    return matrix;
}

std::vector<LifespanEntry> lifespan_table(const ProfileDataset& d, Tool tool) {
    OutcomeCache cache;
    std::map<std::string, LifespanEntry> acc;
    for (const auto& [key, count] : d.entries()) {
        const auto& parsed = cache.get(field_of(key, tool));
        if (!parsed) continue;
        std::string base = parsed->base();
        auto [it, fresh] = acc.try_emplace(base, LifespanEntry{base, key.year, key.year, 0, 0});
        it->second.first_year = std::min(it->second.first_year, key.year);
        it->second.last_year = std::max(it->second.last_year, key.year);
        it->second.total_count += count;
    }
    std::vector<LifespanEntry> table;
    table.reserve(acc.size());
    for (auto& [base, entry] : acc) {
        entry.lifespan = entry.last_year - entry.first_year + 1;
        table.push_back(entry);
    }
    return table;
}

ExponentialFit fit_exponential(const std::vector<LifespanEntry>& entries) {
    if (entries.size() < 2) {
        throw DegenerateFitError("need at least two lifespan entries to fit");
    }
    double sx = 0, sy = 0;
    for (const auto& e : entries) {
        sx += e.lifespan;
        sy += std::log10(static_cast<double>(e.total_count));
    }
    double n = static_cast<double>(entries.size());
    double xbar = sx / n;
    double ybar = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& e : entries) {
        double dx = e.lifespan - xbar;
        double dy = std::log10(static_cast<double>(e.total_count)) - ybar;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    if (sxx == 0.0) throw DegenerateFitError("all lifespans are equal");

    ExponentialFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    double ss_res = 0, ss_tot = 0;
    for (const auto& e : entries) {
        double y = std::log10(static_cast<double>(e.total_count));
        double predicted = fit.intercept + fit.slope * e.lifespan;
        ss_res += (y - predicted) * (y - predicted);
        ss_tot += (y - ybar) * (y - ybar);
    }
    fit.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

std::map<int, BirthsDeaths> births_deaths(const ProfileDataset& d, Tool tool) {
    if (d.entries().empty()) return {};
    int min_year = std::numeric_limits<int>::max();
    int max_year = std::numeric_limits<int>::min();
    for (const auto& [key, count] : d.entries()) {
        min_year = std::min(min_year, key.year);
        max_year = std::max(max_year, key.year);
    }
    std::map<int, BirthsDeaths> out;
    for (int year = min_year; year <= max_year; ++year) out[year] = {};
    for (const auto& entry : lifespan_table(d, tool)) {
        ++out[entry.first_year].births;
        if (entry.last_year < max_year) ++out[entry.last_year].deaths;
    }
    return out;
}

namespace {

// Shared core of the two share analyses.
ShareTable param_shares(const ProfileDataset& d, const std::string& base_type, Tool tool,
                        ParamKey key_kind, const char* absent_label) {
    OutcomeCache cache;
    std::map<int, uint64_t> totals;
    std::map<int, std::map<std::string, uint64_t>> sums;
    bool seen = false;
    for (const auto& [key, count] : d.entries()) {
        const auto& parsed = cache.get(field_of(key, tool));
        if (!parsed || parsed->base() != base_type) continue;
        seen = true;
        const std::string* value = parsed->param(key_kind);
        totals[key.year] += count;
        sums[key.year][value ? *value : std::string(absent_label)] += count;
    }
    if (!seen) {
        throw UnknownBaseTypeError("base type not present for " + std::string(to_string(tool)) +
                                   " engine: " + base_type);
    }
    ShareTable table;
    for (const auto& [year, by_value] : sums) {
        for (const auto& [value, count] : by_value) {
            table[year][value] =
                static_cast<double>(count) / static_cast<double>(totals.at(year));
        }
    }
    return table;
}

} // namespace

ShareTable version_shares(const ProfileDataset& d, const std::string& base_type, Tool tool) {
    return param_shares(d, base_type, tool, ParamKey::version, "unversioned");
}

SoftwareShares software_shares(const ProfileDataset& d, const std::string& base_type, Tool tool) {
    SoftwareShares out;
    out.shares = param_shares(d, base_type, tool, ParamKey::software, "unknown");

    OutcomeCache cache;
    std::set<std::string> software;
    std::set<std::string> hardware;
    for (const auto& [key, count] : d.entries()) {
        const auto& parsed = cache.get(field_of(key, tool));
        if (!parsed || parsed->base() != base_type) continue;
        if (const std::string* s = parsed->param(ParamKey::software)) software.insert(*s);
        if (const std::string* h = parsed->param(ParamKey::hardware)) hardware.insert(*h);
    }
    out.distinct_software = software.size();
    out.distinct_hardware = hardware.size();
    return out;
}

TrendReport build_trend_report(const ProfileDataset& d, Tool tool) {
    TrendReport report;
    report.tool = tool;
    report.failures = failure_rates(d);
    report.conflicts = conflict_matrix(d);
    report.lifespans = lifespan_table(d, tool);
    try {
        report.fit = fit_exponential(report.lifespans);
    } catch (const DegenerateFitError&) {
        report.fit = std::nullopt;
    }
    report.births = births_deaths(d, tool);

    // Bases worth share tables: those that ever carry the parameter.
    OutcomeCache cache;
    std::set<std::string> versioned;
    std::set<std::string> softwared;
    for (const auto& [key, count] : d.entries()) {
        const auto& parsed = cache.get(field_of(key, tool));
        if (!parsed) continue;
        if (parsed->param(ParamKey::version)) versioned.insert(parsed->base());
        if (parsed->param(ParamKey::software) || parsed->param(ParamKey::hardware)) {
            softwared.insert(parsed->base());
        }
    }
    for (const auto& base : versioned) report.versions[base] = version_shares(d, base, tool);
    for (const auto& base : softwared) report.software[base] = software_shares(d, base, tool);
    return report;
}

// ---- report files ------------------------------------------------------

namespace {

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string sanitize_name(const std::string& base) {
    std::string out;
    for (char c : base) {
        bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '-';
        out.push_back(keep ? c : '_');
    }
    return out;
}

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> pts;
    bool scatter = false;
};

constexpr const char* kPalette[] = {"#2c5f8a", "#c23b22", "#3a7d44", "#8a5fa0",
                                    "#c98f2a", "#4aa3a0", "#7a5230", "#606060"};
constexpr size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

constexpr double kW = 720, kH = 440;
constexpr double kLeft = 70, kRight = 690, kTop = 50, kBottom = 390;

void svg_open(std::ostringstream& s, const std::string& title) {
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\" font-family=\"sans-serif\">\n";
    s << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"#ffffff\"/>\n";
    s << "<text x=\"" << kW / 2 << "\" y=\"26\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
}

void svg_axes(std::ostringstream& s, double xmin, double xmax, double ymin, double ymax,
              bool x_integer, const std::string& x_label, const std::string& y_label) {
    auto X = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * (kRight - kLeft); };
    auto Y = [&](double y) { return kBottom - (y - ymin) / (ymax - ymin) * (kBottom - kTop); };
    for (int i = 0; i <= 4; ++i) {
        double xv = xmin + (xmax - xmin) * i / 4.0;
        double yv = ymin + (ymax - ymin) * i / 4.0;
        s << "<line x1=\"" << fmt2(X(xv)) << "\" y1=\"" << kTop << "\" x2=\"" << fmt2(X(xv))
          << "\" y2=\"" << kBottom << "\" stroke=\"#e0e0e0\"/>\n";
        s << "<line x1=\"" << kLeft << "\" y1=\"" << fmt2(Y(yv)) << "\" x2=\"" << kRight
          << "\" y2=\"" << fmt2(Y(yv)) << "\" stroke=\"#e0e0e0\"/>\n";
        std::string x_text = x_integer ? std::to_string(static_cast<long long>(std::llround(xv)))
                                       : fmt2(xv);
        s << "<text x=\"" << fmt2(X(xv)) << "\" y=\"" << kBottom + 18
          << "\" text-anchor=\"middle\" font-size=\"11\">" << x_text << "</text>\n";
        s << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt2(Y(yv) + 4)
          << "\" text-anchor=\"end\" font-size=\"11\">" << fmt2(yv) << "</text>\n";
    }
    s << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight << "\" y2=\""
      << kBottom << "\" stroke=\"#333333\"/>\n";
    s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kBottom << "\" stroke=\"#333333\"/>\n";
    s << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kH - 8
      << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
    s << "<text x=\"" << kLeft << "\" y=\"" << kTop - 10 << "\" font-size=\"12\">" << y_label
      << "</text>\n";
}

std::string svg_chart(const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<PlotSeries>& series,
                      bool x_integer) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmin == xmax) {
        xmin -= 1;
        xmax += 1;
    }
    if (ymin == ymax) {
        ymin -= 1;
        ymax += 1;
    }
    double pad = (ymax - ymin) * 0.05;
    ymin -= pad;
    ymax += pad;

    auto X = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * (kRight - kLeft); };
    auto Y = [&](double y) { return kBottom - (y - ymin) / (ymax - ymin) * (kBottom - kTop); };

    std::ostringstream s;
    svg_open(s, title);
    svg_axes(s, xmin, xmax, ymin, ymax, x_integer, x_label, y_label);

    for (size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % kPaletteSize];
        const auto& pts = series[i].pts;
        if (series[i].scatter) {
            for (const auto& [x, y] : pts) {
                s << "<circle cx=\"" << fmt2(X(x)) << "\" cy=\"" << fmt2(Y(y))
                  << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            }
        } else if (!pts.empty()) {
            s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : pts) s << fmt2(X(x)) << "," << fmt2(Y(y)) << " ";
            s << "\"/>\n";
        }
        double ly = kTop + 16 * static_cast<double>(i);
        s << "<rect x=\"" << kRight - 150 << "\" y=\"" << fmt2(ly) << "\" width=\"10\" height=\"10\" fill=\""
          << color << "\"/>\n";
        s << "<text x=\"" << kRight - 135 << "\" y=\"" << fmt2(ly + 9) << "\" font-size=\"11\">"
          << series[i].label << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

// Stacked share bands, one filled path per value, shares summing to 1.
std::string svg_stack(const std::string& title, const ShareTable& table) {
    std::vector<int> years;
    std::set<std::string> values;
    for (const auto& [year, by_value] : table) {
        years.push_back(year);
        for (const auto& [value, share] : by_value) values.insert(value);
    }
    std::ostringstream s;
    svg_open(s, title);
    double xmin = years.empty() ? 0 : years.front();
    double xmax = years.empty() ? 1 : years.back();
    if (xmin == xmax) {
        xmin -= 1;
        xmax += 1;
    }
    svg_axes(s, xmin, xmax, 0.0, 1.0, true, "year", "share");
    auto X = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * (kRight - kLeft); };
    auto Y = [&](double y) { return kBottom - y / 1.0 * (kBottom - kTop); };

    // cumulative lower/upper boundary per value, in sorted value order
    std::map<int, double> cum;
    for (const auto& year : years) cum[year] = 0.0;
    size_t index = 0;
    for (const auto& value : values) {
        std::vector<std::pair<double, double>> lower;
        std::vector<std::pair<double, double>> upper;
        for (int year : years) {
            double lo = cum[year];
            double share = 0.0;
            auto by_value = table.at(year);
            auto it = by_value.find(value);
            if (it != by_value.end()) share = it->second;
            cum[year] = lo + share;
            lower.push_back({static_cast<double>(year), lo});
            upper.push_back({static_cast<double>(year), lo + share});
        }
        const char* color = kPalette[index % kPaletteSize];
        if (!upper.empty()) {
            s << "<path d=\"M";
            for (const auto& [x, y] : upper) s << fmt2(X(x)) << " " << fmt2(Y(y)) << " L";
            for (auto it = lower.rbegin(); it != lower.rend(); ++it) {
                s << fmt2(X(it->first)) << " " << fmt2(Y(it->second));
                if (std::next(it) != lower.rend()) s << " L";
            }
            s << " Z\" fill=\"" << color << "\" fill-opacity=\"0.75\" stroke=\"none\"/>\n";
        }
        double ly = kTop + 16 * static_cast<double>(index);
        s << "<rect x=\"" << kRight - 150 << "\" y=\"" << fmt2(ly) << "\" width=\"10\" height=\"10\" fill=\""
          << color << "\"/>\n";
        s << "<text x=\"" << kRight - 135 << "\" y=\"" << fmt2(ly + 9) << "\" font-size=\"11\">"
          << value << "</text>\n";
        ++index;
    }
    s << "</svg>\n";
    return s.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + path);
}

} // namespace

void write_report(const TrendReport& report, const std::string& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw IoError("cannot create directory " + directory);

    std::map<std::string, std::string> files;

    {
        std::string csv = "tool,year,failure_rate\n";
        for (const auto& [year, rate] : report.failures.broad) {
            csv += "broad," + std::to_string(year) + "," + fmt_g(rate) + "\n";
        }
        for (const auto& [year, rate] : report.failures.fine) {
            csv += "fine," + std::to_string(year) + "," + fmt_g(rate) + "\n";
        }
        files["failure_rates.csv"] = csv;
    }
    {
        std::string csv = "broad_base,fine_base,count\n";
        for (const auto& [pair, count] : report.conflicts.counts) {
            csv += csv_field(pair.first) + "," + csv_field(pair.second) + "," +
                   std::to_string(count) + "\n";
        }
        files["conflicts.csv"] = csv;
        files["conflicts_summary.csv"] =
            "distinct_pairs,total_conflicting\n" + std::to_string(report.conflicts.distinct_pairs()) +
            "," + std::to_string(report.conflicts.total) + "\n";
    }
    {
        std::string csv = "base_type,first_year,last_year,lifespan,total_count\n";
        for (const auto& e : report.lifespans) {
            csv += csv_field(e.base_type) + "," + std::to_string(e.first_year) + "," +
                   std::to_string(e.last_year) + "," + std::to_string(e.lifespan) + "," +
                   std::to_string(e.total_count) + "\n";
        }
        files["lifespans.csv"] = csv;
    }
    {
        std::string csv = "slope,intercept,r2,log_base\n";
        if (report.fit) {
            csv += fmt_g(report.fit->slope) + "," + fmt_g(report.fit->intercept) + "," +
                   fmt_g(report.fit->r2) + ",10\n";
        }
        files["fit.csv"] = csv;
    }
    {
        std::string csv = "year,births,deaths\n";
        for (const auto& [year, bd] : report.births) {
            csv += std::to_string(year) + "," + std::to_string(bd.births) + "," +
                   std::to_string(bd.deaths) + "\n";
        }
        files["births_deaths.csv"] = csv;
    }
    {
        std::string csv = "base_type,year,version,share\n";
        for (const auto& [base, table] : report.versions) {
            for (const auto& [year, by_value] : table) {
                for (const auto& [value, share] : by_value) {
                    csv += csv_field(base) + "," + std::to_string(year) + "," + csv_field(value) +
                           "," + fmt_g(share) + "\n";
                }
            }
        }
        files["version_shares.csv"] = csv;
    }
    {
        std::string csv = "base_type,year,software,share\n";
        std::string distinct = "base_type,distinct_software,distinct_hardware\n";
        for (const auto& [base, sw] : report.software) {
            for (const auto& [year, by_value] : sw.shares) {
                for (const auto& [value, share] : by_value) {
                    csv += csv_field(base) + "," + std::to_string(year) + "," + csv_field(value) +
                           "," + fmt_g(share) + "\n";
                }
            }
            distinct += csv_field(base) + "," + std::to_string(sw.distinct_software) + "," +
                        std::to_string(sw.distinct_hardware) + "\n";
        }
        files["software_shares.csv"] = csv;
        files["software_distinct.csv"] = distinct;
    }

    {
        PlotSeries broad{"broad", {}, false};
        for (const auto& [year, rate] : report.failures.broad) {
            broad.pts.push_back({static_cast<double>(year), rate});
        }
        PlotSeries fine{"fine", {}, false};
        for (const auto& [year, rate] : report.failures.fine) {
            fine.pts.push_back({static_cast<double>(year), rate});
        }
        files["failure_rates.svg"] =
            svg_chart("identification failure rates", "year", "failure rate", {broad, fine}, true);
    }
    {
        PlotSeries scatter{"formats", {}, true};
        for (const auto& e : report.lifespans) {
            scatter.pts.push_back({static_cast<double>(e.lifespan),
                                   std::log10(static_cast<double>(e.total_count))});
        }
        std::vector<PlotSeries> series{scatter};
        if (report.fit && !report.lifespans.empty()) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (const auto& e : report.lifespans) {
                lo = std::min(lo, static_cast<double>(e.lifespan));
                hi = std::max(hi, static_cast<double>(e.lifespan));
            }
            PlotSeries line{"fit", {}, false};
            line.pts.push_back({lo, report.fit->intercept + report.fit->slope * lo});
            line.pts.push_back({hi, report.fit->intercept + report.fit->slope * hi});
            series.push_back(line);
        }
        files["lifespan_fit.svg"] =
            svg_chart("lifespan vs popularity", "lifespan (years)", "log10 count", series, true);
    }
    for (const auto& [base, table] : report.versions) {
        files["versions_" + sanitize_name(base) + ".svg"] =
            svg_stack("version shares: " + base, table);
    }
    for (const auto& [base, sw] : report.software) {
        files["software_" + sanitize_name(base) + ".svg"] =
            svg_stack("software shares: " + base, sw.shares);
    }

    std::string manifest = "# file\tbytes\tcrc32\n";
    for (const auto& [name, content] : files) {
        write_text_file(directory + "/" + name, content);
        manifest += name + "\t" + std::to_string(content.size()) + "\t" +
                    std::to_string(crc32_of(content)) + "\n";
    }
    write_text_file(directory + "/report_manifest.tsv", manifest);
}

} // namespace formatscope
