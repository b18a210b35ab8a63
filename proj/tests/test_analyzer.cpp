#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "formatscope/analyzer.hpp"
#include "formatscope/errors.hpp"
#include "formatscope/util.hpp"

using namespace formatscope;

namespace {

void put(ProfileDataset& d, const std::string& server, const std::string& broad,
         const std::string& fine, int year, uint64_t count) {
    d.add(ProfileKey{server, broad, fine, year}, count);
}

// Five bases with even lifespans and counts 10^(1 + lifespan/2): an exact
// line in log10 space with slope 0.5 and intercept 1.
ProfileDataset exact_fit_dataset() {
    ProfileDataset d;
    struct Row {
        const char* base;
        int last_year;
        uint64_t half;
    };
    const Row rows[] = {
        {"app/l2", 2001, 50},
        {"app/l4", 2003, 500},
        {"app/l6", 2005, 5000},
        {"app/l8", 2007, 50000},
        {"app/l10", 2009, 500000},
    };
    for (const auto& row : rows) {
        put(d, "unknown/unknown", row.base, row.base, 2000, row.half);
        put(d, "unknown/unknown", row.base, row.base, row.last_year, row.half);
    }
    return d;
}

std::map<std::string, std::string> slurp_dir(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::ifstream in(entry.path(), std::ios::binary);
        REQUIRE(in);
        std::ostringstream buf;
        buf << in.rdbuf();
        out[entry.path().filename().string()] = buf.str();
    }
    return out;
}

} // namespace

TEST_SUITE("analyzer") {

TEST_CASE("tool names") {
    CHECK(std::string(to_string(Tool::broad)) == "broad");
    CHECK(std::string(to_string(Tool::fine)) == "fine");
}

TEST_CASE("failure rates cover every year, zero included") {
    ProfileDataset d;
    put(d, "image/png", "image/png", "image/png", 2000, 7);
    put(d, "unknown/unknown", "unidentified", "unidentified", 2000, 2);
    put(d, "text/plain", "text/plain", "unidentified", 2000, 1);
    put(d, "text/plain", "text/plain", "text/plain", 2001, 4);

    FailureRateTable t = failure_rates(d);
    CHECK(t.broad.at(2000) == doctest::Approx(0.2));
    CHECK(t.fine.at(2000) == doctest::Approx(0.3));
    CHECK(t.broad.at(2001) == 0.0);
    CHECK(t.fine.at(2001) == 0.0);
    CHECK(t.broad.size() == 2);
}

TEST_CASE("conflicts need two identified outcomes and distinct bases") {
    ProfileDataset d;
    put(d, "image/jpeg", "image/jpeg", "image/x-pict", 2000, 3);
    put(d, "image/jpeg", "image/jpeg", "image/x-pict", 2001, 2);
    put(d, "image/png", "image/png", "image/png; version=1.0", 2000, 9); // same base
    put(d, "a/b", "unidentified", "image/png", 2000, 5);                 // one side failed
    put(d, "a/b", "image/gif", "unidentified", 2000, 5);

    ConflictMatrix m = conflict_matrix(d);
    CHECK(m.total == 5);
    CHECK(m.distinct_pairs() == 1);
    CHECK(m.counts.at({"image/jpeg", "image/x-pict"}) == 5);
}

TEST_CASE("lifespans are inclusive and group across parameters") {
    ProfileDataset d;
    put(d, "image/png", "image/png", "image/png; version=1.0", 1996, 10);
    put(d, "image/png", "image/png", "image/png", 2010, 20);
    put(d, "image/gif", "image/gif", "image/gif; version=89a", 2001, 7);
    put(d, "a/b", "unidentified", "unidentified", 1994, 99);

    auto table = lifespan_table(d, Tool::fine);
    REQUIRE(table.size() == 2); // unidentified rows contribute nothing
    CHECK(table[0].base_type == "image/gif");
    CHECK(table[0].lifespan == 1);
    CHECK(table[1].base_type == "image/png");
    CHECK(table[1].first_year == 1996);
    CHECK(table[1].last_year == 2010);
    CHECK(table[1].lifespan == 15);
    CHECK(table[1].total_count == 30);
}

TEST_CASE("exponential fit recovers a planted line exactly") {
    auto table = lifespan_table(exact_fit_dataset(), Tool::fine);
    REQUIRE(table.size() == 5);
    ExponentialFit fit = fit_exponential(table);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate fits are refused") {
    CHECK_THROWS_AS(fit_exponential({}), DegenerateFitError);
    CHECK_THROWS_AS(fit_exponential({LifespanEntry{"a/b", 2000, 2004, 5, 10}}),
                    DegenerateFitError);
    // same lifespan everywhere: vertical scatter, no slope
    CHECK_THROWS_AS(fit_exponential({LifespanEntry{"a/b", 2000, 2004, 5, 10},
                                     LifespanEntry{"c/d", 2001, 2005, 5, 99}}),
                    DegenerateFitError);
    // flat but well posed: slope zero and perfect by convention
    ExponentialFit flat = fit_exponential({LifespanEntry{"a/b", 2000, 2000, 1, 10},
                                           LifespanEntry{"c/d", 2001, 2004, 4, 10}});
    CHECK(flat.slope == 0.0);
    CHECK(flat.r2 == 1.0);
}

TEST_CASE("births and deaths with right censoring") {
    auto bd = births_deaths(exact_fit_dataset(), Tool::fine);
    REQUIRE(bd.size() == 10); // zero-filled 2000..2009
    CHECK(bd.at(2000).births == 5);
    CHECK(bd.at(2000).deaths == 0);
    CHECK(bd.at(2001).deaths == 1);
    CHECK(bd.at(2002).deaths == 0);
    CHECK(bd.at(2003).deaths == 1);
    CHECK(bd.at(2005).deaths == 1);
    CHECK(bd.at(2007).deaths == 1);
    CHECK(bd.at(2009).deaths == 0); // survivor in the final year
    CHECK(bd.at(2009).births == 0);
    CHECK(births_deaths(ProfileDataset{}, Tool::fine).empty());
}

TEST_CASE("version shares group absent versions as unversioned") {
    ProfileDataset d;
    put(d, "image/png", "image/png", "image/png; version=1.0", 2000, 3);
    put(d, "image/png", "image/png", "image/png", 2000, 1);
    put(d, "image/png", "image/png", "image/png; version=2", 2001, 6);

    ShareTable t = version_shares(d, "image/png", Tool::fine);
    CHECK(t.at(2000).at("1.0") == doctest::Approx(0.75));
    CHECK(t.at(2000).at("unversioned") == doctest::Approx(0.25));
    CHECK(t.at(2001).at("2") == doctest::Approx(1.0));
    CHECK(t.at(2001).size() == 1);

    // the broad engine never saw a version for png, but the base exists
    ShareTable broad = version_shares(d, "image/png", Tool::broad);
    CHECK(broad.at(2000).at("unversioned") == doctest::Approx(1.0));

    CHECK_THROWS_WITH_AS(version_shares(d, "image/tiff", Tool::fine),
                         "base type not present for fine engine: image/tiff",
                         UnknownBaseTypeError);
}

TEST_CASE("software shares track distinct values of both parameters") {
    ProfileDataset d;
    put(d, "image/tiff", "image/tiff",
        "image/tiff; version=6.0; software=\"PhotoLab 2\"; hardware=\"Scanner X\"", 2000, 2);
    put(d, "image/tiff", "image/tiff", "image/tiff; software=\"PhotoLab 3\"", 2000, 2);
    put(d, "image/tiff", "image/tiff", "image/tiff", 2001, 4);

    SoftwareShares sw = software_shares(d, "image/tiff", Tool::fine);
    CHECK(sw.shares.at(2000).at("PhotoLab 2") == doctest::Approx(0.5));
    CHECK(sw.shares.at(2000).at("PhotoLab 3") == doctest::Approx(0.5));
    CHECK(sw.shares.at(2001).at("unknown") == doctest::Approx(1.0));
    CHECK(sw.distinct_software == 2);
    CHECK(sw.distinct_hardware == 1);
}

TEST_CASE("trend report discovers share-worthy bases from the data") {
    ProfileDataset d;
    put(d, "image/png", "image/png", "image/png; version=1.0", 2000, 3);
    put(d, "application/pdf", "application/pdf; software=\"A B\"",
        "application/pdf; version=1.4; software=\"A B\"", 2001, 5);
    put(d, "text/plain", "text/plain", "text/plain", 2001, 2);

    TrendReport fine_report = build_trend_report(d, Tool::fine);
    CHECK(fine_report.versions.size() == 2);
    CHECK(fine_report.versions.count("image/png") == 1);
    CHECK(fine_report.versions.count("application/pdf") == 1);
    CHECK(fine_report.software.size() == 1);
    CHECK(fine_report.software.count("application/pdf") == 1);
    CHECK_FALSE(fine_report.fit.has_value()); // every lifespan is 1

    TrendReport broad_report = build_trend_report(d, Tool::broad);
    CHECK(broad_report.versions.empty()); // broad carries no version params here
    CHECK(broad_report.software.size() == 1);

    TrendReport with_fit = build_trend_report(exact_fit_dataset(), Tool::fine);
    REQUIRE(with_fit.fit.has_value());
    CHECK(with_fit.fit->slope == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("written reports are byte-deterministic and fully manifested") {
    ProfileDataset d;
    put(d, "image/png", "image/png", "image/png; version=1.0", 2000, 3);
    put(d, "image/png", "image/png", "image/png", 2000, 1);
    put(d, "application/octet-stream", "unidentified", "unidentified", 2000, 1);
    put(d, "image/jpeg", "image/jpeg", "image/x-pict", 2001, 2);
    put(d, "application/pdf", "application/pdf; software=\"A B\"",
        "application/pdf; version=1.4; software=\"A B\"", 2001, 5);

    TrendReport report = build_trend_report(d, Tool::fine);
    auto base = std::filesystem::temp_directory_path();
    auto dir1 = base / "fsrep_a";
    auto dir2 = base / "fsrep_b";
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
    write_report(report, dir1.string());
    write_report(report, dir2.string());

    auto files1 = slurp_dir(dir1);
    auto files2 = slurp_dir(dir2);
    CHECK(files1 == files2);

    CHECK(files1.at("failure_rates.csv") ==
          "tool,year,failure_rate\n"
          "broad,2000,0.2\nbroad,2001,0\n"
          "fine,2000,0.2\nfine,2001,0\n");
    CHECK(files1.at("conflicts.csv") == "broad_base,fine_base,count\nimage/jpeg,image/x-pict,2\n");
    CHECK(files1.at("conflicts_summary.csv") == "distinct_pairs,total_conflicting\n1,2\n");
    CHECK(files1.at("lifespans.csv") ==
          "base_type,first_year,last_year,lifespan,total_count\n"
          "application/pdf,2001,2001,1,5\n"
          "image/png,2000,2000,1,4\n"
          "image/x-pict,2001,2001,1,2\n");
    CHECK(files1.at("fit.csv") == "slope,intercept,r2,log_base\n"); // degenerate, no row
    CHECK(files1.at("births_deaths.csv") == "year,births,deaths\n2000,1,1\n2001,2,0\n");
    CHECK(files1.at("version_shares.csv") ==
          "base_type,year,version,share\n"
          "application/pdf,2001,1.4,1\n"
          "image/png,2000,1.0,0.75\n"
          "image/png,2000,unversioned,0.25\n");
    CHECK(files1.at("software_shares.csv") ==
          "base_type,year,software,share\napplication/pdf,2001,A B,1\n");
    CHECK(files1.at("software_distinct.csv") ==
          "base_type,distinct_software,distinct_hardware\napplication/pdf,1,0\n");
    CHECK(files1.count("failure_rates.svg") == 1);
    CHECK(files1.count("lifespan_fit.svg") == 1);
    CHECK(files1.count("versions_application_pdf.svg") == 1);
    CHECK(files1.count("versions_image_png.svg") == 1);
    CHECK(files1.count("software_application_pdf.svg") == 1);
    for (const auto& [name, content] : files1) {
        if (name.ends_with(".svg")) {
            CHECK(content.starts_with("<svg xmlns"));
            CHECK(content.ends_with("</svg>\n"));
        }
    }

    // the manifest names every file with its exact size and checksum
    std::istringstream manifest(files1.at("report_manifest.tsv"));
    std::string header;
    std::getline(manifest, header);
    CHECK(header == "# file\tbytes\tcrc32");
    size_t listed = 0;
    std::string line;
    while (std::getline(manifest, line)) {
        auto t1 = line.find('\t');
        auto t2 = line.find('\t', t1 + 1);
        REQUIRE(t1 != std::string::npos);
        REQUIRE(t2 != std::string::npos);
        std::string name = line.substr(0, t1);
        const std::string& content = files1.at(name);
        CHECK(line.substr(t1 + 1, t2 - t1 - 1) == std::to_string(content.size()));
        CHECK(line.substr(t2 + 1) == std::to_string(crc32_of(content)));
        ++listed;
    }
    CHECK(listed == files1.size() - 1); // everything except the manifest itself

    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("empty dataset still yields a well-formed report") {
    TrendReport report = build_trend_report(ProfileDataset{}, Tool::broad);
    CHECK_FALSE(report.fit.has_value());
    CHECK(report.lifespans.empty());
    CHECK(report.births.empty());

    auto dir = std::filesystem::temp_directory_path() / "fsrep_empty";
    std::filesystem::remove_all(dir);
    write_report(report, dir.string());
    auto files = slurp_dir(dir);
    CHECK(files.size() == 12); // 9 tables + 2 charts + manifest
    CHECK(files.at("lifespans.csv") == "base_type,first_year,last_year,lifespan,total_count\n");
    CHECK(files.at("births_deaths.csv") == "year,births,deaths\n");
    std::filesystem::remove_all(dir);
}

} // TEST_SUITE
