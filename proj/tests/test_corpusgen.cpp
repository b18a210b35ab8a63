#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "formatscope/corpusgen.hpp"
#include "formatscope/errors.hpp"
#include "formatscope/profiler.hpp"
#include "formatscope/signature.hpp"
#include "formatscope/util.hpp"
#include "formatscope/warc.hpp"

using namespace formatscope;

namespace {

RecipeLine line_of(int year, const std::string& format, uint64_t count = 1) {
    RecipeLine line;
    line.year = year;
    line.format = format;
    line.count = count;
    if (format == "pdf") line.version = "1.4";
    if (format == "html" || format == "html_tagless") line.version = "3.2";
    return line;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_SUITE("corpusgen") {

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(CorpusSpec::from_json("nope"), SpecError);
    CHECK_THROWS_AS(CorpusSpec::from_json(R"({"seed":1})"), SpecError); // no recipe
    CHECK_THROWS_AS(CorpusSpec::from_json(
                        R"({"recipe":[{"year":1200,"template":"png","count":1}]})"),
                    SpecError);
    CHECK_THROWS_AS(CorpusSpec::from_json(
                        R"({"recipe":[{"year":2000,"template":"wav","count":1}]})"),
                    SpecError);
    CHECK_THROWS_AS(CorpusSpec::from_json(
                        R"({"recipe":[{"year":2000,"template":"png","count":1,"version":"9"}]})"),
                    SpecError);
    CHECK_THROWS_AS(
        CorpusSpec::from_json(
            R"({"recipe":[{"year":2000,"template":"text","count":1,"truncate_eof":true}]})"),
        SpecError);
    CHECK_THROWS_AS(CorpusSpec::from_json(
                        R"({"recipe":[{"year":2000,"template":"pdf","count":1,"version":"2.0"}]})"),
                    SpecError);

    auto ok = CorpusSpec::from_json(
        R"({"seed":5,"recipe":[{"year":2000,"template":"pdf","count":2}]})");
    CHECK(ok.seed == 5);
    REQUIRE(ok.recipe.size() == 1);
    CHECK(ok.recipe[0].version == "1.4"); // default applied
}

TEST_CASE("build_record is a pure function of seed and index") {
    CorpusSpec spec;
    spec.seed = 99;
    RecipeLine line = line_of(2003, "png");
    line.pad = 64;

    BuiltRecord a = build_record(spec, line, 17);
    BuiltRecord b = build_record(spec, line, 17);
    CHECK(a.payload == b.payload);
    CHECK(a.timestamp == b.timestamp);
    CHECK(a.url == b.url);

    BuiltRecord c = build_record(spec, line, 18);
    CHECK(a.payload != c.payload);

    CorpusSpec other = spec;
    other.seed = 100;
    BuiltRecord d = build_record(other, line, 17);
    CHECK(a.payload != d.payload);
}

TEST_CASE("timestamps carry the recipe year and stay within the calendar") {
    CorpusSpec spec;
    spec.seed = 3;
    for (uint64_t i = 0; i < 50; ++i) {
        BuiltRecord rec = build_record(spec, line_of(1996, "text"), i);
        REQUIRE(rec.timestamp.size() == 14);
        CHECK(rec.timestamp.substr(0, 4) == "1996");
        int month = std::stoi(rec.timestamp.substr(4, 2));
        int day = std::stoi(rec.timestamp.substr(6, 2));
        CHECK(month >= 1);
        CHECK(month <= 12);
        CHECK(day >= 1);
        CHECK(day <= 28);
    }
}

TEST_CASE("template payload shapes") {
    CorpusSpec spec;
    spec.seed = 11;

    BuiltRecord png = build_record(spec, line_of(2000, "png"), 0);
    CHECK(png.payload.substr(0, 8) == std::string("\x89PNG\r\n\x1a\n", 8));
    CHECK(png.expected_fine == "image/png; version=1.0");

    BuiltRecord gif = build_record(spec, line_of(2000, "gif89a"), 1);
    CHECK(gif.payload.substr(0, 6) == "GIF89a");
    CHECK(gif.expected_fine == "image/gif; version=89a");

    RecipeLine pdf_line = line_of(2000, "pdf");
    pdf_line.software = "WriterPro 7";
    BuiltRecord pdf = build_record(spec, pdf_line, 2);
    CHECK(pdf.payload.substr(0, 8) == "%PDF-1.4");
    CHECK(pdf.payload.ends_with("%%EOF\n"));
    CHECK(pdf.expected_fine == "application/pdf; version=1.4; software=\"WriterPro 7\"");
    CHECK(pdf.expected_broad == pdf.expected_fine);

    RecipeLine cut = pdf_line;
    cut.malform.truncate_eof = true;
    BuiltRecord trunc = build_record(spec, cut, 3);
    CHECK(trunc.payload.ends_with("%%EO\n"));
    CHECK(trunc.expected_fine == "unidentified");
    CHECK(trunc.expected_broad == "application/pdf; version=1.4; software=\"WriterPro 7\"");

    BuiltRecord pict = build_record(spec, line_of(2000, "jpeg_nojfif"), 4);
    REQUIRE(pict.payload.size() > 523);
    CHECK(pict.payload[522] == '\x11');
    CHECK(pict.expected_broad == "image/jpeg");
    CHECK(pict.expected_fine == "image/x-pict");

    BuiltRecord tagless = build_record(spec, line_of(2000, "html_tagless"), 5);
    CHECK(tagless.expected_broad == "text/html");
    CHECK(tagless.expected_fine == "text/plain");

    BuiltRecord rnd = build_record(spec, line_of(2000, "random"), 6);
    CHECK(rnd.expected_broad == "unidentified");
    CHECK(rnd.expected_fine == "unidentified");
    auto first = static_cast<unsigned char>(rnd.payload[0]);
    CHECK(first >= 0xa0);
    CHECK(first <= 0xbf);
}

TEST_CASE("every template matches its constructed expectation under the shipped sets") {
    auto fine = SignatureSet::load_file(std::string(FORMATSCOPE_SIG_DIR) + "/fine.sig.json");
    auto broad = SignatureSet::load_file(std::string(FORMATSCOPE_SIG_DIR) + "/broad.sig.json");

    CorpusSpec spec;
    spec.seed = 20260819;
    std::vector<RecipeLine> lines;
    for (const auto& name : kTemplateNames) {
        RecipeLine line = line_of(2002, name);
        line.pad = 700; // push every payload past the weak-signature offset
        lines.push_back(line);
    }
    {
        RecipeLine pdf = line_of(2003, "pdf");
        pdf.version = "1.6";
        pdf.software = "Distiller 4.0 for Windows";
        lines.push_back(pdf);
        RecipeLine cut = pdf;
        cut.malform.truncate_eof = true;
        lines.push_back(cut);
        RecipeLine exif = line_of(2003, "jpeg_exif");
        exif.software = "SnapApp 2.0";
        exif.make = "ACME";
        exif.model = "Shooter 9";
        lines.push_back(exif);
        RecipeLine html = line_of(2003, "html");
        html.version = "xhtml-1.1";
        lines.push_back(html);
        RecipeLine nct = line_of(2003, "text");
        nct.malform.no_content_type = true;
        lines.push_back(nct);
    }

    uint64_t index = 0;
    for (const auto& line : lines) {
        for (int rep = 0; rep < 3; ++rep) {
            BuiltRecord rec = build_record(spec, line, index++);
            ArchiveRecord record;
            record.url = rec.url;
            record.crawl_timestamp = rec.timestamp;
            record.server_mime_raw = rec.server_mime;
            record.payload = rec.payload;
            ProfileKey k = profile_record(record, fine, broad);
            INFO("template ", line.format, " index ", index - 1);
            CHECK(k.broad == rec.expected_broad);
            CHECK(k.fine == rec.expected_fine);
            CHECK(k.year == line.year);
        }
    }
}

TEST_CASE("expected_profile groups by normalized key") {
    GroundTruthManifest manifest;
    ManifestEntry e;
    e.url = "http://x/a.png";
    e.timestamp = "20040101000000";
    e.server_mime = "image/png";
    e.expected_broad = "image/png";
    e.expected_fine = "image/png; version=1.0";
    manifest.add(e);
    e.timestamp = "20041231235959";
    manifest.add(e);
    e.server_mime = "IMAGE/PNG; q=1"; // normalizes to the same server field
    manifest.add(e);

    ProfileDataset d = manifest.expected_profile();
    REQUIRE(d.size() == 1);
    CHECK(d.entries().begin()->second == 3);
    CHECK(d.entries().begin()->first.year == 2004);
}

TEST_CASE("generate writes rolled archives plus a loadable manifest") {
    auto dir = std::filesystem::temp_directory_path() / "fsgen_test";
    std::filesystem::remove_all(dir);

    CorpusSpec spec = CorpusSpec::from_json(R"({
        "seed": 77, "records_per_file": 10,
        "recipe": [
            {"year": 1998, "template": "gif87a", "count": 12},
            {"year": 1999, "template": "text", "count": 13}
        ]})");
    GenerateResult result = generate(spec, dir.string());
    CHECK(result.archive_files.size() == 3); // 25 records, 10 per file
    CHECK(result.manifest.size() == 25);

    GroundTruthManifest loaded = GroundTruthManifest::load_file(result.manifest_path);
    REQUIRE(loaded.size() == 25);
    CHECK(loaded.expected_profile() == result.manifest.expected_profile());

    // archives really contain the manifest's records, in order
    size_t at = 0;
    for (const auto& file : result.archive_files) {
        ArchiveReader reader(file);
        while (auto rec = reader.next()) {
            REQUIRE(at < loaded.entries().size());
            const ManifestEntry& expect = loaded.entries()[at++];
            CHECK(rec->url == expect.url);
            CHECK(rec->crawl_timestamp == expect.timestamp);
            CHECK(rec->payload.size() == expect.payload_size);
            CHECK(crc32_of(rec->payload) == expect.payload_crc32);
        }
        CHECK(reader.corruption_events().empty());
    }
    CHECK(at == 25);

    // byte-identical on regeneration
    auto dir2 = std::filesystem::temp_directory_path() / "fsgen_test2";
    std::filesystem::remove_all(dir2);
    GenerateResult again = generate(spec, dir2.string());
    REQUIRE(again.archive_files.size() == result.archive_files.size());
    for (size_t i = 0; i < again.archive_files.size(); ++i) {
        CHECK(read_file(again.archive_files[i]) == read_file(result.archive_files[i]));
    }
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(dir2);
}

} // TEST_SUITE
