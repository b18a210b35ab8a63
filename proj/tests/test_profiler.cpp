#include <doctest.h>

#include <limits>
#include <string>

#include "formatscope/errors.hpp"
#include "formatscope/profiler.hpp"

using namespace formatscope;

namespace {

ProfileKey key(const std::string& server, const std::string& broad, const std::string& fine,
               int year) {
    return ProfileKey{server, broad, fine, year};
}

} // namespace

TEST_SUITE("profiler") {

TEST_CASE("keys order by year first") {
    ProfileKey a = key("z/z", "z/z", "z/z", 1999);
    ProfileKey b = key("a/a", "a/a", "a/a", 2000);
    CHECK(a < b);
    CHECK_FALSE(b < a);
    ProfileKey c = key("a/a", "b/b", "a/a", 1999);
    ProfileKey d = key("a/a", "b/b", "b/b", 1999);
    CHECK(c < d);
}

TEST_CASE("emit is sorted and tab separated") {
    ProfileDataset d;
    d.add(key("image/png", "image/png", "image/png; version=1.0", 2004), 101);
    d.add(key("image/png", "image/png", "image/png; version=1.0", 2004));
    d.add(key("text/html", "text/html", "text/html; version=3.2", 1997), 5);
    CHECK(d.emit() ==
          "text/html\ttext/html\ttext/html; version=3.2\t1997\t5\n"
          "image/png\timage/png\timage/png; version=1.0\t2004\t102\n");
    CHECK(d.total() == 107);
    CHECK(d.size() == 2);
}

TEST_CASE("load parses tab lines and is emit's inverse") {
    std::string text =
        "text/html\ttext/html\ttext/html; version=3.2\t1997\t5\n"
        "image/png\timage/png\timage/png; version=1.0\t2004\t102\n";
    ProfileDataset d = ProfileDataset::load(text);
    CHECK(d.emit() == text);
    CHECK(d.total() == 107);
}

TEST_CASE("load accepts the space-separated fallback") {
    ProfileDataset d =
        ProfileDataset::load("image/png image/png image/png; version=1.0 2004 102\n");
    REQUIRE(d.size() == 1);
    const auto& [k, count] = *d.entries().begin();
    CHECK(k.server == "image/png");
    CHECK(k.broad == "image/png");
    CHECK(k.fine == "image/png; version=1.0");
    CHECK(k.year == 2004);
    CHECK(count == 102);
}

TEST_CASE("space fallback survives quoted values containing spaces") {
    ProfileDataset d;
    ProfileKey k = key("application/pdf",
                       "application/pdf; software=\"Distiller 4.0 for Windows\"",
                       "unidentified", 2001);
    d.add(k, 7);
    std::string spaced = d.emit();
    for (auto& c : spaced) {
        if (c == '\t') c = ' ';
    }
    ProfileDataset back = ProfileDataset::load(spaced);
    REQUIRE(back.size() == 1);
    CHECK(back.entries().begin()->first == k);
    CHECK(back.entries().begin()->second == 7);
}

TEST_CASE("load rejects malformed lines with their line number") {
    CHECK_THROWS_AS(ProfileDataset::load("only three fields\n"), ParseError);
    try {
        ProfileDataset::load(
            "image/png\timage/png\timage/png\t2004\t5\n"
            "image/png\timage/png\timage/png\t2004\tnotanumber\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    // non-canonical fields are rejected, not silently rewritten
    CHECK_THROWS_AS(ProfileDataset::load("Image/PNG\timage/png\timage/png\t2004\t5\n"),
                    ParseError);
    CHECK_THROWS_AS(ProfileDataset::load("image/png\tbadmime\timage/png\t2004\t5\n"),
                    ParseError);
    CHECK_THROWS_AS(ProfileDataset::load("image/png\timage/png\timage/png\t0\t5\n"),
                    ParseError);
    CHECK_THROWS_AS(ProfileDataset::load("image/png\timage/png\timage/png\t2004\t0\n"),
                    ParseError);
}

TEST_CASE("merge is a monoid fold") {
    ProfileDataset a, b;
    a.add(key("x/a", "x/a", "x/a", 2000), 3);
    a.add(key("x/b", "x/b", "x/b", 2001), 1);
    b.add(key("x/a", "x/a", "x/a", 2000), 4);
    b.add(key("x/c", "x/c", "x/c", 1999), 9);

    ProfileDataset ab = merge(a, b);
    CHECK(ab.total() == 17);
    CHECK(ab.entries().at(key("x/a", "x/a", "x/a", 2000)) == 7);
    CHECK(merge(a, b) == merge(b, a));
    CHECK(merge(a, ProfileDataset{}) == a);
}

TEST_CASE("counts that leave uint64 range raise OverflowError") {
    ProfileDataset a;
    a.add(key("x/a", "x/a", "x/a", 2000), std::numeric_limits<uint64_t>::max());
    CHECK_THROWS_AS(a.add(key("x/a", "x/a", "x/a", 2000), 1), OverflowError);

    ProfileDataset b;
    b.add(key("x/b", "x/b", "x/b", 2000), std::numeric_limits<uint64_t>::max());
    ProfileDataset c;
    c.add(key("x/c", "x/c", "x/c", 2000), 1);
    CHECK_THROWS_AS(merge(b, c), OverflowError);
}

TEST_CASE("aggregate counts duplicate keys") {
    std::vector<ProfileKey> keys = {key("x/a", "x/a", "x/a", 2000),
                                    key("x/a", "x/a", "x/a", 2000),
                                    key("x/b", "x/b", "x/b", 2000)};
    ProfileDataset d = aggregate(keys);
    CHECK(d.total() == 3);
    CHECK(d.size() == 2);
    CHECK(d.entries().at(keys[0]) == 2);
}

TEST_CASE("profile_record enriches identified outcomes with metadata") {
    auto fine = SignatureSet::compile(
        R"({"mode":"fine","signatures":[{"id":"pdf","mime":"application/pdf",)"
        R"("anchor":{"bof":0},"elements":["255044462d"]}]})");
    auto broad = fine; // same behavior is fine for this test

    ArchiveRecord record;
    record.url = "http://x/doc.pdf";
    record.crawl_timestamp = "20010501000000";
    record.server_mime_raw = "Application/PDF; charset=binary";
    record.payload = "%PDF-1.2\n/Producer (WriterPro 7)\n%%EOF\n";

    ProfileKey k = profile_record(record, fine, broad);
    CHECK(k.server == "application/pdf");
    CHECK(k.year == 2001);
    CHECK(k.fine == "application/pdf; version=1.2; software=\"WriterPro 7\"");
    CHECK(k.broad == k.fine);
}

TEST_CASE("profile_record leaves unidentified untouched") {
    auto set = SignatureSet::compile(R"({"mode":"fine","signatures":[)"
                                     R"({"id":"a","mime":"x/y","anchor":{"bof":0},"elements":["ff"]}]})");
    ArchiveRecord record;
    record.crawl_timestamp = "19970101000000";
    record.server_mime_raw = "";
    record.payload = std::string("\x01\x02\x03", 3);
    ProfileKey k = profile_record(record, set, set);
    CHECK(k.server == "unknown/unknown");
    CHECK(k.broad == "unidentified");
    CHECK(k.fine == "unidentified");
    CHECK(k.year == 1997);
}

} // TEST_SUITE
