#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifdef _WIN32
#error "the CLI tests assume a POSIX shell"
#endif
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

const std::string kBin = FORMATSCOPE_BIN;
const std::string kSigDir = FORMATSCOPE_SIG_DIR;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out);
    out << content;
}

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("fscli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

RunResult run(const std::string& args) {
    static int serial = 0;
    fs::path out = fs::temp_directory_path() / ("fscli_out_" + std::to_string(serial));
    fs::path err = fs::temp_directory_path() / ("fscli_err_" + std::to_string(serial));
    ++serial;
    std::string cmd = q(kBin) + " " + args + " > " + q(out) + " 2> " + q(err);
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    fs::remove(out);
    fs::remove(err);
    return r;
}

std::string sig_args() {
    return "--fine-sig " + q(fs::path(kSigDir) / "fine.sig.json") + " --broad-sig " +
           q(fs::path(kSigDir) / "broad.sig.json");
}

const char* kSpecJson = R"({
    "seed": 42,
    "records_per_file": 60,
    "recipe": [
        {"year": 2004, "template": "png", "count": 40},
        {"year": 2004, "template": "random", "count": 5},
        {"year": 2005, "template": "pdf", "count": 30, "version": "1.6"},
        {"year": 2005, "template": "pdf", "count": 10, "truncate_eof": true},
        {"year": 2006, "template": "html", "count": 25, "version": "4.01"}
    ]})";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors") {
    CHECK(run("--help").exit_code == 0);
    CHECK(run("profile --help").exit_code == 0);
    CHECK(run("").exit_code == 2);          // a subcommand is required
    CHECK(run("frobnicate").exit_code == 2);
    CHECK(run("profile").exit_code == 2);   // missing --input
    CHECK(run("analyze --input x.tsv").exit_code == 2);
}

TEST_CASE("gen-corpus is reproducible and profile round-trips it") {
    fs::path dir = scratch("roundtrip");
    spit(dir / "spec.json", kSpecJson);

    RunResult gen = run("gen-corpus --spec " + q(dir / "spec.json") + " --output " +
                        q(dir / "corpus"));
    REQUIRE(gen.exit_code == 0);
    CHECK(gen.out.find("records\t110") != std::string::npos);
    REQUIRE(fs::exists(dir / "corpus" / "manifest.tsv"));

    RunResult gen2 = run("gen-corpus --spec " + q(dir / "spec.json") + " --output " +
                         q(dir / "corpus2") + " --seed 42");
    REQUIRE(gen2.exit_code == 0);
    for (const auto& entry : fs::directory_iterator(dir / "corpus")) {
        auto name = entry.path().filename();
        CHECK(slurp(entry.path()) == slurp(dir / "corpus2" / name));
    }

    // profiling the corpus directory reproduces the manifest's expectations
    RunResult prof = run("profile --input " + q(dir / "corpus") + " " + sig_args() +
                         " --output " + q(dir / "profile.tsv"));
    REQUIRE(prof.exit_code == 0);
    CHECK(prof.out.find("records processed\t110") != std::string::npos);
    CHECK(prof.out.find("corrupt records\t0") != std::string::npos);
    std::string tsv = slurp(dir / "profile.tsv");
    CHECK(tsv.find("image/png\timage/png\timage/png; version=1.0\t2004\t40\n") !=
          std::string::npos);
    // the truncated batch carries the default 1.4 header, not the 1.6 one
    CHECK(tsv.find("application/pdf\tapplication/pdf; version=1.4\tunidentified\t2005\t10\n") !=
          std::string::npos);
    CHECK(tsv.find("application/pdf\tapplication/pdf; version=1.6\tapplication/pdf; version=1.6"
                   "\t2005\t30\n") != std::string::npos);

    // shard count must not change a single output byte
    RunResult sharded = run("profile --input " + q(dir / "corpus") + " " + sig_args() +
                            " --shards 3 --output " + q(dir / "profile3.tsv"));
    REQUIRE(sharded.exit_code == 0);
    CHECK(slurp(dir / "profile3.tsv") == tsv);

    // and the analysis of that profile lands in the report directory
    RunResult ana = run("analyze --input " + q(dir / "profile.tsv") + " --report-dir " +
                        q(dir / "report") + " --tool fine");
    REQUIRE(ana.exit_code == 0);
    CHECK(ana.out.find("tool\tfine") != std::string::npos);
    CHECK(fs::exists(dir / "report" / "failure_rates.csv"));
    CHECK(fs::exists(dir / "report" / "report_manifest.tsv"));

    fs::remove_all(dir);
}

TEST_CASE("profile tolerates an empty input directory") {
    fs::path dir = scratch("empty");
    fs::create_directories(dir / "nothing");
    RunResult r = run("profile --input " + q(dir / "nothing") + " " + sig_args() +
                      " --output " + q(dir / "out.tsv"));
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("records processed\t0") != std::string::npos);
    CHECK(slurp(dir / "out.tsv").empty());
    fs::remove_all(dir);
}

TEST_CASE("bad inputs exit with the usage code") {
    fs::path dir = scratch("bad");
    // input path that does not exist
    CHECK(run("profile --input " + q(dir / "ghost.warc") + " " + sig_args()).exit_code == 2);
    // missing signature file
    spit(dir / "empty.warc", "");
    CHECK(run("profile --input " + q(dir / "empty.warc") + " --fine-sig " + q(dir / "no.json") +
              " --broad-sig " + q(dir / "no.json"))
              .exit_code == 2);
    // malformed profile rows
    spit(dir / "bad.tsv", "image/png\timage/png\n");
    CHECK(run("analyze --input " + q(dir / "bad.tsv") + " --report-dir " + q(dir / "rep"))
              .exit_code == 2);
    // profile input that is not an archive at all
    spit(dir / "notes.txt", "hello");
    CHECK(run("profile --input " + q(dir / "notes.txt") + " " + sig_args()).exit_code == 1);
    fs::remove_all(dir);
}

TEST_CASE("validate-signatures reports the deliberately weak entry") {
    RunResult r = run("validate-signatures --input " + q(fs::path(kSigDir) / "fine.sig.json") +
                      " --input " + q(fs::path(kSigDir) / "broad.sig.json"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("weak\tpict\t1") != std::string::npos);
    CHECK(r.out.find("weak signatures\t1") != std::string::npos);
    CHECK(r.out.find("errors\t0") != std::string::npos);

    fs::path dir = scratch("valbad");
    spit(dir / "broken.json", "{");
    CHECK(run("validate-signatures --input " + q(dir / "broken.json")).exit_code == 2);
    fs::remove_all(dir);
}

} // TEST_SUITE
