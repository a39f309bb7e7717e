#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nanores/io.hpp"
#include "nanores/manifest.hpp"
#include "support.hpp"

using namespace nanores;
using testsupport::TempDir;

namespace {

void touch(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    out << "stub";
}

}  // namespace

TEST_CASE("build_manifest parses the default pattern and sorts entries") {
    TempDir dir("man");
    // created out of order on purpose
    touch(dir.path() / "7_bravo_2.wav");
    touch(dir.path() / "0_alpha_1.wav");
    touch(dir.path() / "0_alpha_0.wav");
    touch(dir.path() / "3_alpha_0.wav");
    touch(dir.path() / "0_bravo_0.wav");
    touch(dir.path() / "notes.txt");       // ignored: no match
    touch(dir.path() / "x_alpha_0.wav");   // ignored: digit not numeric

    DatasetManifest m = build_manifest(dir.path());
    REQUIRE(m.entries.size() == 5);

    // sorted by (speaker, digit, trial)
    CHECK(m.entries[0].speaker == "alpha");
    CHECK(m.entries[0].digit == 0);
    CHECK(m.entries[0].trial == 0);
    CHECK(m.entries[1].digit == 0);
    CHECK(m.entries[1].trial == 1);
    CHECK(m.entries[2].digit == 3);
    CHECK(m.entries[3].speaker == "bravo");
    CHECK(m.entries[3].digit == 0);
    CHECK(m.entries[4].speaker == "bravo");
    CHECK(m.entries[4].digit == 7);
    CHECK(m.entries[4].path == (dir.path() / "7_bravo_2.wav").generic_string());
}

TEST_CASE("build_manifest flags duplicate triples naming both paths") {
    TempDir dir("mandup");
    touch(dir.path() / "1_alpha_2.wav");
    touch(dir.path() / "01_alpha_2.wav");  // same triple via leading zero
    try {
        build_manifest(dir.path());
        FAIL("expected DuplicateEntry");
    } catch (const DuplicateEntry& e) {
        std::string msg = e.what();
        CHECK(msg.find("01_alpha_2.wav") != std::string::npos);
        CHECK(msg.find("1_alpha_2.wav") != std::string::npos);
    }
}

TEST_CASE("build_manifest errors on empty or missing directories") {
    TempDir dir("manempty");
    touch(dir.path() / "readme.md");
    CHECK_THROWS_AS(build_manifest(dir.path()), EmptyDataset);
    CHECK_THROWS_AS(build_manifest(dir.path() / "nope"), IoError);
}

TEST_CASE("custom filename patterns") {
    TempDir dir("manpat");
    touch(dir.path() / "alpha-3-07.wav");
    touch(dir.path() / "bravo-9-00.wav");

    DatasetManifest m = build_manifest(dir.path(), "{speaker}-{digit}-{trial}.wav");
    REQUIRE(m.entries.size() == 2);
    CHECK(m.entries[0].speaker == "alpha");
    CHECK(m.entries[0].digit == 3);
    CHECK(m.entries[0].trial == 7);
    CHECK(m.entries[1].speaker == "bravo");
    CHECK(m.entries[1].digit == 9);
    CHECK(m.entries[1].trial == 0);
}

TEST_CASE("pattern literals are escaped, not treated as regex") {
    TempDir dir("manesc");
    touch(dir.path() / "a+b_1_x_2.wav");
    touch(dir.path() / "ab_1_x_2.wav");  // would match if '+' acted as a quantifier

    DatasetManifest m = build_manifest(dir.path(), "a+b_{digit}_{speaker}_{trial}.wav");
    REQUIRE(m.entries.size() == 1);
    CHECK(m.entries[0].path == (dir.path() / "a+b_1_x_2.wav").generic_string());
}

TEST_CASE("invalid patterns raise PatternError") {
    TempDir dir("manbadpat");
    touch(dir.path() / "1_a_1.wav");
    CHECK_THROWS_AS(build_manifest(dir.path(), "{digit}_{speaker}.wav"), PatternError);
    CHECK_THROWS_AS(build_manifest(dir.path(), "{digit}_{speaker}_{trial"), PatternError);
    CHECK_THROWS_AS(build_manifest(dir.path(), "{digit}_{speaker}_{bogus}.wav"), PatternError);
}

TEST_CASE("manifest JSON round-trip is faithful and stable") {
    TempDir dir("manjson");
    touch(dir.path() / "2_carol_5.wav");
    touch(dir.path() / "2_alice_1.wav");
    DatasetManifest m = build_manifest(dir.path());

    auto j1 = dir.path() / "m1.json";
    auto j2 = dir.path() / "m2.json";
    save_manifest(m, j1);
    DatasetManifest loaded = load_manifest(j1);
    REQUIRE(loaded.entries.size() == m.entries.size());
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        CHECK(loaded.entries[i].path == m.entries[i].path);
        CHECK(loaded.entries[i].speaker == m.entries[i].speaker);
        CHECK(loaded.entries[i].digit == m.entries[i].digit);
        CHECK(loaded.entries[i].trial == m.entries[i].trial);
    }
    save_manifest(loaded, j2);
    CHECK(read_file(j1) == read_file(j2));  // byte-identical re-save
}

TEST_CASE("load_manifest validates structure and duplicates") {
    TempDir dir("manload");
    auto p = dir.path() / "bad.json";

    write_file(p, "{\"not\": \"array\"}\n");
    CHECK_THROWS_AS(load_manifest(p), ParseError);

    write_file(p, "[{\"path\": \"a.wav\", \"speaker\": \"s\", \"digit\": 1}]\n");
    CHECK_THROWS_AS(load_manifest(p), ParseError);  // missing trial

    write_file(p, "[]\n");
    CHECK_THROWS_AS(load_manifest(p), EmptyDataset);

    write_file(p,
               "[{\"path\": \"a.wav\", \"speaker\": \"s\", \"digit\": 1, \"trial\": 2},"
               " {\"path\": \"b.wav\", \"speaker\": \"s\", \"digit\": 1, \"trial\": 2}]\n");
    CHECK_THROWS_AS(load_manifest(p), DuplicateEntry);

    write_file(p, "not json");
    CHECK_THROWS_AS(load_manifest(p), ParseError);
}

TEST_CASE("a thousand-file corpus is enumerated completely") {
    TempDir dir("manbig");
    for (int d = 0; d < 10; ++d)
        for (const char* s : {"alpha", "bravo", "charlie", "delta"})
            for (int t = 0; t < 5; ++t)
                touch(dir.path() / (std::to_string(d) + "_" + s + "_" + std::to_string(t) + ".wav"));

    DatasetManifest m = build_manifest(dir.path());
    CHECK(m.entries.size() == 200);
    // spot-check strict ordering
    for (std::size_t i = 1; i < m.entries.size(); ++i)
        CHECK(m.entries[i - 1].key() < m.entries[i].key());
}
