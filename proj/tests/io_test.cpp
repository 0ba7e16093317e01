#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "tsens/io.hpp"
#include "tsens/relation.hpp"

using namespace tsens;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("tsens_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("csv ingestion: plain rows count once and duplicates merge", "[io]") {
    ValueDict dict;
    Relation rel = read_csv("A,B\na1,b1\na2,b2\na1,b1\n", "R", std::nullopt, dict);
    CHECK(rel.name() == "R");
    CHECK(rel.schema() == std::vector<std::string>{"A", "B"});
    CHECK(rel.distinct_rows() == 2);
    CHECK(rel.total() == Count(3));
}

TEST_CASE("csv ingestion: count columns", "[io]") {
    ValueDict dict;
    Relation conventional = read_csv("A,__cnt\nx,5\ny,2\n", "R", std::nullopt, dict);
    CHECK(conventional.schema() == std::vector<std::string>{"A"});
    CHECK(conventional.total() == Count(7));

    Relation named = read_csv("A,weight\nx,5\n", "R", std::string("weight"), dict);
    CHECK(named.total() == Count(5));

    // When a count column is named, a literally "__cnt"-titled column is
    // just data.
    Relation literal = read_csv("A,__cnt,weight\nx,keep,5\n", "R", std::string("weight"), dict);
    CHECK(literal.schema() == std::vector<std::string>{"A", "__cnt"});
    CHECK(literal.total() == Count(5));

    CHECK_THROWS_AS(read_csv("A,B\nx,y\n", "R", std::string("weight"), dict), DataError);
    CHECK_THROWS_AS(read_csv("A,__cnt\nx,0\n", "R", std::nullopt, dict), DataError);
    CHECK_THROWS_AS(read_csv("A,__cnt\nx,-2\n", "R", std::nullopt, dict), DataError);
    CHECK_THROWS_AS(read_csv("A,__cnt\nx,many\n", "R", std::nullopt, dict), DataError);
}

TEST_CASE("csv ingestion: quoting, newlines, CRLF, BOM", "[io]") {
    ValueDict dict;
    const std::string text =
        "\xEF\xBB\xBF"
        "A,B\r\n"
        "\"a,1\",\"say \"\"hi\"\"\"\r\n"
        "\"line\nbreak\",plain\r\n";
    Relation rel = read_csv(text, "R", std::nullopt, dict);
    CHECK(rel.schema() == std::vector<std::string>{"A", "B"});
    REQUIRE(rel.distinct_rows() == 2);
    CHECK(dict.find("a,1").has_value());
    CHECK(dict.find("say \"hi\"").has_value());
    CHECK(dict.find("line\nbreak").has_value());

    CHECK_THROWS_AS(read_csv("A,B\n\"unterminated\n", "R", std::nullopt, dict), DataError);
}

TEST_CASE("csv ingestion: structural errors name the offending row", "[io]") {
    ValueDict dict;
    CHECK_THROWS_AS(read_csv("", "R", std::nullopt, dict), DataError);
    CHECK_THROWS_AS(read_csv("A,A\nx,y\n", "R", std::nullopt, dict), DataError);
    CHECK_THROWS_AS(read_csv("__cnt\n3\n", "R", std::nullopt, dict), DataError);

    try {
        read_csv("A,B\na1,b1\nonly_one\n", "R", std::nullopt, dict);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        // Rows are numbered like file lines, counting the header.
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
}

TEST_CASE("csv writing round-trips, including tricky values", "[io]") {
    Database db;
    db.add_from_strings("R", {"A", "B"},
                        {{{"plain", "with,comma"}, 2},
                         {{"with \"quote\"", "line\nbreak"}, 1},
                         {{"", "empty-left"}, 3}});
    std::string text = write_csv(db.relation("R"), db.dict());
    CHECK(text.substr(0, text.find('\n')) == "A,B,__cnt");

    ValueDict dict2;
    Relation back = read_csv(text, "R", std::nullopt, dict2);
    CHECK(back.distinct_rows() == 3);
    CHECK(back.total() == Count(6));
    CHECK(dict2.find("with,comma").has_value());
    CHECK(dict2.find("line\nbreak").has_value());
    CHECK(dict2.find("").has_value());
}

TEST_CASE("manifests resolve relative paths and reject duplicates", "[io]") {
    Manifest m = parse_manifest(
        R"({"relations": [
              {"name": "R", "path": "data/r.csv"},
              {"name": "S", "path": "/abs/s.csv", "cnt": "weight"}
           ]})",
        "/base");
    REQUIRE(m.relations.size() == 2);
    CHECK(m.relations[0].path == fs::path("/base/data/r.csv"));
    CHECK_FALSE(m.relations[0].cnt_column.has_value());
    CHECK(m.relations[1].path == fs::path("/abs/s.csv"));
    CHECK(m.relations[1].cnt_column == std::string("weight"));

    CHECK_THROWS_AS(parse_manifest("not json", "/base"), DataError);
    CHECK_THROWS_AS(parse_manifest(R"({"no_relations": 1})", "/base"), DataError);
    CHECK_THROWS_AS(parse_manifest(R"({"relations": [{"path": "x.csv"}]})", "/base"), DataError);
    CHECK_THROWS_AS(parse_manifest(R"({"relations": [{"name": "R"}]})", "/base"), DataError);
    CHECK_THROWS_AS(parse_manifest(
                        R"({"relations": [{"name": "R", "path": "a.csv"},
                                          {"name": "R", "path": "b.csv"}]})",
                        "/base"),
                    DataError);
}

TEST_CASE("a database loads from a manifest on disk", "[io]") {
    fs::path dir = fresh_dir("io_load");
    write_file(dir / "r1.csv", "A,B\na1,b1\na2,b1\n");
    write_file(dir / "r2.csv", "B,n\nb1,4\n");
    write_file(dir / "manifest.json",
               R"({"relations": [{"name": "R1", "path": "r1.csv"},
                                 {"name": "R2", "path": "r2.csv", "cnt": "n"}]})");

    Manifest m = parse_manifest(read_text_file(dir / "manifest.json"), dir);
    Database db = load_database(m);
    CHECK(db.names() == std::vector<std::string>{"R1", "R2"});
    CHECK(db.relation("R1").total() == Count(2));
    CHECK(db.relation("R2").total() == Count(4));

    CHECK_THROWS_AS(read_text_file(dir / "missing.csv"), DataError);
    fs::remove_all(dir);
}

TEST_CASE("export writes a loadable dataset", "[io]") {
    Database db;
    db.add_from_strings("R", {"A"}, {{{"x"}, 2}});
    db.add_from_strings("S", {"B", "C"}, {{{"b,1", "c"}, 1}});

    fs::path dir = fresh_dir("io_export");
    export_database(db, dir / "out");
    CHECK(fs::exists(dir / "out" / "R.csv"));
    CHECK(fs::exists(dir / "out" / "S.csv"));
    CHECK(fs::exists(dir / "out" / "manifest.json"));

    Manifest m = parse_manifest(read_text_file(dir / "out" / "manifest.json"), dir / "out");
    Database back = load_database(m);
    CHECK(back.names() == db.names());
    CHECK(back.relation("R").total() == Count(2));
    CHECK(back.relation("S").distinct_rows() == 1);
    fs::remove_all(dir);
}

TEST_CASE("decomposition files parse into node specs", "[io]") {
    auto spec = parse_ghd(R"([{"atoms": ["R1", "R2"], "parent": null},
                              {"atoms": ["R3"], "parent": 0}])");
    REQUIRE(spec.size() == 2);
    CHECK(spec[0].atoms == std::vector<std::string>{"R1", "R2"});
    CHECK_FALSE(spec[0].parent.has_value());
    CHECK(spec[1].parent == 0);

    CHECK_THROWS_AS(parse_ghd("{}"), DataError);
    CHECK_THROWS_AS(parse_ghd("[3]"), DataError);
    CHECK_THROWS_AS(parse_ghd(R"([{"parent": null}])"), DataError);
    CHECK_THROWS_AS(parse_ghd(R"([{"atoms": "R1"}])"), DataError);
}
