// End-to-end tests of the command-line tool: each case runs the real binary
// and asserts on its exit code and JSON output.

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include "json.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CliResult {
    int exit_code = -1;
    std::string out;
};

/** Runs the tool with `args`, capturing stdout; stderr is discarded unless
 *  `keep_stderr` routes it into the capture (used to check stream split). */
CliResult run_cli(const std::string& args, bool capture_stderr_instead = false) {
    std::string cmd = std::string(TSENS_CLI_PATH) + " " + args;
    cmd += capture_stderr_instead ? " 2>&1 1>/dev/null" : " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int status = pclose(pipe);
    CliResult result;
    result.out = std::move(out);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("tsens_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

/** The four-tuple chain dataset used across the suite: R1 -- R2 -- R3 with
 *  |Q| = 4 and local sensitivity 4 at (b1, c1) in R2. */
fs::path chain_dataset(const std::string& tag) {
    const fs::path dir = fresh_dir(tag);
    write_file(dir / "r1.csv", "A,B\na1,b1\na2,b1\na3,b2\n");
    write_file(dir / "r2.csv", "B,C\nb1,c1\n");
    write_file(dir / "r3.csv", "C,D,__cnt\nc1,d1,1\nc1,d2,1\nc2,d1,1\n");
    write_file(dir / "manifest.json",
               R"({"relations": [)"
               R"({"name": "R1", "path": "r1.csv"},)"
               R"({"name": "R2", "path": "r2.csv"},)"
               R"({"name": "R3", "path": "r3.csv", "cnt": "__cnt"}]})");
    write_file(dir / "q.cq", "q(A, B, C, D) :- R1(A, B), R2(B, C), R3(C, D) .\n");
    return dir;
}

fs::path triangle_dataset(const std::string& tag) {
    const fs::path dir = fresh_dir(tag);
    write_file(dir / "r1.csv", "A,B\nx,y\n");
    write_file(dir / "r2.csv", "B,C\ny,z\n");
    write_file(dir / "r3.csv", "C,A\nz,x\n");
    write_file(dir / "manifest.json",
               R"({"relations": [)"
               R"({"name": "R1", "path": "r1.csv"},)"
               R"({"name": "R2", "path": "r2.csv"},)"
               R"({"name": "R3", "path": "r3.csv"}]})");
    write_file(dir / "q.cq", "q() :- R1(A, B), R2(B, C), R3(C, A) .\n");
    return dir;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

json parse_single_line(const std::string& out) {
    REQUIRE(!out.empty());
    REQUIRE(out.back() == '\n');
    REQUIRE(out.find('\n') == out.size() - 1);  // exactly one line
    return json::parse(out);
}

}  // namespace

TEST_CASE("sensitivity command reports the chain fixture", "[cli]") {
    const fs::path dir = chain_dataset("sens");
    const auto result = run_cli("sensitivity --data " + quoted(dir / "manifest.json") +
                                " --query " + quoted(dir / "q.cq"));
    REQUIRE(result.exit_code == 0);
    const json doc = parse_single_line(result.out);

    CHECK(doc["schema"] == 1);
    CHECK(doc["command"] == "sensitivity");
    CHECK(doc["decomposition"] == "gyo");
    CHECK(doc["query"] == "q");
    CHECK(doc["config"]["mode"] == "exact");
    CHECK(doc["config"]["tables"] == true);
    CHECK(doc["data"]["total_tuples"] == "7");
    CHECK(doc["data"]["relations"] == json::array({"R1", "R2", "R3"}));

    const json& report = doc["report"];
    CHECK(report["ls"] == "4");
    CHECK(report["join_size"] == "4");
    CHECK(report["witness"]["relation"] == "R2");
    CHECK(report["witness"]["values"] == json::array({"b1", "c1"}));
    CHECK(report["witness"]["tsens"] == "4");
    REQUIRE(report["tables"].is_array());
    REQUIRE(report["tables"].size() == 3);
    CHECK(report["tables"][1]["relation"] == "R2");
    CHECK(report["tables"][1]["key_attrs"] == json::array({"B", "C"}));
    CHECK(report["per_relation"].size() == 3);
    CHECK(report["per_relation"][0]["tsens"] == "2");
    CHECK(report["stats"]["max_atoms_per_node"] == 1);
}

TEST_CASE("sensitivity --no-tables omits the per-tuple tables", "[cli]") {
    const fs::path dir = chain_dataset("notables");
    const auto result = run_cli("sensitivity --data " + quoted(dir / "manifest.json") +
                                " --query " + quoted(dir / "q.cq") + " --no-tables");
    REQUIRE(result.exit_code == 0);
    const json doc = parse_single_line(result.out);
    CHECK(doc["config"]["tables"] == false);
    CHECK(!doc["report"].contains("tables"));
    CHECK(doc["report"]["ls"] == "4");
}

TEST_CASE("sensitivity topk mode bounds and converges", "[cli]") {
    const fs::path dir = chain_dataset("topk");
    const std::string base = "sensitivity --data " + quoted(dir / "manifest.json") +
                             " --query " + quoted(dir / "q.cq") + " --mode topk";

    const auto k1 = run_cli(base + " --k 1");
    REQUIRE(k1.exit_code == 0);
    const json doc1 = parse_single_line(k1.out);
    CHECK(doc1["config"]["mode"] == "topk");
    CHECK(doc1["config"]["k"] == 1);
    CHECK(doc1["report"]["ls"] == "4");  // the max is in the kept top-1 everywhere

    const auto k10 = run_cli(base + " --k 10");
    REQUIRE(k10.exit_code == 0);
    const json doc10 = parse_single_line(k10.out);
    CHECK(doc10["report"]["ls"] == "4");
    CHECK(doc10["report"]["witness"] == doc1["report"]["witness"]);
}

TEST_CASE("decompose reports the join tree for an acyclic query", "[cli]") {
    const fs::path dir = chain_dataset("decomp");
    const auto result = run_cli("decompose --query " + quoted(dir / "q.cq"));
    REQUIRE(result.exit_code == 0);
    const json doc = parse_single_line(result.out);
    CHECK(doc["command"] == "decompose");
    CHECK(doc["acyclic"] == true);
    CHECK(doc["decomposition"] == "gyo");
    REQUIRE(doc["tree"]["nodes"].size() == 3);
    CHECK(doc["tree"]["max_atoms_per_node"] == 1);
    CHECK(doc["steps"].size() == 2);
    CHECK(doc["doubly_acyclic"]["ok"] == true);
    CHECK(!doc.contains("residual"));
}

TEST_CASE("decompose reports residual edges for a cyclic query", "[cli]") {
    const fs::path dir = triangle_dataset("cyc");
    const auto result = run_cli("decompose --query " + quoted(dir / "q.cq"));
    REQUIRE(result.exit_code == 0);
    const json doc = parse_single_line(result.out);
    CHECK(doc["acyclic"] == false);
    REQUIRE(doc["residual"].size() == 3);
    CHECK(!doc.contains("tree"));
    CHECK(!doc.contains("decomposition"));
}

TEST_CASE("decompose validates a supplied decomposition file", "[cli]") {
    const fs::path dir = triangle_dataset("ghd");
    write_file(dir / "ghd.json",
               R"([{"atoms": ["R1", "R2"], "parent": null}, {"atoms": ["R3"], "parent": 0}])");
    const auto result = run_cli("decompose --query " + quoted(dir / "q.cq") + " --ghd " +
                                quoted(dir / "ghd.json"));
    REQUIRE(result.exit_code == 0);
    const json doc = parse_single_line(result.out);
    CHECK(doc["acyclic"] == false);  // the query itself stays cyclic
    CHECK(doc["decomposition"] == "ghd-file");
    CHECK(doc["tree"]["max_atoms_per_node"] == 2);
    REQUIRE(doc["tree"]["nodes"].size() == 2);
    CHECK(doc["tree"]["nodes"][0]["atoms"] == json::array({"R1", "R2"}));
}

TEST_CASE("sensitivity falls back to a single-node decomposition on cyclic queries", "[cli]") {
    const fs::path dir = triangle_dataset("fallback");
    const auto result = run_cli("sensitivity --data " + quoted(dir / "manifest.json") +
                                " --query " + quoted(dir / "q.cq"));
    REQUIRE(result.exit_code == 0);
    const json doc = parse_single_line(result.out);
    CHECK(doc["decomposition"] == "single-node");
    CHECK(doc["report"]["ls"] == "1");
    CHECK(doc["report"]["join_size"] == "1");
}

TEST_CASE("oracle command agrees with the engine on the fixture", "[cli]") {
    const fs::path dir = chain_dataset("oracle");
    const auto result = run_cli("oracle --data " + quoted(dir / "manifest.json") + " --query " +
                                quoted(dir / "q.cq"));
    REQUIRE(result.exit_code == 0);
    const json doc = parse_single_line(result.out);
    CHECK(doc["command"] == "oracle");
    CHECK(doc["report"]["ls"] == "4");
    CHECK(doc["report"]["join_size"] == "4");
    CHECK(doc["report"]["witness"]["relation"] == "R2");
}

TEST_CASE("dp-answer in test mode is exact and echoes its budget", "[cli]") {
    const fs::path dir = chain_dataset("dp");
    const auto result = run_cli("dp-answer --data " + quoted(dir / "manifest.json") +
                                " --query " + quoted(dir / "q.cq") +
                                " --primary-private R2 --ell 1 --test-mode");
    REQUIRE(result.exit_code == 0);
    const json doc = parse_single_line(result.out);
    CHECK(doc["command"] == "dp-answer");
    CHECK(doc["config"]["test_mode"] == true);
    CHECK(doc["config"]["primary_private"] == "R2");
    const json& answer = doc["answer"];
    CHECK(answer["tau"] == 1);
    // R2's only tuple has sensitivity 4 > 1, so truncation empties the join.
    CHECK(answer["raw_truncated"] == "0");
    CHECK(answer["value"] == 0.0);
    CHECK(answer["budget"]["epsilon_estimate"] == 0.25);
    CHECK(answer["budget"]["epsilon_svt"] == 0.25);
    CHECK(answer["budget"]["epsilon_answer"] == 0.5);
}

TEST_CASE("repeated runs with one seed are byte-identical, new seeds diverge", "[cli]") {
    const fs::path dir = chain_dataset("seed");
    const std::string base = "dp-answer --data " + quoted(dir / "manifest.json") + " --query " +
                             quoted(dir / "q.cq") + " --primary-private R2 --ell 4";
    const auto first = run_cli(base + " --seed 7");
    const auto second = run_cli(base + " --seed 7");
    const auto other = run_cli(base + " --seed 8");
    REQUIRE(first.exit_code == 0);
    CHECK(first.out == second.out);
    CHECK(first.out != other.out);

    const std::string sens = "sensitivity --data " + quoted(dir / "manifest.json") +
                             " --query " + quoted(dir / "q.cq");
    CHECK(run_cli(sens).out == run_cli(sens).out);
}

TEST_CASE("pretty output goes to stderr and leaves stdout machine-readable", "[cli]") {
    const fs::path dir = chain_dataset("pretty");
    const std::string args = "sensitivity --data " + quoted(dir / "manifest.json") +
                             " --query " + quoted(dir / "q.cq") + " --pretty";
    const auto out = run_cli(args);
    REQUIRE(out.exit_code == 0);
    const json doc = parse_single_line(out.out);  // still one clean JSON line
    CHECK(doc["report"]["ls"] == "4");

    const auto err = run_cli(args, /*capture_stderr_instead=*/true);
    CHECK(err.out.find("ls = 4") != std::string::npos);
}

TEST_CASE("timings are opt-in", "[cli]") {
    const fs::path dir = chain_dataset("timings");
    const std::string base = "sensitivity --data " + quoted(dir / "manifest.json") +
                             " --query " + quoted(dir / "q.cq");
    CHECK(!parse_single_line(run_cli(base).out).contains("timings"));
    const json doc = parse_single_line(run_cli(base + " --timings").out);
    REQUIRE(doc.contains("timings"));
    CHECK(doc["timings"].contains("load_ms"));
    CHECK(doc["timings"].contains("compute_ms"));
    CHECK(doc["timings"].contains("total_ms"));
}

TEST_CASE("reduce-sat writes a loadable dataset and verdict", "[cli]") {
    const fs::path dir = fresh_dir("sat");
    write_file(dir / "f.cnf", "c two clauses\np cnf 2 2\n1 -2 0\n2 0\n");
    const fs::path out_dir = dir / "reduction";
    const auto result = run_cli("reduce-sat --cnf " + quoted(dir / "f.cnf") + " --out " +
                                quoted(out_dir) + " --check");
    REQUIRE(result.exit_code == 0);
    const json doc = parse_single_line(result.out);
    CHECK(doc["command"] == "reduce-sat");
    CHECK(doc["num_vars"] == 2);
    CHECK(doc["num_clauses"] == 2);
    CHECK(doc["relations"] == json::array({"R0", "R1", "R2"}));
    CHECK(doc["check"]["satisfiable"] == true);
    CHECK(doc["check"]["ls"] == "1");

    // The emitted files round-trip through the sensitivity command.
    const auto reload = run_cli("sensitivity --data " + quoted(out_dir / "manifest.json") +
                                " --query " + quoted(out_dir / "query.cq") + " --no-tables");
    REQUIRE(reload.exit_code == 0);
    const json reloaded = parse_single_line(reload.out);
    CHECK(reloaded["decomposition"] == "gyo");
    CHECK(reloaded["report"]["ls"] == "1");
}

TEST_CASE("reduce-sat on an unsatisfiable formula reports sensitivity zero", "[cli]") {
    const fs::path dir = fresh_dir("unsat");
    write_file(dir / "f.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    const auto result = run_cli("reduce-sat --cnf " + quoted(dir / "f.cnf") + " --out " +
                                quoted(dir / "red") + " --check");
    REQUIRE(result.exit_code == 0);
    const json doc = parse_single_line(result.out);
    CHECK(doc["check"]["satisfiable"] == false);
    CHECK(doc["check"]["ls"] == "0");
}

TEST_CASE("errors map to exit codes and JSON error objects", "[cli]") {
    const fs::path dir = chain_dataset("errors");

    SECTION("usage error: missing required flag") {
        const auto result = run_cli("sensitivity --query " + quoted(dir / "q.cq"));
        CHECK(result.exit_code == 1);
        const json doc = parse_single_line(result.out);
        CHECK(doc["error"]["kind"] == "usage");
        CHECK(doc["schema"] == 1);
    }
    SECTION("usage error: unknown subcommand") {
        const auto result = run_cli("frobnicate");
        CHECK(result.exit_code == 1);
        CHECK(parse_single_line(result.out)["error"]["kind"] == "usage");
    }
    SECTION("config error: zero epsilon") {
        const auto result = run_cli("dp-answer --data " + quoted(dir / "manifest.json") +
                                    " --query " + quoted(dir / "q.cq") +
                                    " --primary-private R2 --epsilon 0");
        CHECK(result.exit_code == 1);
        CHECK(parse_single_line(result.out)["error"]["kind"] == "config");
    }
    SECTION("data error: missing manifest") {
        const auto result = run_cli("sensitivity --data " + quoted(dir / "nope.json") +
                                    " --query " + quoted(dir / "q.cq"));
        CHECK(result.exit_code == 2);
        CHECK(parse_single_line(result.out)["error"]["kind"] == "data");
    }
    SECTION("parse error: malformed query text") {
        write_file(dir / "bad.cq", "this is not a query\n");
        const auto result = run_cli("decompose --query " + quoted(dir / "bad.cq"));
        CHECK(result.exit_code == 2);
        const json doc = parse_single_line(result.out);
        CHECK(doc["error"]["kind"] == "parse");
        CHECK(doc["error"]["message"].get<std::string>().find("line") != std::string::npos);
    }
    SECTION("self-join rejection") {
        write_file(dir / "self.cq", "q() :- R1(A, B), R1(B, C) .\n");
        const auto result = run_cli("decompose --query " + quoted(dir / "self.cq"));
        CHECK(result.exit_code == 2);
        CHECK(parse_single_line(result.out)["error"]["kind"] == "self_join");
    }
    SECTION("query error: relation missing from the database") {
        write_file(dir / "unknown.cq", "q() :- R9(A, B) .\n");
        const auto result = run_cli("sensitivity --data " + quoted(dir / "manifest.json") +
                                    " --query " + quoted(dir / "unknown.cq"));
        CHECK(result.exit_code == 2);
        CHECK(parse_single_line(result.out)["error"]["kind"] == "query");
    }
    SECTION("ghd error: decomposition misses an atom") {
        write_file(dir / "bad_ghd.json", R"([{"atoms": ["R1"], "parent": null}])");
        const auto result = run_cli("decompose --query " + quoted(dir / "q.cq") + " --ghd " +
                                    quoted(dir / "bad_ghd.json"));
        CHECK(result.exit_code == 2);
        CHECK(parse_single_line(result.out)["error"]["kind"] == "ghd");
    }
}
