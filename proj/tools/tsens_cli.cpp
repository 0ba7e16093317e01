// tsens — command-line front end for the sensitivity engine.
//
// One subcommand per invocation; the result is a single line of compact
// JSON on stdout (schema-versioned, counts as decimal strings so 128-bit
// values survive). stderr carries human diagnostics only. Exit codes:
//   0  success
//   1  usage or configuration error
//   2  data / format error (query text, CSV, manifest, decomposition, ...)
//   3  computation error (count overflow, memory budget)
// Every failure also emits a JSON error object on stdout, so callers can
// always parse the output. Runs are deterministic: repeating a command
// with the same inputs and seed produces byte-identical JSON unless the
// opt-in --timings flag adds wall-clock fields.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tsens/dp.hpp"
#include "tsens/errors.hpp"
#include "tsens/hypergraph.hpp"
#include "tsens/io.hpp"
#include "tsens/oracle.hpp"
#include "tsens/query.hpp"
#include "tsens/relation.hpp"
#include "tsens/sensitivity.hpp"

namespace {

using nlohmann::json;
using namespace tsens;

// ---------------------------------------------------------------------------
// Timing

class PhaseTimer {
public:
    void start() { t0_ = std::chrono::steady_clock::now(); }

    void stop(const std::string& phase) {
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0_).count();
        phases_.emplace_back(phase, std::round(ms * 1000.0) / 1000.0);
    }

    json to_json() const {
        json o = json::object();
        double total = 0;
        for (const auto& [phase, ms] : phases_) {
            o[phase + "_ms"] = ms;
            total += ms;
        }
        o["total_ms"] = std::round(total * 1000.0) / 1000.0;
        return o;
    }

private:
    std::chrono::steady_clock::time_point t0_;
    std::vector<std::pair<std::string, double>> phases_;
};

// ---------------------------------------------------------------------------
// JSON serialization of library results

json witness_to_json(const std::optional<WitnessInfo>& witness) {
    if (!witness) return nullptr;
    return json{{"relation", witness->relation},
                {"values", witness->values},
                {"tsens", witness->tsens.to_string()}};
}

json per_relation_to_json(const std::vector<PerRelationBest>& bests) {
    json arr = json::array();
    for (const auto& best : bests) {
        json o{{"relation", best.relation}, {"tsens", best.tsens.to_string()}};
        o["values"] = best.values ? json(*best.values) : json(nullptr);
        arr.push_back(std::move(o));
    }
    return arr;
}

json stats_to_json(const SensitivityStats& stats) {
    return json{{"intermediate_rows_peak", stats.intermediate_rows_peak},
                {"intermediate_rows_total", stats.intermediate_rows_total},
                {"pass_table_max_rows", stats.pass_table_max_rows},
                {"max_atoms_per_node", stats.max_atoms_per_node}};
}

json tables_to_json(const std::vector<MultiplicityTable>& tables, const ValueDict& dict) {
    json arr = json::array();
    for (const auto& table : tables) {
        json rows = json::array();
        for (const auto& [row, cnt] : table.table.rows()) {
            json key = json::array();
            for (const ValueId id : row) key.push_back(dict.resolve(id));
            rows.push_back(json{{"key", std::move(key)}, {"tsens", cnt.to_string()}});
        }
        arr.push_back(json{{"relation", table.relation},
                           {"key_attrs", table.key_attrs},
                           {"free_attrs", table.free_attrs},
                           {"rows", std::move(rows)}});
    }
    return arr;
}

json report_to_json(const SensitivityReport& report, const ValueDict& dict,
                    bool include_tables) {
    json o{{"ls", report.ls.to_string()},
           {"join_size", report.join_size.to_string()},
           {"witness", witness_to_json(report.witness)},
           {"per_relation", per_relation_to_json(report.per_relation)},
           {"stats", stats_to_json(report.stats)}};
    if (include_tables) o["tables"] = tables_to_json(report.tables, dict);
    return o;
}

json tree_to_json(const JoinTree& tree) {
    json nodes = json::array();
    for (const auto& node : tree.nodes()) {
        json atoms = json::array();
        for (const std::size_t idx : node.atoms) atoms.push_back(tree.atoms()[idx].relation);
        nodes.push_back(json{{"atoms", std::move(atoms)},
                             {"attrs", json(node.attrs)},
                             {"parent", node.parent},
                             {"shared_with_parent", node.shared_with_parent}});
    }
    return json{{"nodes", std::move(nodes)},
                {"roots", tree.roots()},
                {"max_atoms_per_node", tree.max_atoms_per_node()}};
}

json residual_to_json(const std::vector<Hyperedge>& residual) {
    json arr = json::array();
    for (const auto& edge : residual)
        arr.push_back(json{{"name", edge.name}, {"attrs", json(edge.attrs)}});
    return arr;
}

json database_to_json(const Database& db) {
    return json{{"relations", db.names()},
                {"total_tuples", db.total_tuples().to_string()},
                {"distinct_rows", db.total_distinct_rows()}};
}

void emit(const json& doc) { std::cout << doc.dump() << '\n'; }

void emit_error(const std::string& kind, const std::string& message) {
    emit(json{{"schema", 1}, {"error", json{{"kind", kind}, {"message", message}}}});
    std::cerr << "error (" << kind << "): " << message << '\n';
}

int exit_code_for(const std::string& kind) {
    if (kind == "config") return 1;
    if (kind == "overflow" || kind == "memory_budget") return 3;
    return 2;
}

// ---------------------------------------------------------------------------
// Input loading and decomposition selection

ConjunctiveQuery load_query(const std::string& path) {
    return parse_query(read_text_file(path));
}

Database load_data(const std::string& manifest_path) {
    const std::filesystem::path path(manifest_path);
    const Manifest manifest = parse_manifest(read_text_file(path), path.parent_path());
    return load_database(manifest);
}

/** The decomposition a command computes over: a user-supplied file wins,
 *  then GYO when the query is acyclic, then the trivial single-node tree
 *  (full join in one node) as the universal fallback. `tree` is empty in
 *  the GYO case — the engine entry points rebuild the one-atom-per-node
 *  tree themselves. */
struct ChosenDecomposition {
    std::string source;  // "ghd-file" | "gyo" | "single-node"
    std::optional<JoinTree> tree;
};

ChosenDecomposition choose_decomposition(const ConjunctiveQuery& query,
                                         const std::string& ghd_path) {
    if (!ghd_path.empty()) {
        const auto spec = parse_ghd(read_text_file(ghd_path));
        return {"ghd-file", validate_ghd(query, spec)};
    }
    if (gyo_decompose(query).acyclic) return {"gyo", std::nullopt};
    return {"single-node", single_node_ghd(query)};
}

// ---------------------------------------------------------------------------
// Query re-serialization (reduce-sat writes its query back out as DSL text)

std::string quote_literal(const std::string& value) {
    std::string out = "'";
    for (const char c : value) {
        out += c;
        if (c == '\'') out += c;
    }
    out += "'";
    return out;
}

std::string query_to_dsl(const ConjunctiveQuery& query) {
    std::string out = query.name + "(";
    const auto attrs = query.all_attrs();
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (i) out += ", ";
        out += attrs[i];
    }
    out += ") :-\n";
    for (std::size_t i = 0; i < query.atoms.size(); ++i) {
        const Atom& atom = query.atoms[i];
        out += "    " + atom.relation + "(";
        for (std::size_t j = 0; j < atom.attrs.size(); ++j) {
            if (j) out += ", ";
            out += atom.attrs[j];
        }
        out += ")";
        if (!atom.selections.empty()) {
            out += "[";
            for (std::size_t j = 0; j < atom.selections.size(); ++j) {
                const Selection& sel = atom.selections[j];
                if (j) out += ", ";
                out += sel.attr;
                out += sel.op == Selection::Op::Eq ? " = " : " != ";
                out += quote_literal(sel.literal);
            }
            out += "]";
        }
        out += i + 1 < query.atoms.size() ? ",\n" : " .\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared flag bundles

struct CommonOptions {
    bool pretty = false;
    bool timings = false;
};

struct DataQueryOptions {
    std::string data_path;
    std::string query_path;
    std::string ghd_path;
};

void add_data_query_flags(CLI::App* cmd, DataQueryOptions& opts, bool with_ghd = true) {
    cmd->add_option("--data", opts.data_path, "manifest JSON listing the relations' CSV files")
        ->required();
    cmd->add_option("--query", opts.query_path, "query file in the conjunctive-query DSL")
        ->required();
    if (with_ghd)
        cmd->add_option("--ghd", opts.ghd_path,
                        "decomposition file (JSON node list) overriding the automatic choice");
}

// ---------------------------------------------------------------------------
// Subcommands

int run_decompose(const CommonOptions& common, const std::string& query_path,
                  const std::string& ghd_path) {
    const ConjunctiveQuery query = load_query(query_path);
    const GyoResult gyo = gyo_decompose(query);

    json doc{{"schema", 1},
             {"command", "decompose"},
             {"config", json{{"query", query_path}, {"ghd", ghd_path.empty() ? json() : json(ghd_path)}}},
             {"query", query.name},
             {"acyclic", gyo.acyclic}};

    std::optional<JoinTree> tree;
    if (!ghd_path.empty()) {
        tree = validate_ghd(query, parse_ghd(read_text_file(ghd_path)));
        doc["decomposition"] = "ghd-file";
    } else if (gyo.acyclic) {
        tree = gyo.tree;
        doc["decomposition"] = "gyo";
        json steps = json::array();
        for (const auto& step : gyo.steps)
            steps.push_back(json{{"ear", step.ear}, {"witness", step.witness}});
        doc["steps"] = std::move(steps);
    }
    if (!gyo.acyclic) doc["residual"] = residual_to_json(gyo.residual);

    if (tree) {
        doc["tree"] = tree_to_json(*tree);
        const DoublyAcyclicResult doubly = is_doubly_acyclic(*tree);
        doc["doubly_acyclic"] =
            json{{"ok", doubly.ok}, {"witness", doubly.ok ? json() : json(doubly.witness)}};
    }

    if (common.pretty) {
        if (gyo.acyclic)
            std::cerr << "acyclic: yes (" << tree->nodes().size() << " node"
                      << (tree->nodes().size() == 1 ? "" : "s") << ", "
                      << (is_doubly_acyclic(*tree).ok ? "doubly acyclic" : "not doubly acyclic")
                      << ")\n";
        else {
            std::cerr << "acyclic: no; residual edges:";
            for (const auto& edge : gyo.residual) std::cerr << ' ' << edge.name;
            std::cerr << '\n';
        }
    }

    emit(doc);
    return 0;
}

int run_sensitivity(const CommonOptions& common, const DataQueryOptions& io_opts,
                    const std::string& mode, std::size_t k, bool no_tables) {
    PhaseTimer timer;
    timer.start();
    const ConjunctiveQuery query = load_query(io_opts.query_path);
    const Database db = load_data(io_opts.data_path);
    timer.stop("load");

    timer.start();
    const ChosenDecomposition chosen = choose_decomposition(query, io_opts.ghd_path);
    SensitivityReport report;
    if (mode == "topk") {
        report = chosen.tree ? topk_bound(db, query, k, *chosen.tree) : topk_bound(db, query, k);
    } else {
        report = chosen.tree ? ls_general(db, query, *chosen.tree) : ls_acyclic(db, query);
    }
    timer.stop("compute");

    json config{{"data", io_opts.data_path},
                {"query", io_opts.query_path},
                {"ghd", io_opts.ghd_path.empty() ? json() : json(io_opts.ghd_path)},
                {"mode", mode},
                {"k", mode == "topk" ? json(k) : json()},
                {"tables", !no_tables}};
    json doc{{"schema", 1},
             {"command", "sensitivity"},
             {"config", std::move(config)},
             {"query", query.name},
             {"data", database_to_json(db)},
             {"decomposition", chosen.source},
             {"report", report_to_json(report, db.dict(), !no_tables)}};
    if (common.timings) doc["timings"] = timer.to_json();

    if (common.pretty) {
        std::cerr << "ls = " << report.ls.to_string()
                  << "  join_size = " << report.join_size.to_string();
        if (report.witness) {
            std::cerr << "  witness = " << report.witness->relation << "(";
            for (std::size_t i = 0; i < report.witness->values.size(); ++i)
                std::cerr << (i ? ", " : "") << report.witness->values[i];
            std::cerr << ")";
        }
        std::cerr << '\n';
        for (const auto& best : report.per_relation)
            std::cerr << "  " << best.relation << ": tsens " << best.tsens.to_string() << '\n';
    }

    emit(doc);
    return 0;
}

int run_dp_answer(const CommonOptions& common, const DataQueryOptions& io_opts,
                  const DpConfig& config) {
    PhaseTimer timer;
    timer.start();
    const ConjunctiveQuery query = load_query(io_opts.query_path);
    const Database db = load_data(io_opts.data_path);
    timer.stop("load");

    timer.start();
    const ChosenDecomposition chosen = choose_decomposition(query, io_opts.ghd_path);
    const DpAnswer answer = tsens_dp(db, query, config, chosen.tree ? &*chosen.tree : nullptr);
    timer.stop("compute");

    json config_echo{{"data", io_opts.data_path},
                     {"query", io_opts.query_path},
                     {"ghd", io_opts.ghd_path.empty() ? json() : json(io_opts.ghd_path)},
                     {"epsilon", config.epsilon},
                     {"epsilon_tsens", config.epsilon_tsens},
                     {"threshold_split", config.threshold_split},
                     {"ell", config.ell},
                     {"primary_private", config.primary_private},
                     {"seed", config.seed},
                     {"test_mode", config.test_mode}};
    json doc{{"schema", 1},
             {"command", "dp-answer"},
             {"config", std::move(config_echo)},
             {"query", query.name},
             {"data", database_to_json(db)},
             {"decomposition", chosen.source},
             {"answer",
              json{{"value", answer.value},
                   {"tau", answer.tau},
                   {"raw_truncated", answer.raw_truncated.to_string()},
                   {"budget", json{{"epsilon_estimate", answer.budget.epsilon_estimate},
                                   {"epsilon_svt", answer.budget.epsilon_svt},
                                   {"epsilon_answer", answer.budget.epsilon_answer}}}}}};
    if (common.timings) doc["timings"] = timer.to_json();

    if (common.pretty)
        std::cerr << "value = " << answer.value << "  tau = " << answer.tau
                  << "  truncated count = " << answer.raw_truncated.to_string() << '\n';

    emit(doc);
    return 0;
}

int run_oracle(const CommonOptions& common, const DataQueryOptions& io_opts,
               std::uint64_t limit) {
    PhaseTimer timer;
    timer.start();
    const ConjunctiveQuery query = load_query(io_opts.query_path);
    const Database db = load_data(io_opts.data_path);
    timer.stop("load");

    timer.start();
    const BruteForceResult result = brute_force_ls(db, query, limit);
    timer.stop("compute");

    json doc{{"schema", 1},
             {"command", "oracle"},
             {"config", json{{"data", io_opts.data_path},
                             {"query", io_opts.query_path},
                             {"limit", limit}}},
             {"query", query.name},
             {"data", database_to_json(db)},
             {"report", json{{"ls", result.ls.to_string()},
                             {"join_size", result.join_size.to_string()},
                             {"witness", witness_to_json(result.witness)},
                             {"per_relation", per_relation_to_json(result.per_relation)}}}};
    if (common.timings) doc["timings"] = timer.to_json();

    if (common.pretty)
        std::cerr << "ls = " << result.ls.to_string()
                  << "  join_size = " << result.join_size.to_string() << '\n';

    emit(doc);
    return 0;
}

int run_reduce_sat(const CommonOptions& common, const std::string& cnf_path,
                   const std::string& out_dir, bool check) {
    const Cnf cnf = parse_dimacs(read_text_file(cnf_path));
    const SatReduction reduction = reduce_3sat(cnf);

    const std::filesystem::path dir(out_dir);
    export_database(reduction.db, dir);
    const std::filesystem::path query_file = dir / "query.cq";
    {
        std::ofstream out(query_file, std::ios::binary);
        if (!out) throw DataError("cannot write " + query_file.string());
        out << query_to_dsl(reduction.query);
    }

    json doc{{"schema", 1},
             {"command", "reduce-sat"},
             {"config", json{{"cnf", cnf_path}, {"out", out_dir}, {"check", check}}},
             {"num_vars", cnf.num_vars},
             {"num_clauses", cnf.clauses.size()},
             {"relations", reduction.db.names()},
             {"manifest", (dir / "manifest.json").string()},
             {"query_file", query_file.string()}};

    if (check) {
        const SensitivityReport report = ls_acyclic(reduction.db, reduction.query);
        doc["check"] = json{{"ls", report.ls.to_string()},
                            {"satisfiable", report.ls > Count(0)}};
    }

    if (common.pretty) {
        std::cerr << "wrote " << reduction.db.names().size() << " relations to " << out_dir
                  << '\n';
        if (check)
            std::cerr << (doc["check"]["satisfiable"].get<bool>() ? "satisfiable"
                                                                  : "unsatisfiable")
                      << " (ls = " << doc["check"]["ls"].get<std::string>() << ")\n";
    }

    emit(doc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"local sensitivity and private answering for counting join queries"};
    app.require_subcommand(1);

    CommonOptions common;
    app.add_flag("--pretty", common.pretty, "print a human summary to stderr");
    app.add_flag("--timings", common.timings,
                 "add wall-clock timings to the JSON (breaks byte-identical repeats)");

    auto* decompose_cmd =
        app.add_subcommand("decompose", "run the acyclicity test and report the join tree");
    std::string decompose_query;
    std::string decompose_ghd;
    decompose_cmd->add_option("--query", decompose_query, "query file")->required();
    decompose_cmd->add_option("--ghd", decompose_ghd, "decomposition file to validate instead");
    decompose_cmd->fallthrough();

    auto* sensitivity_cmd =
        app.add_subcommand("sensitivity", "compute local sensitivity and per-tuple tables");
    DataQueryOptions sensitivity_io;
    add_data_query_flags(sensitivity_cmd, sensitivity_io);
    std::string mode = "exact";
    sensitivity_cmd->add_option("--mode", mode, "exact or topk (upper bound)")
        ->check(CLI::IsMember({"exact", "topk"}));
    std::size_t k = 1;
    sensitivity_cmd->add_option("--k", k, "how many counts per pass table stay exact in topk mode");
    bool no_tables = false;
    sensitivity_cmd->add_flag("--no-tables", no_tables, "omit per-tuple tables from the JSON");
    sensitivity_cmd->fallthrough();

    auto* dp_cmd = app.add_subcommand("dp-answer",
                                      "answer the counting query with differential privacy");
    DataQueryOptions dp_io;
    add_data_query_flags(dp_cmd, dp_io);
    DpConfig dp_config;
    dp_cmd->add_option("--epsilon", dp_config.epsilon, "total privacy budget");
    dp_cmd->add_option("--epsilon-tsens", dp_config.epsilon_tsens,
                       "budget slice spent learning the truncation threshold");
    dp_cmd->add_option("--threshold-split", dp_config.threshold_split,
                       "fraction of the learning slice for the reference estimate");
    dp_cmd->add_option("--ell", dp_config.ell, "largest truncation threshold considered");
    dp_cmd->add_option("--primary-private", dp_config.primary_private,
                       "relation whose tuples are protected")
        ->required();
    dp_cmd->add_option("--seed", dp_config.seed, "random seed");
    dp_cmd->add_flag("--test-mode", dp_config.test_mode,
                     "zero noise and exact comparisons, for reproducible tests");
    dp_cmd->fallthrough();

    auto* oracle_cmd = app.add_subcommand(
        "oracle", "brute-force local sensitivity by recounting every candidate change");
    DataQueryOptions oracle_io;
    add_data_query_flags(oracle_cmd, oracle_io, /*with_ghd=*/false);
    std::uint64_t limit = 1'000'000;
    oracle_cmd->add_option("--limit", limit, "cap on insertion candidates per relation");
    oracle_cmd->fallthrough();

    auto* sat_cmd = app.add_subcommand(
        "reduce-sat", "turn a 3-CNF formula into a dataset whose sensitivity decides it");
    std::string cnf_path;
    std::string out_dir;
    bool check = false;
    sat_cmd->add_option("--cnf", cnf_path, "DIMACS CNF file")->required();
    sat_cmd->add_option("--out", out_dir, "directory for the CSVs, manifest, and query")
        ->required();
    sat_cmd->add_flag("--check", check, "also compute the sensitivity verdict");
    sat_cmd->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        emit_error("usage", e.what());
        return 1;
    }

    try {
        if (decompose_cmd->parsed()) return run_decompose(common, decompose_query, decompose_ghd);
        if (sensitivity_cmd->parsed()) return run_sensitivity(common, sensitivity_io, mode, k, no_tables);
        if (dp_cmd->parsed()) return run_dp_answer(common, dp_io, dp_config);
        if (oracle_cmd->parsed()) return run_oracle(common, oracle_io, limit);
        if (sat_cmd->parsed()) return run_reduce_sat(common, cnf_path, out_dir, check);
        emit_error("usage", "no subcommand given");
        return 1;
    } catch (const Error& e) {
        emit_error(e.kind(), e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 3;
    }
}
