#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsens/query.hpp"
#include "tsens/relation.hpp"
#include "tsens/sensitivity.hpp"

namespace tsens {

/** Candidate values per attribute for inserting one tuple into `relation`:
 *  for attributes shared with other atoms, the intersection of those
 *  atoms' selection-filtered active domains (any other value joins
 *  nothing); for attributes appearing nowhere else, one representative —
 *  a forced equality literal, else the smallest own active value, else a
 *  fresh placeholder. Enumerating the cross product covers every tuple
 *  whose insertion could change the answer. */
struct RepresentativeDomain {
    std::string relation;
    std::vector<std::string> attrs;                 // atom attribute order
    std::vector<std::vector<std::string>> values;   // per attribute, sorted

    /** Cross-product cardinality, saturating at 2^64 - 1. */
    std::uint64_t size() const;
};

RepresentativeDomain representative_domain(const Database& db, const ConjunctiveQuery& query,
                                           const std::string& relation);

/** |Q(D)| by plain backtracking over the atoms — no join machinery shared
 *  with the engine, so the two can check each other. */
Count naive_join_count(const Database& db, const ConjunctiveQuery& query);

/** Answer change from adding one copy of the tuple (values in atom
 *  attribute order; unseen strings are fine). */
Count naive_delta_insert(const Database& db, const ConjunctiveQuery& query,
                         const std::string& relation, const std::vector<std::string>& values);

/** Answer change from removing one copy of an existing tuple. */
Count naive_delta_remove(const Database& db, const ConjunctiveQuery& query,
                         const std::string& relation, const std::vector<std::string>& values);

/** One insertion candidate and its exact answer change. */
struct OracleTuple {
    std::vector<std::string> values;
    Count delta;
};

/** Every representative-domain insertion into `relation` with its exact
 *  delta, in ascending value-tuple order. Throws ConfigError when the
 *  domain exceeds `limit` candidates. */
std::vector<OracleTuple> oracle_insertions(const Database& db, const ConjunctiveQuery& query,
                                           const std::string& relation, std::uint64_t limit);

struct BruteForceResult {
    Count ls = Count(0);
    std::optional<WitnessInfo> witness;
    std::vector<PerRelationBest> per_relation;  // atom order
    Count join_size = Count(0);
};

/** Ground-truth local sensitivity: tries removing one copy of every
 *  existing distinct row and inserting every representative-domain tuple,
 *  recounting the query each time. Exponential-ish and deliberately
 *  simple; `limit` bounds the per-relation insertion candidates. */
BruteForceResult brute_force_ls(const Database& db, const ConjunctiveQuery& query,
                                std::uint64_t limit = 1'000'000);

/** A 3-CNF formula; clauses hold exactly three literals (shorter input
 *  clauses are padded by repeating a literal). Literal v > 0 means
 *  variable v, literal -v its negation; variables are 1-based. */
struct Cnf {
    std::size_t num_vars = 0;
    std::vector<std::array<int, 3>> clauses;
};

/** DIMACS-style parser: optional 'c' comment lines, a 'p cnf VARS CLAUSES'
 *  header, then whitespace-separated literals with each clause terminated
 *  by 0. Clauses of more than three literals are rejected. */
Cnf parse_dimacs(const std::string& text);

/** The satisfiability-to-sensitivity reduction: one relation per clause
 *  holding its satisfying assignments over values "0"/"1", plus an empty
 *  relation R0 over all variables, joined by one acyclic query. The
 *  query's local sensitivity is 1 when the formula is satisfiable
 *  (inserting a satisfying assignment into R0 creates one join row) and
 *  0 otherwise. */
struct SatReduction {
    Database db;
    ConjunctiveQuery query;
};

SatReduction reduce_3sat(const Cnf& cnf);

/** Truth-table satisfiability check; refuses more than 20 variables. */
bool exhaustive_sat(const Cnf& cnf);

}  // namespace tsens
