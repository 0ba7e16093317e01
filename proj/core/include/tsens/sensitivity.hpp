#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsens/hypergraph.hpp"
#include "tsens/query.hpp"
#include "tsens/relation.hpp"

namespace tsens {

/** Per-tuple sensitivities of one atom's relation, keyed on the attributes
 *  whose values are pinned elsewhere in the query (`key_attrs`, sorted).
 *  A tuple's sensitivity is the table count at its key projection, or 0
 *  when the key is absent or the tuple fails the atom's selections.
 *  `free_attrs` lists the atom attributes appearing nowhere else in the
 *  query: their values never influence the join, so they are not part of
 *  the key. */
struct MultiplicityTable {
    std::string relation;
    std::vector<std::string> key_attrs;
    std::vector<std::string> free_attrs;
    Relation table;
};

/** A concrete maximizing tuple: values as strings, in the atom's attribute
 *  order. Changing this tuple's multiplicity by one changes the query
 *  answer by exactly `tsens` — the local sensitivity when it is the
 *  global maximum. */
struct WitnessInfo {
    std::string relation;
    std::vector<std::string> values;
    Count tsens;
};

/** Best achievable single-tuple change per atom. `values` is absent when
 *  no tuple of the relation can affect the answer (sensitivity 0). */
struct PerRelationBest {
    std::string relation;
    std::optional<std::vector<std::string>> values;
    Count tsens = Count(0);
};

struct SensitivityStats {
    /** Largest intermediate table built, in distinct rows. */
    std::size_t intermediate_rows_peak = 0;
    /** Sum of distinct rows over all intermediate tables built. */
    std::size_t intermediate_rows_total = 0;
    /** Largest up/down pass table, in distinct rows; top-k truncation is
     *  exact whenever k is at least this value. */
    std::size_t pass_table_max_rows = 0;
    /** Decomposition width in atoms per node (1 for plain join trees). */
    std::size_t max_atoms_per_node = 1;
};

struct SensitivityReport {
    Count ls = Count(0);
    std::optional<WitnessInfo> witness;
    std::vector<PerRelationBest> per_relation;  // in atom order
    Count join_size = Count(0);
    std::vector<MultiplicityTable> tables;  // in atom order
    SensitivityStats stats;
};

/** Binds each queried relation's columns to its atom's attribute names
 *  (positionally; arity must match) and drops rows failing the atom's
 *  selections. Relations not mentioned by the query pass through. */
Database apply_selections(const Database& db, const ConjunctiveQuery& query);

/** Up/down multiplicity passes over a join tree. Both tables of a node are
 *  keyed on its (sorted) shared attributes with the parent; a root's
 *  botjoin is instead keyed on all node attributes, so its total is the
 *  component's join size. Roots have no topjoin. */
struct PassTables {
    std::map<int, Relation> botjoin;
    std::map<int, Relation> topjoin;
    SensitivityStats stats;
};

/** Leaf-to-root pass: botjoin(v) aggregates the join of v's subtree down
 *  to the attributes shared with v's parent. Expects `bound` to be the
 *  output of apply_selections for the tree's query. */
PassTables compute_botjoins(const Database& bound, const JoinTree& tree);

/** Root-to-leaf pass completing `passes`: topjoin(v) aggregates the rest
 *  of the tree (everything outside v's subtree) onto the same key. */
void compute_topjoins(const Database& bound, const JoinTree& tree, PassTables& passes);

/** Combines both passes into one multiplicity table per atom (atom order).
 *  For forests, each component's tables are scaled by the product of the
 *  other components' join sizes. Entries failing the atom's selections are
 *  dropped, as inserting such a tuple can never change the answer. */
std::vector<MultiplicityTable> compute_multiplicity_tables(const Database& bound,
                                                           const JoinTree& tree,
                                                           const PassTables& passes);

/** Local sensitivity of a chain query via the two sweep tables, without
 *  building a join tree. Requires the atoms to form a chain in which only
 *  consecutive atoms share attributes; throws NotAPathQuery otherwise.
 *  Produces the same report as ls_acyclic. */
SensitivityReport ls_path(const Database& db, const ConjunctiveQuery& query);

/** Local sensitivity of an acyclic (alpha-acyclic, possibly disconnected)
 *  query via GYO decomposition and the two tree passes. Throws CyclicQuery
 *  when GYO leaves a residual. */
SensitivityReport ls_acyclic(const Database& db, const ConjunctiveQuery& query);

/** Local sensitivity over an explicit decomposition tree (for cyclic
 *  queries, or any tree built by validate_ghd / single_node_ghd). Each
 *  node materializes the join of its atoms; passes run over the node
 *  tree and each atom's table is computed within its node's context. */
SensitivityReport ls_general(const Database& db, const ConjunctiveQuery& query,
                             const JoinTree& tree);

/** Upper bound on local sensitivity keeping only the k largest counts of
 *  every pass table exact: all other counts are rounded up to the k-th
 *  largest, so every reported sensitivity dominates the true one. Equal to
 *  the exact report whenever k >= stats.pass_table_max_rows. */
SensitivityReport topk_bound(const Database& db, const ConjunctiveQuery& query, std::size_t k);

/** Same bound over an explicit decomposition tree instead of GYO. */
SensitivityReport topk_bound(const Database& db, const ConjunctiveQuery& query, std::size_t k,
                             const JoinTree& tree);

/** Sensitivity of one concrete tuple (values as strings, atom attribute
 *  order) under previously computed tables: 0 if it fails the atom's
 *  selections or its key is absent, the stored count otherwise. */
Count tuple_sensitivity(const Database& db, const ConjunctiveQuery& query,
                        const std::vector<MultiplicityTable>& tables,
                        const std::string& relation, const std::vector<std::string>& values);

/** The counting-query answer |Q(D)| via the same decomposition machinery
 *  (GYO when `tree` is null, the given tree otherwise). */
Count count_query(const Database& db, const ConjunctiveQuery& query,
                  const JoinTree* tree = nullptr);

}  // namespace tsens
