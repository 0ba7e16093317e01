#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tsens/query.hpp"

namespace tsens {

/** A named hyperedge: one atom's attribute set. */
struct Hyperedge {
    std::string name;
    std::set<std::string> attrs;
};

/** One ear-removal step of a GYO elimination; the surviving edge is
 *  reported as the outcome's `root`, not as a step. */
struct GyoStep {
    std::string ear;
    std::string witness;
};

/** Outcome of running GYO elimination over a set of hyperedges. When the
 *  input is cyclic, `residual` holds the irreducible edges that remain —
 *  a checkable proof of cyclicity. */
struct GyoOutcome {
    bool acyclic = false;
    std::vector<GyoStep> steps;
    std::string root;               // last surviving edge (acyclic only)
    std::vector<Hyperedge> residual;  // non-empty iff cyclic
};

/** GYO elimination with deterministic tie-breaking: among eligible ears
 *  pick the lexicographically smallest name, and among its valid witnesses
 *  again the smallest name. Edges sharing no attribute with the rest are
 *  ears too (their vertices are all exclusive), so disconnected inputs
 *  reduce fully; callers that need per-component structure should split
 *  components first. */
GyoOutcome gyo_eliminate(std::vector<Hyperedge> edges);

/** One node of a join tree / decomposition tree. `atoms` are indices into
 *  the query's atom list; `attrs` is the union of those atoms' attributes. */
struct JoinTreeNode {
    std::vector<std::size_t> atoms;
    std::set<std::string> attrs;
    int parent = -1;  // -1 marks a root
    std::vector<int> children;
    std::vector<std::string> shared_with_parent;  // sorted; empty for roots
};

/** A rooted forest over the query's atoms satisfying the running
 *  intersection property (each attribute's nodes form a connected
 *  subtree). Single trees are the common case; a forest arises for
 *  disconnected queries. Construction validates everything and throws
 *  GhdError on violations. */
class JoinTree {
public:
    /** `node_atoms[v]` lists the atom indices grouped into node v and
     *  `parents[v]` is v's parent node index or -1 for roots. Validates:
     *  every atom appears in exactly one node, no empty node, parent
     *  links form a forest, and the running intersection property holds. */
    JoinTree(const ConjunctiveQuery& query, std::vector<std::vector<std::size_t>> node_atoms,
             std::vector<int> parents);

    const std::vector<JoinTreeNode>& nodes() const { return nodes_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<int>& roots() const { return roots_; }

    /** Width measured in atoms per node (1 for plain join trees). */
    std::size_t max_atoms_per_node() const;

    /** Node indices with every child before its parent, across all roots. */
    std::vector<int> post_order() const;
    /** Node indices with every parent before its children, across all roots. */
    std::vector<int> pre_order() const;

private:
    std::vector<JoinTreeNode> nodes_;
    std::vector<Atom> atoms_;  // copy of the query's atoms, by index
    std::vector<int> roots_;
};

/** Result of GYO decomposition of a query: on success a join tree forest
 *  with one atom per node (one tree per connected component), otherwise
 *  the residual hyperedges proving cyclicity. */
struct GyoResult {
    bool acyclic = false;
    std::optional<JoinTree> tree;
    std::vector<Hyperedge> residual;
    std::vector<GyoStep> steps;
};

/** Splits the query's atoms into connected components of the
 *  attribute-sharing graph and runs GYO per component. */
GyoResult gyo_decompose(const ConjunctiveQuery& query);

/** Checks the stronger acyclicity notion needed for worst-case-optimal
 *  sensitivity bounds: around every node, the projections of its parent
 *  and child edges onto shared attributes must themselves form an acyclic
 *  hypergraph. `witness` names the first violating node's relation. */
struct DoublyAcyclicResult {
    bool ok = true;
    std::string witness;
};
DoublyAcyclicResult is_doubly_acyclic(const JoinTree& tree);

/** One node of a user-supplied decomposition file: atom relation names
 *  plus a parent node index (absent for roots). */
struct GhdNodeSpec {
    std::vector<std::string> atoms;
    std::optional<int> parent;
};

/** Validates a user-supplied decomposition against the query and builds
 *  the tree. Throws GhdError when an atom is missing or duplicated, a
 *  parent index is out of range or cyclic, or the running intersection
 *  property fails. */
JoinTree validate_ghd(const ConjunctiveQuery& query, const std::vector<GhdNodeSpec>& spec);

/** The trivial decomposition: all atoms in one node. Always valid, at the
 *  cost of materializing the full join of every atom in the node. */
JoinTree single_node_ghd(const ConjunctiveQuery& query);

/** Connected components of the attribute-sharing graph over atoms; each
 *  component lists atom indices in ascending order. Components are ordered
 *  by their smallest atom index. */
std::vector<std::vector<std::size_t>> connected_components(const ConjunctiveQuery& query);

/** True when the atoms form a chain R_1 - R_2 - ... - R_m in which only
 *  consecutive atoms share attributes. Returns the atom indices in chain
 *  order (oriented from the lexicographically smaller endpoint name), or
 *  nothing if the query is not such a chain. */
std::optional<std::vector<std::size_t>> chain_order(const ConjunctiveQuery& query);

}  // namespace tsens
