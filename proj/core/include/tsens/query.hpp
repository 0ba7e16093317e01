#pragma once

#include <string>
#include <vector>

#include "tsens/errors.hpp"

namespace tsens {

/** A selection predicate attached to an atom: attr = 'lit' or attr != 'lit'. */
struct Selection {
    enum class Op { Eq, Ne };
    std::string attr;
    Op op = Op::Eq;
    std::string literal;

    bool matches(const std::string& value) const {
        return op == Op::Eq ? value == literal : value != literal;
    }
};

/** One body atom: a relation with its (distinct) attribute names and any
 *  selection predicates. Attribute names bind the relation's columns
 *  positionally and define the join structure by name sharing. */
struct Atom {
    std::string relation;
    std::vector<std::string> attrs;
    std::vector<Selection> selections;

    bool has_attr(const std::string& attr) const {
        for (const auto& a : attrs)
            if (a == attr) return true;
        return false;
    }
};

/** A full conjunctive counting query (no self-joins, no projection: the
 *  head is implicitly the union of all body attributes). */
struct ConjunctiveQuery {
    std::string name;
    std::vector<Atom> atoms;

    const Atom& atom_for(const std::string& relation) const;
    bool uses(const std::string& relation) const;

    /** All attribute names across atoms, sorted. */
    std::vector<std::string> all_attrs() const;
};

/** Parses the query DSL:
 *
 *      Name(attrs) :- Rel(A,B)[A = 'lit', B != 'lit'], Rel2(B,C) .
 *
 *  `#` starts a comment running to end of line. The head attribute list is
 *  accepted but carries no meaning (full queries answer over all body
 *  attributes). Throws ParseError with line/column on syntax errors,
 *  SelfJoinUnsupported when a relation appears twice.
 */
ConjunctiveQuery parse_query(const std::string& text);

}  // namespace tsens
