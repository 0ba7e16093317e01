#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsens/count.hpp"
#include "tsens/value_dict.hpp"

namespace tsens {

/** A tuple of interned value ids; arity always matches the owning schema. */
using Row = std::vector<ValueId>;

/** One input tuple for Relation::canonicalize. */
struct RawRow {
    Row values;
    Count cnt = 1;
};

/** Effective cap on intermediate relation sizes, in rows.
 *  Defaults to 50,000,000; the TSENS_MEM_ROWS environment variable
 *  overrides it (read once per process). */
std::size_t memory_budget_rows();

/** Scoped override of the row budget, for tests that exercise the
 *  budget-exceeded path without allocating 50M rows. */
class ScopedMemoryBudget {
public:
    explicit ScopedMemoryBudget(std::size_t rows);
    ~ScopedMemoryBudget();
    ScopedMemoryBudget(const ScopedMemoryBudget&) = delete;
    ScopedMemoryBudget& operator=(const ScopedMemoryBudget&) = delete;

private:
    std::size_t previous_;
};

/** Bag-semantics relation: a named, schema'd map from distinct value-id
 *  tuples to their multiplicity (cnt >= 1, 128-bit, checked).
 *
 *  Rows are kept in a sorted map keyed on the id tuple, so iteration order
 *  is canonical (lexicographic on value ids) and all derived outputs are
 *  byte-stable for a given load sequence. Instances are immutable after
 *  construction; all operations below are pure.
 */
class Relation {
public:
    /** Empty relation over the given schema. Schema names must be distinct. */
    Relation(std::string name, std::vector<std::string> schema);

    /** Builds a canonical relation: checks arity and cnt >= 1, merges
     *  duplicate tuples by summing their counts (checked). */
    static Relation canonicalize(std::string name, std::vector<std::string> schema,
                                 const std::vector<RawRow>& raw_rows);

    const std::string& name() const noexcept { return name_; }
    const std::vector<std::string>& schema() const noexcept { return schema_; }
    const std::map<Row, Count>& rows() const noexcept { return rows_; }

    std::size_t distinct_rows() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }

    /** Total multiplicity (the relation's contribution to n). */
    Count total() const;

    /** Index of `attr` in the schema, if present. */
    std::optional<std::size_t> attr_index(const std::string& attr) const;

    /** Copy of this relation under a different name/schema (same arity);
     *  used to bind relation columns to query variables positionally. */
    Relation renamed(std::string name, std::vector<std::string> schema) const;

    /** Copy with a single row's count decremented by one; the row must
     *  exist. A row reaching zero is dropped. */
    Relation with_one_removed(const Row& row) const;

    /** Copy with one copy of `row` added (checked). */
    Relation with_one_added(const Row& row) const;

    /** Copy without any trace of `row`. */
    Relation without_row(const Row& row) const;

private:
    friend Relation cnt_join(const Relation&, const Relation&);
    friend Relation groupby_sum(const Relation&, const std::vector<std::string>&);

    std::string name_;
    std::vector<std::string> schema_;
    std::map<Row, Count> rows_;
};

/** Count-propagating natural join (the ⨝̃ operator).
 *
 *  Joins on the attributes common to both schemas; the output schema is the
 *  left schema followed by the right-only attributes (first-occurrence
 *  order), and each output count is the product of the matched counts
 *  (checked). With no shared attributes this is the cross product.
 */
Relation cnt_join(const Relation& left, const Relation& right);

/** Count-summing group-by (the γ̃ operator).
 *
 *  Projects to `attrs` (which must be a subset of the schema, in the given
 *  order) and sums the counts of collapsed rows (checked). Grouping by the
 *  empty list yields a single empty-keyed row holding the total
 *  multiplicity — the counting-query answer when applied to a full join.
 */
Relation groupby_sum(const Relation& rel, const std::vector<std::string>& attrs);

/** A set of uniquely named relations sharing one value dictionary.
 *  Schemas of distinct relations may share attribute names — that is
 *  what makes them join. */
class Database {
public:
    ValueDict& dict() noexcept { return dict_; }
    const ValueDict& dict() const noexcept { return dict_; }

    /** Adds a relation; the name must be free. */
    void add(Relation relation);

    /** Replaces an existing relation of the same name. */
    void replace(Relation relation);

    bool has(const std::string& name) const { return relations_.count(name) > 0; }

    const Relation& relation(const std::string& name) const;

    /** Relation names in sorted order. */
    std::vector<std::string> names() const;

    const std::map<std::string, Relation>& relations() const noexcept {
        return relations_;
    }

    /** Sum of all multiplicities (n under bag semantics). */
    Count total_tuples() const;

    /** Sum of distinct row counts (reported separately from n). */
    std::size_t total_distinct_rows() const;

    /** Convenience for tests/fixtures: canonicalizes `rows` of string
     *  values (cnt via repeated entries or explicit counts) into a
     *  relation interned against this database's dictionary. */
    void add_from_strings(const std::string& name,
                          const std::vector<std::string>& schema,
                          const std::vector<std::pair<std::vector<std::string>, Count>>& rows);

private:
    ValueDict dict_;
    std::map<std::string, Relation> relations_;
};

}  // namespace tsens
