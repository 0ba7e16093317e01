#include "tsens/oracle.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace tsens {

namespace {

/** One atom prepared for backtracking: its selection-surviving rows and,
 *  per column, the query-wide slot of the attribute it binds. All checks
 *  here run on resolved strings, independent of the engine's compiled-id
 *  filters. */
struct BoundAtom {
    const Atom* atom = nullptr;
    std::vector<std::pair<Row, Count>> rows;
    std::vector<std::size_t> slots;
};

bool row_passes(const Atom& atom, const Relation& rel, const Row& row, const ValueDict& dict) {
    for (const auto& sel : atom.selections) {
        std::size_t pos = 0;
        while (atom.attrs[pos] != sel.attr) ++pos;  // the parser guarantees presence
        if (!sel.matches(dict.resolve(row[pos]))) return false;
    }
    (void)rel;
    return true;
}

struct Backtracker {
    std::vector<BoundAtom> atoms;
    std::vector<ValueId> value_of;
    std::vector<bool> is_set;
    Count total = Count(0);

    void go(std::size_t i, Count acc) {
        if (i == atoms.size()) {
            total += acc;
            return;
        }
        const BoundAtom& ba = atoms[i];
        std::vector<std::size_t> bound_here;
        for (const auto& [row, cnt] : ba.rows) {
            bound_here.clear();
            bool ok = true;
            for (std::size_t j = 0; j < row.size(); ++j) {
                const std::size_t s = ba.slots[j];
                if (is_set[s]) {
                    if (value_of[s] != row[j]) {
                        ok = false;
                        break;
                    }
                } else {
                    is_set[s] = true;
                    value_of[s] = row[j];
                    bound_here.push_back(s);
                }
            }
            if (ok) go(i + 1, acc * cnt);
            for (std::size_t s : bound_here) is_set[s] = false;
        }
    }
};

Backtracker prepare(const Database& db, const ConjunctiveQuery& query) {
    Backtracker bt;
    std::map<std::string, std::size_t> slot_of;
    for (const auto& atom : query.atoms) {
        const Relation& rel = db.relation(atom.relation);
        if (rel.schema().size() != atom.attrs.size())
            throw QueryError("atom '" + atom.relation + "' has " +
                             std::to_string(atom.attrs.size()) +
                             " attributes but the relation has " +
                             std::to_string(rel.schema().size()) + " columns");
        BoundAtom ba;
        ba.atom = &atom;
        for (const auto& attr : atom.attrs)
            ba.slots.push_back(slot_of.emplace(attr, slot_of.size()).first->second);
        for (const auto& [row, cnt] : rel.rows())
            if (row_passes(atom, rel, row, db.dict())) ba.rows.emplace_back(row, cnt);
        bt.atoms.push_back(std::move(ba));
    }
    bt.value_of.assign(slot_of.size(), 0);
    bt.is_set.assign(slot_of.size(), false);
    return bt;
}

/** Selection-filtered active domain of one attribute of one atom, as
 *  resolved strings. */
std::set<std::string> filtered_actives(const Database& db, const Atom& atom,
                                       const std::string& attr) {
    const Relation& rel = db.relation(atom.relation);
    std::size_t pos = 0;
    while (atom.attrs[pos] != attr) ++pos;
    std::set<std::string> out;
    for (const auto& [row, cnt] : rel.rows())
        if (row_passes(atom, rel, row, db.dict())) out.insert(db.dict().resolve(row[pos]));
    return out;
}

std::vector<std::string> resolve_row(const ValueDict& dict, const Row& row) {
    std::vector<std::string> out;
    out.reserve(row.size());
    for (ValueId id : row) out.push_back(dict.resolve(id));
    return out;
}

}  // namespace

std::uint64_t RepresentativeDomain::size() const {
    std::uint64_t acc = 1;
    for (const auto& column : values) {
        if (column.empty()) return 0;
        const auto n = static_cast<std::uint64_t>(column.size());
        if (acc > std::numeric_limits<std::uint64_t>::max() / n)
            return std::numeric_limits<std::uint64_t>::max();
        acc *= n;
    }
    return acc;
}

RepresentativeDomain representative_domain(const Database& db, const ConjunctiveQuery& query,
                                           const std::string& relation) {
    const Atom& atom = query.atom_for(relation);
    RepresentativeDomain dom;
    dom.relation = relation;
    dom.attrs = atom.attrs;
    dom.values.resize(atom.attrs.size());

    for (std::size_t i = 0; i < atom.attrs.size(); ++i) {
        const std::string& attr = atom.attrs[i];
        std::vector<const Atom*> others;
        for (const auto& other : query.atoms)
            if (&other != &atom && other.has_attr(attr)) others.push_back(&other);

        if (!others.empty()) {
            // Shared attribute: only values alive in every other atom
            // holding it can extend to a join row.
            std::set<std::string> inter = filtered_actives(db, *others.front(), attr);
            for (std::size_t j = 1; j < others.size() && !inter.empty(); ++j) {
                std::set<std::string> next = filtered_actives(db, *others[j], attr);
                std::set<std::string> keep;
                std::set_intersection(inter.begin(), inter.end(), next.begin(), next.end(),
                                      std::inserter(keep, keep.begin()));
                inter = std::move(keep);
            }
            dom.values[i] = {inter.begin(), inter.end()};
            continue;
        }

        // The attribute appears nowhere else: its value never affects the
        // join, so one representative satisfying the atom's selections is
        // enough.
        std::optional<std::string> forced;
        std::set<std::string> excluded;
        for (const auto& sel : atom.selections) {
            if (sel.attr != attr) continue;
            if (sel.op == Selection::Op::Eq)
                forced = sel.literal;
            else
                excluded.insert(sel.literal);
        }
        if (forced && !excluded.count(*forced)) {
            dom.values[i] = {*forced};
            continue;
        }
        if (forced) {
            dom.values[i] = {};  // contradictory selections: nothing qualifies
            continue;
        }
        std::optional<std::string> pick;
        for (const auto& v : filtered_actives(db, atom, attr)) {
            pick = v;
            break;  // the set is sorted: the first survivor is smallest
        }
        if (!pick) {
            std::string fresh = "*";
            while (excluded.count(fresh)) fresh += '*';
            pick = fresh;
        }
        dom.values[i] = {*pick};
    }
    return dom;
}

Count naive_join_count(const Database& db, const ConjunctiveQuery& query) {
    Backtracker bt = prepare(db, query);
    bt.go(0, Count(1));
    return bt.total;
}

Count naive_delta_insert(const Database& db, const ConjunctiveQuery& query,
                         const std::string& relation, const std::vector<std::string>& values) {
    const Atom& atom = query.atom_for(relation);
    if (values.size() != atom.attrs.size())
        throw QueryError("tuple for '" + relation + "' has " + std::to_string(values.size()) +
                         " values, atom has " + std::to_string(atom.attrs.size()) +
                         " attributes");
    const Count base = naive_join_count(db, query);
    Database with = db;
    Row row;
    row.reserve(values.size());
    for (const auto& v : values) row.push_back(with.dict().intern(v));
    with.replace(with.relation(relation).with_one_added(row));
    return naive_join_count(with, query) - base;
}

Count naive_delta_remove(const Database& db, const ConjunctiveQuery& query,
                         const std::string& relation, const std::vector<std::string>& values) {
    Row row;
    row.reserve(values.size());
    for (const auto& v : values) {
        auto id = db.dict().find(v);
        if (!id)
            throw QueryError("relation '" + relation + "': cannot remove an absent tuple");
        row.push_back(*id);
    }
    const Count base = naive_join_count(db, query);
    Database without = db;
    without.replace(without.relation(relation).with_one_removed(row));
    return base - naive_join_count(without, query);
}

std::vector<OracleTuple> oracle_insertions(const Database& db, const ConjunctiveQuery& query,
                                           const std::string& relation, std::uint64_t limit) {
    RepresentativeDomain dom = representative_domain(db, query, relation);
    const std::uint64_t n = dom.size();
    if (n > limit)
        throw ConfigError("representative domain of '" + relation + "' has " +
                          std::to_string(n) + " candidates, limit " + std::to_string(limit));
    std::vector<OracleTuple> out;
    if (n == 0) return out;

    const Count base = naive_join_count(db, query);
    Database scratch = db;
    const Relation pristine = scratch.relation(relation);

    std::vector<std::size_t> odo(dom.attrs.size(), 0);
    while (true) {
        OracleTuple cand;
        for (std::size_t i = 0; i < odo.size(); ++i) cand.values.push_back(dom.values[i][odo[i]]);
        Row row;
        row.reserve(cand.values.size());
        for (const auto& v : cand.values) row.push_back(scratch.dict().intern(v));
        scratch.replace(pristine.with_one_added(row));
        cand.delta = naive_join_count(scratch, query) - base;
        out.push_back(std::move(cand));

        // Advance the odometer, last attribute fastest: candidates come out
        // in ascending value-tuple order because each column is sorted.
        std::size_t i = odo.size();
        while (i-- > 0) {
            if (++odo[i] < dom.values[i].size()) break;
            odo[i] = 0;
            if (i == 0) return out;
        }
    }
}

BruteForceResult brute_force_ls(const Database& db, const ConjunctiveQuery& query,
                                std::uint64_t limit) {
    BruteForceResult result;
    result.join_size = naive_join_count(db, query);

    for (const auto& atom : query.atoms) {
        const Relation& rel = db.relation(atom.relation);

        Count best_delta(0);
        std::optional<std::vector<std::string>> best_values;
        auto offer = [&](const std::vector<std::string>& values, Count delta) {
            if (delta.is_zero()) return;
            if (delta > best_delta || (delta == best_delta && best_values && values < *best_values)) {
                best_delta = delta;
                best_values = values;
            }
        };

        Database without = db;
        for (const auto& [row, cnt] : rel.rows()) {
            without.replace(rel.with_one_removed(row));
            const Count delta = result.join_size - naive_join_count(without, query);
            offer(resolve_row(db.dict(), row), delta);
        }
        without.replace(rel);

        for (const auto& cand : oracle_insertions(db, query, atom.relation, limit))
            offer(cand.values, cand.delta);

        result.per_relation.push_back({atom.relation, best_values, best_delta});
    }

    for (const auto& entry : result.per_relation) {
        if (!entry.values) continue;
        const bool better =
            entry.tsens > result.ls ||
            (entry.tsens == result.ls && result.witness && entry.relation < result.witness->relation);
        if (better) {
            result.ls = entry.tsens;
            result.witness = WitnessInfo{entry.relation, *entry.values, entry.tsens};
        }
    }
    return result;
}

Cnf parse_dimacs(const std::string& text) {
    Cnf cnf;
    std::istringstream in(text);
    std::string line;
    std::size_t declared_clauses = 0;
    bool have_header = false;
    std::vector<int> pending;
    std::vector<std::vector<int>> raw_clauses;

    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;  // blank line
        if (first == "c") continue;
        if (first[0] == 'c') continue;  // 'c' glued to the comment text
        if (first == "p") {
            if (have_header) throw DataError("duplicate 'p' header line");
            std::string kind;
            long long vars = 0, clauses = 0;
            if (!(ls >> kind >> vars >> clauses) || kind != "cnf")
                throw DataError("malformed header; expected 'p cnf VARS CLAUSES'");
            if (vars < 1) throw DataError("formula declares no variables");
            if (clauses < 0) throw DataError("negative clause count");
            cnf.num_vars = static_cast<std::size_t>(vars);
            declared_clauses = static_cast<std::size_t>(clauses);
            have_header = true;
            continue;
        }
        if (!have_header) throw DataError("literals before the 'p cnf' header");
        std::istringstream body(line);
        int lit = 0;
        while (body >> lit) {
            if (lit == 0) {
                raw_clauses.push_back(pending);
                pending.clear();
            } else {
                if (static_cast<std::size_t>(std::abs(lit)) > cnf.num_vars)
                    throw DataError("literal " + std::to_string(lit) +
                                    " out of range for " + std::to_string(cnf.num_vars) +
                                    " variables");
                pending.push_back(lit);
            }
        }
        if (!body.eof()) throw DataError("invalid literal token in clause line");
    }
    if (!have_header) throw DataError("missing 'p cnf' header");
    if (!pending.empty()) throw DataError("unterminated clause (missing trailing 0)");
    if (raw_clauses.size() != declared_clauses)
        throw DataError("header declares " + std::to_string(declared_clauses) +
                        " clauses but " + std::to_string(raw_clauses.size()) + " found");

    for (const auto& raw : raw_clauses) {
        if (raw.empty()) throw DataError("empty clause");
        if (raw.size() > 3)
            throw DataError("clause has " + std::to_string(raw.size()) +
                            " literals; at most 3 are supported");
        std::array<int, 3> clause{};
        for (std::size_t i = 0; i < 3; ++i) clause[i] = raw[std::min(i, raw.size() - 1)];
        cnf.clauses.push_back(clause);
    }
    return cnf;
}

SatReduction reduce_3sat(const Cnf& cnf) {
    SatReduction out;
    std::vector<std::string> all_vars;
    for (std::size_t v = 1; v <= cnf.num_vars; ++v) all_vars.push_back("A" + std::to_string(v));

    out.db.add(Relation("R0", all_vars));  // stays empty: the join is 0 until
                                           // a satisfying assignment arrives
    out.query.name = "sat";
    Atom root;
    root.relation = "R0";
    root.attrs = all_vars;
    out.query.atoms.push_back(std::move(root));

    for (std::size_t c = 0; c < cnf.clauses.size(); ++c) {
        const auto& clause = cnf.clauses[c];
        std::set<int> distinct;
        for (int lit : clause) distinct.insert(std::abs(lit));
        std::vector<int> vars(distinct.begin(), distinct.end());
        std::vector<std::string> attrs;
        for (int v : vars) attrs.push_back("A" + std::to_string(v));

        std::vector<std::pair<std::vector<std::string>, Count>> rows;
        for (std::size_t mask = 0; mask < (std::size_t{1} << vars.size()); ++mask) {
            auto value_of = [&](int var) {
                std::size_t pos = 0;
                while (vars[pos] != var) ++pos;
                return (mask >> pos) & 1u;
            };
            bool satisfied = false;
            for (int lit : clause)
                if ((lit > 0 && value_of(lit) == 1) || (lit < 0 && value_of(-lit) == 0)) {
                    satisfied = true;
                    break;
                }
            if (!satisfied) continue;
            std::vector<std::string> values;
            for (std::size_t i = 0; i < vars.size(); ++i)
                values.push_back(((mask >> i) & 1u) ? "1" : "0");
            rows.emplace_back(std::move(values), Count(1));
        }
        const std::string name = "R" + std::to_string(c + 1);
        out.db.add_from_strings(name, attrs, rows);

        Atom a;
        a.relation = name;
        a.attrs = attrs;
        out.query.atoms.push_back(std::move(a));
    }
    return out;
}

bool exhaustive_sat(const Cnf& cnf) {
    if (cnf.num_vars > 20)
        throw ConfigError("exhaustive satisfiability check limited to 20 variables, got " +
                          std::to_string(cnf.num_vars));
    const std::size_t limit = std::size_t{1} << cnf.num_vars;
    for (std::size_t mask = 0; mask < limit; ++mask) {
        bool all = true;
        for (const auto& clause : cnf.clauses) {
            bool sat = false;
            for (int lit : clause) {
                const std::size_t bit = (mask >> (std::abs(lit) - 1)) & 1u;
                if ((lit > 0 && bit == 1) || (lit < 0 && bit == 0)) {
                    sat = true;
                    break;
                }
            }
            if (!sat) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

}  // namespace tsens
