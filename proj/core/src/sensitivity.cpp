#include "tsens/sensitivity.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>

namespace tsens {

namespace {

Relation unit_relation() {
    return Relation::canonicalize("unit", {}, {RawRow{{}, Count(1)}});
}

std::vector<std::string> sorted_attrs(const std::set<std::string>& s) {
    return {s.begin(), s.end()};
}

struct StatsTracker {
    SensitivityStats& stats;
    const Relation& note(const Relation& r) {
        note_rows(r.distinct_rows());
        return r;
    }
    void note_pass(const Relation& r) {
        note(r);
        stats.pass_table_max_rows = std::max(stats.pass_table_max_rows, r.distinct_rows());
    }
    // Raw-count variants for passes that stream rows instead of
    // materializing a Relation; they feed the same counters.
    void note_rows(std::size_t distinct) {
        stats.intermediate_rows_total += distinct;
        stats.intermediate_rows_peak = std::max(stats.intermediate_rows_peak, distinct);
    }
    void note_pass_rows(std::size_t distinct) {
        note_rows(distinct);
        stats.pass_table_max_rows = std::max(stats.pass_table_max_rows, distinct);
    }
};

/** True unless the atom's selections contradict each other (two different
 *  equality literals, or an equality whose literal is also excluded), in
 *  which case no tuple can ever satisfy the atom. */
bool atom_satisfiable(const Atom& atom) {
    std::map<std::string, std::set<std::string>> eqs, nes;
    for (const auto& sel : atom.selections)
        (sel.op == Selection::Op::Eq ? eqs : nes)[sel.attr].insert(sel.literal);
    for (const auto& [attr, literals] : eqs) {
        if (literals.size() > 1) return false;
        auto ne = nes.find(attr);
        if (ne != nes.end() && ne->second.count(*literals.begin())) return false;
    }
    return true;
}

/** Drops rows failing any selection whose attribute is in the relation's
 *  schema (selections on other attributes do not constrain a projection).
 *  Comparisons run on interned ids: an equality literal absent from the
 *  dictionary empties the relation, an absent inequality literal excludes
 *  nothing. */
Relation filter_rows(Relation rel, const std::vector<Selection>& selections,
                     const ValueDict& dict) {
    struct Compiled {
        std::size_t idx;
        bool eq;
        std::optional<ValueId> literal;
    };
    std::vector<Compiled> compiled;
    for (const auto& sel : selections) {
        auto idx = rel.attr_index(sel.attr);
        if (!idx) continue;
        auto literal = dict.find(sel.literal);
        if (sel.op == Selection::Op::Eq && !literal)
            return Relation(rel.name(), rel.schema());  // nothing can match
        compiled.push_back({*idx, sel.op == Selection::Op::Eq, literal});
    }
    if (compiled.empty()) return rel;  // moved through untouched

    std::vector<RawRow> kept;
    for (const auto& [row, cnt] : rel.rows()) {
        bool pass = true;
        for (const auto& c : compiled) {
            const bool equal = c.literal && row[c.idx] == *c.literal;
            if (equal != c.eq) {
                pass = false;
                break;
            }
        }
        if (pass) kept.push_back({row, cnt});
    }
    return Relation::canonicalize(rel.name(), rel.schema(), kept);
}

/** The join of one node's atoms (name order); a single-atom node is just
 *  its bound relation. */
Relation materialize_node(const Database& bound, const JoinTree& tree, int v, StatsTracker& st) {
    const auto& node = tree.nodes()[static_cast<std::size_t>(v)];
    std::vector<std::string> names;
    for (std::size_t idx : node.atoms) names.push_back(tree.atoms()[idx].relation);
    std::sort(names.begin(), names.end());
    Relation rel = bound.relation(names.front());
    for (std::size_t i = 1; i < names.size(); ++i) {
        rel = cnt_join(rel, bound.relation(names[i]));
        st.note(rel);
    }
    return rel;
}

Relation truncate_counts(Relation table, std::size_t k) {
    if (table.distinct_rows() <= k) return table;
    std::vector<Count> counts;
    counts.reserve(table.distinct_rows());
    for (const auto& [row, cnt] : table.rows()) counts.push_back(cnt);
    std::nth_element(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     counts.end(), [](Count a, Count b) { return a > b; });
    const Count floor = counts[k - 1];
    std::vector<RawRow> raws;
    raws.reserve(table.distinct_rows());
    for (const auto& [row, cnt] : table.rows()) raws.push_back({row, std::max(cnt, floor)});
    return Relation::canonicalize(table.name(), table.schema(), raws);
}

PassTables do_botjoins(const Database& bound, const JoinTree& tree, std::optional<std::size_t> k) {
    PassTables passes;
    StatsTracker st{passes.stats};
    for (int v : tree.post_order()) {
        const auto& node = tree.nodes()[static_cast<std::size_t>(v)];
        Relation rel = materialize_node(bound, tree, v, st);
        for (int c : node.children) {
            rel = cnt_join(rel, passes.botjoin.at(c));
            st.note(rel);
        }
        const std::vector<std::string> key =
            node.parent >= 0 ? node.shared_with_parent : sorted_attrs(node.attrs);
        Relation table = groupby_sum(rel, key);
        // The root's botjoin feeds only the component's join size, which
        // truncation must not touch; every other table is a bound input.
        if (k && node.parent >= 0) table = truncate_counts(std::move(table), *k);
        st.note_pass(table);
        passes.botjoin.emplace(v, std::move(table));
    }
    return passes;
}

void do_topjoins(const Database& bound, const JoinTree& tree, PassTables& passes,
                 std::optional<std::size_t> k) {
    StatsTracker st{passes.stats};
    for (int v : tree.pre_order()) {
        const auto& node = tree.nodes()[static_cast<std::size_t>(v)];
        if (node.parent < 0) continue;
        const int p = node.parent;
        const auto& pnode = tree.nodes()[static_cast<std::size_t>(p)];
        Relation ctx = materialize_node(bound, tree, p, st);
        if (pnode.parent >= 0) {
            ctx = cnt_join(ctx, passes.topjoin.at(p));
            st.note(ctx);
        }
        for (int s : pnode.children) {
            if (s == v) continue;
            ctx = cnt_join(ctx, passes.botjoin.at(s));
            st.note(ctx);
        }
        Relation table = groupby_sum(ctx, node.shared_with_parent);
        if (k) table = truncate_counts(std::move(table), *k);
        st.note_pass(table);
        passes.topjoin.emplace(v, std::move(table));
    }
}

Relation scale_counts(const Relation& table, Count factor) {
    if (factor == Count(1)) return table;
    if (factor.is_zero()) return Relation(table.name(), table.schema());
    std::vector<RawRow> raws;
    raws.reserve(table.distinct_rows());
    for (const auto& [row, cnt] : table.rows()) raws.push_back({row, cnt * factor});
    return Relation::canonicalize(table.name(), table.schema(), raws);
}

std::vector<MultiplicityTable> build_tables(const Database& bound, const JoinTree& tree,
                                            const PassTables& passes, StatsTracker& st) {
    const auto& nodes = tree.nodes();

    // Component of each node (index into roots()), join size per component,
    // and for each component the product of all *other* components' sizes.
    std::vector<std::size_t> component(nodes.size(), 0);
    for (std::size_t r = 0; r < tree.roots().size(); ++r) {
        std::vector<int> stack{tree.roots()[r]};
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            component[static_cast<std::size_t>(v)] = r;
            for (int c : nodes[static_cast<std::size_t>(v)].children) stack.push_back(c);
        }
    }
    std::vector<Count> size_of(tree.roots().size(), Count(0));
    for (std::size_t r = 0; r < tree.roots().size(); ++r)
        size_of[r] = passes.botjoin.at(tree.roots()[r]).total();
    std::vector<Count> factor_for(tree.roots().size(), Count(1));
    for (std::size_t r = 0; r < tree.roots().size(); ++r)
        for (std::size_t o = 0; o < tree.roots().size(); ++o)
            if (o != r) factor_for[r] *= size_of[o];

    std::vector<std::optional<MultiplicityTable>> slots(tree.atoms().size());
    for (std::size_t v = 0; v < nodes.size(); ++v) {
        const auto& node = nodes[v];
        // Atoms grouped in one node see each other as part of the context.
        std::vector<std::size_t> cohort = node.atoms;
        std::sort(cohort.begin(), cohort.end(), [&](std::size_t a, std::size_t b) {
            return tree.atoms()[a].relation < tree.atoms()[b].relation;
        });
        for (std::size_t atom_idx : node.atoms) {
            const Atom& atom = tree.atoms()[atom_idx];

            // Everything in the query except this atom, aggregated onto the
            // node: the rest of the tree above (topjoin), below (children's
            // botjoins), and the node's other atoms.
            std::vector<const Relation*> operands;
            if (node.parent >= 0) operands.push_back(&passes.topjoin.at(static_cast<int>(v)));
            for (int c : node.children) operands.push_back(&passes.botjoin.at(c));
            std::vector<Relation> cohort_rels;
            for (std::size_t other : cohort)
                if (other != atom_idx)
                    cohort_rels.push_back(bound.relation(tree.atoms()[other].relation));
            for (const auto& r : cohort_rels) operands.push_back(&r);

            Relation ctx = unit_relation();
            if (!operands.empty()) {
                ctx = *operands.front();
                for (std::size_t i = 1; i < operands.size(); ++i) {
                    ctx = cnt_join(ctx, *operands[i]);
                    st.note(ctx);
                }
            }

            std::set<std::string> covered_set;
            for (const auto& a : ctx.schema())
                if (atom.has_attr(a)) covered_set.insert(a);
            const std::vector<std::string> covered = sorted_attrs(covered_set);

            Relation table = groupby_sum(ctx, covered);
            st.note(table);
            if (!atom_satisfiable(atom))
                table = Relation(table.name(), table.schema());
            else
                table = filter_rows(std::move(table), atom.selections, bound.dict());
            table = scale_counts(table, factor_for[component[v]]);

            std::vector<std::string> free;
            for (const auto& a : atom.attrs)
                if (!covered_set.count(a)) free.push_back(a);
            slots[atom_idx] =
                MultiplicityTable{atom.relation, covered, std::move(free), std::move(table)};
        }
    }
    std::vector<MultiplicityTable> tables;
    tables.reserve(slots.size());
    for (auto& slot : slots) tables.push_back(std::move(*slot));
    return tables;
}

bool string_row_less(const ValueDict& dict, const Row& a, const Row& b) {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        const std::string& sa = dict.resolve(a[i]);
        const std::string& sb = dict.resolve(b[i]);
        if (sa != sb) return sa < sb;
    }
    return a.size() < b.size();
}

/** Largest count in the table; ties resolved toward the smallest key by
 *  resolved strings, so the choice does not depend on load order. */
std::optional<std::pair<Row, Count>> table_argmax(const Relation& table, const ValueDict& dict) {
    std::optional<std::pair<Row, Count>> best;
    for (const auto& [row, cnt] : table.rows()) {
        if (!best || cnt > best->second ||
            (cnt == best->second && string_row_less(dict, row, best->first)))
            best = {row, cnt};
    }
    return best;
}

/** Extends a maximizing key to a full tuple of the atom, in attribute
 *  order. Prefers copying an existing matching row (smallest by strings);
 *  otherwise free attributes take a forced equality literal, the smallest
 *  surviving active-domain value, or a fresh placeholder. */
std::vector<std::string> complete_witness(const Relation& bound_rel, const Atom& atom,
                                          const std::vector<std::string>& key_attrs,
                                          const Row& key, const ValueDict& dict) {
    std::map<std::string, std::string> assigned;
    std::vector<std::size_t> key_pos;  // key attr positions in the atom schema
    for (std::size_t i = 0; i < key_attrs.size(); ++i) {
        assigned[key_attrs[i]] = dict.resolve(key[i]);
        key_pos.push_back(*bound_rel.attr_index(key_attrs[i]));
    }

    if (assigned.size() < atom.attrs.size()) {
        // An existing row matching the key, if any, supplies the free values.
        const Row* best = nullptr;
        for (const auto& [row, cnt] : bound_rel.rows()) {
            bool match = true;
            for (std::size_t i = 0; i < key_pos.size(); ++i)
                if (row[key_pos[i]] != key[i]) {
                    match = false;
                    break;
                }
            if (match && (!best || string_row_less(dict, row, *best))) best = &row;
        }
        if (best) {
            std::vector<std::string> out;
            for (ValueId id : *best) out.push_back(dict.resolve(id));
            return out;
        }
        for (const auto& attr : atom.attrs) {
            if (assigned.count(attr)) continue;
            std::set<std::string> excluded;
            std::optional<std::string> forced;
            for (const auto& sel : atom.selections) {
                if (sel.attr != attr) continue;
                if (sel.op == Selection::Op::Eq)
                    forced = sel.literal;
                else
                    excluded.insert(sel.literal);
            }
            if (forced) {
                assigned[attr] = *forced;
                continue;
            }
            std::set<std::string> actives;
            const std::size_t pos = *bound_rel.attr_index(attr);
            for (const auto& [row, cnt] : bound_rel.rows()) actives.insert(dict.resolve(row[pos]));
            std::optional<std::string> pick;
            for (const auto& v : actives)
                if (!excluded.count(v)) {
                    pick = v;
                    break;
                }
            if (!pick) {
                // Placeholder standing for any value the instance has never
                // seen; lengthen it past pathological exclusion literals.
                std::string fresh = "*";
                while (excluded.count(fresh)) fresh += '*';
                pick = fresh;
            }
            assigned[attr] = *pick;
        }
    }

    std::vector<std::string> out;
    out.reserve(atom.attrs.size());
    for (const auto& attr : atom.attrs) out.push_back(assigned.at(attr));
    return out;
}

struct AtomBest {
    Count tsens = Count(0);
    std::optional<std::vector<std::string>> values;
};

AtomBest best_from_table(const Database& bound, const Atom& atom, const MultiplicityTable& mt) {
    AtomBest best;
    auto argmax = table_argmax(mt.table, bound.dict());
    if (!argmax) return best;
    best.tsens = argmax->second;
    best.values = complete_witness(bound.relation(atom.relation), atom, mt.key_attrs,
                                   argmax->first, bound.dict());
    return best;
}

/** Per-relation bests, the maximum as the local sensitivity, and the
 *  witness: the smallest relation name among the maximum achievers (each
 *  atom names a distinct relation, so this is a total order). */
void finalize_report(SensitivityReport& report, const ConjunctiveQuery& query,
                     const std::vector<AtomBest>& bests) {
    report.per_relation.clear();
    for (std::size_t i = 0; i < query.atoms.size(); ++i) {
        PerRelationBest entry;
        entry.relation = query.atoms[i].relation;
        entry.tsens = bests[i].tsens;
        entry.values = bests[i].values;
        report.per_relation.push_back(std::move(entry));
    }
    report.ls = Count(0);
    report.witness.reset();
    for (const auto& entry : report.per_relation) {
        if (!entry.values) continue;
        const bool better =
            entry.tsens > report.ls ||
            (entry.tsens == report.ls && report.witness &&
             entry.relation < report.witness->relation);
        if (better) {
            report.ls = entry.tsens;
            report.witness = WitnessInfo{entry.relation, *entry.values, entry.tsens};
        }
    }
    if (report.ls.is_zero()) report.witness.reset();
}

SensitivityReport run_tree(const Database& db, const ConjunctiveQuery& query,
                           const JoinTree& tree, std::optional<std::size_t> k) {
    const Database bound = apply_selections(db, query);
    PassTables passes = do_botjoins(bound, tree, k);
    do_topjoins(bound, tree, passes, k);

    SensitivityReport report;
    report.stats = passes.stats;
    StatsTracker st{report.stats};
    report.tables = build_tables(bound, tree, passes, st);

    report.join_size = Count(1);
    for (int root : tree.roots()) report.join_size *= passes.botjoin.at(root).total();

    std::vector<AtomBest> bests;
    for (std::size_t i = 0; i < query.atoms.size(); ++i)
        bests.push_back(best_from_table(bound, query.atoms[i], report.tables[i]));
    finalize_report(report, query, bests);

    report.stats.max_atoms_per_node = tree.max_atoms_per_node();
    return report;
}

std::string residual_message(const std::vector<Hyperedge>& residual) {
    std::string msg = "query is cyclic; irreducible atoms:";
    for (const auto& e : residual) msg += " " + e.name;
    return msg;
}

/** A deduplicated count table stored as one contiguous id buffer, sorted
 *  lexicographically by row.  The chain sweeps stream through very short
 *  rows at high volume; keeping them flat avoids a node and a heap row per
 *  entry and keeps the sort and probe loops in contiguous memory. */
struct FlatTable {
    std::vector<std::string> schema;
    std::size_t width = 0;
    std::vector<ValueId> ids;  // row-major, size() * width entries
    std::vector<Count> cnts;

    std::size_t size() const { return cnts.size(); }
    const ValueId* row(std::size_t i) const { return ids.data() + i * width; }
};

/** The table with no attributes and a single count-1 row. */
FlatTable flat_unit() {
    FlatTable t;
    t.cnts.push_back(Count(1));
    return t;
}

int flat_compare(const ValueId* a, const ValueId* b, std::size_t width) {
    for (std::size_t j = 0; j < width; ++j) {
        if (a[j] < b[j]) return -1;
        if (a[j] > b[j]) return 1;
    }
    return 0;
}

constexpr std::size_t kNoRow = static_cast<std::size_t>(-1);

/** Index of the row equal to `key`, or kNoRow; rows are unique and sorted. */
std::size_t flat_find(const FlatTable& t, const ValueId* key) {
    std::size_t lo = 0, hi = t.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (flat_compare(t.row(mid), key, t.width) < 0)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < t.size() && flat_compare(t.row(lo), key, t.width) == 0) return lo;
    return kNoRow;
}

/** One relation's rows copied out of the map into contiguous storage, in
 *  the map's order; the sweeps scan each relation several times and the
 *  flat copy makes those scans sequential. */
struct FlatRelation {
    const Relation* rel = nullptr;
    std::size_t width = 0;
    std::vector<ValueId> ids;  // row-major, one stripe per distinct row
    std::vector<Count> cnts;

    explicit FlatRelation(const Relation& r) : rel(&r), width(r.schema().size()) {
        ids.reserve(r.distinct_rows() * width);
        cnts.reserve(r.distinct_rows());
        for (const auto& [row, cnt] : r.rows()) {
            ids.insert(ids.end(), row.begin(), row.end());
            cnts.push_back(cnt);
        }
    }

    std::size_t size() const { return cnts.size(); }
    const ValueId* row(std::size_t i) const { return ids.data() + i * width; }
};

/** One sweep step fused into a single pass: joins `fr` against the count
 *  table `t` on t's attributes (each relation row matches at most one key),
 *  projects every match onto `out_attrs`, and sums counts per projected
 *  row.  Equivalent to groupby_sum(cnt_join(t, rel), out_attrs) without
 *  materializing the join; `note_join` records the stats that join would
 *  have contributed (its distinct rows are exactly the matched ones). */
FlatTable flat_step(const FlatTable& t, const FlatRelation& fr,
                    const std::vector<std::string>& out_attrs, StatsTracker& st,
                    bool note_join) {
    auto pos_of = [&fr](const std::string& attr) {
        auto idx = fr.rel->attr_index(attr);
        if (!idx)
            throw QueryError("relation '" + fr.rel->name() + "' has no attribute '" + attr + "'");
        return *idx;
    };
    std::vector<std::size_t> kpos;
    kpos.reserve(t.schema.size());
    for (const auto& attr : t.schema) kpos.push_back(pos_of(attr));
    std::vector<std::size_t> opos;
    opos.reserve(out_attrs.size());
    for (const auto& attr : out_attrs) opos.push_back(pos_of(attr));

    const std::size_t budget = memory_budget_rows();
    const std::size_t w = out_attrs.size();
    std::vector<ValueId> key(t.width);
    std::vector<ValueId> produced;  // row-major, duplicates not yet merged
    std::vector<Count> weights;
    std::size_t matched = 0;
    for (std::size_t rix = 0; rix < fr.size(); ++rix) {
        const ValueId* row = fr.row(rix);
        for (std::size_t j = 0; j < t.width; ++j) key[j] = row[kpos[j]];
        const std::size_t hit = flat_find(t, key.data());
        if (hit == kNoRow) continue;
        ++matched;
        if (matched > budget) throw MemoryBudgetExceeded(matched, budget);
        for (std::size_t j = 0; j < w; ++j) produced.push_back(row[opos[j]]);
        weights.push_back(fr.cnts[rix] * t.cnts[hit]);
    }
    if (note_join) st.note_rows(matched);

    FlatTable out;
    out.schema = out_attrs;
    out.width = w;
    out.ids.reserve(produced.size());
    out.cnts.reserve(weights.size());
    const std::size_t n = weights.size();
    if (w <= 2) {
        // A short row packs into one integer whose numeric order is the
        // row's lexicographic order, so the sort runs on plain integers.
        std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
        keyed.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const ValueId* src = produced.data() + i * w;
            std::uint64_t k = 0;
            if (w > 0) k = static_cast<std::uint64_t>(src[0]) << 32;
            if (w > 1) k |= src[1];
            keyed.emplace_back(k, i);
        }
        std::sort(keyed.begin(), keyed.end());
        std::uint64_t prev = 0;
        for (const auto& [k, i] : keyed) {
            if (!out.cnts.empty() && k == prev) {
                out.cnts.back() += weights[i];
                continue;
            }
            if (out.size() + 1 > budget) throw MemoryBudgetExceeded(out.size() + 1, budget);
            if (w > 0) out.ids.push_back(static_cast<ValueId>(k >> 32));
            if (w > 1) out.ids.push_back(static_cast<ValueId>(k & 0xffffffffu));
            out.cnts.push_back(weights[i]);
            prev = k;
        }
    } else {
        std::vector<std::size_t> index(n);
        std::iota(index.begin(), index.end(), std::size_t{0});
        std::sort(index.begin(), index.end(), [&](std::size_t a, std::size_t b) {
            return flat_compare(produced.data() + a * w, produced.data() + b * w, w) < 0;
        });
        for (std::size_t i : index) {
            const ValueId* src = produced.data() + i * w;
            if (!out.cnts.empty() && flat_compare(out.row(out.size() - 1), src, w) == 0) {
                out.cnts.back() += weights[i];
            } else {
                if (out.size() + 1 > budget) throw MemoryBudgetExceeded(out.size() + 1, budget);
                out.ids.insert(out.ids.end(), src, src + w);
                out.cnts.push_back(weights[i]);
            }
        }
    }
    st.note_pass_rows(out.size());
    return out;
}

/** Keeps the rows satisfying every selection that names one of the table's
 *  attributes, mirroring filter_rows: an equality literal absent from the
 *  dictionary empties the table, an absent inequality excludes nothing. */
FlatTable flat_filter(FlatTable t, const std::vector<Selection>& selections,
                      const ValueDict& dict) {
    struct Compiled {
        std::size_t idx;
        bool eq;
        std::optional<ValueId> literal;
    };
    std::vector<Compiled> compiled;
    for (const auto& sel : selections) {
        std::size_t idx = t.width;
        for (std::size_t j = 0; j < t.width; ++j)
            if (t.schema[j] == sel.attr) {
                idx = j;
                break;
            }
        if (idx == t.width) continue;
        auto literal = dict.find(sel.literal);
        if (sel.op == Selection::Op::Eq && !literal) {
            t.ids.clear();
            t.cnts.clear();
            return t;
        }
        compiled.push_back({idx, sel.op == Selection::Op::Eq, literal});
    }
    if (compiled.empty()) return t;

    std::size_t w = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        bool pass = true;
        for (const auto& c : compiled) {
            const bool equal = c.literal && t.row(i)[c.idx] == *c.literal;
            if (equal != c.eq) {
                pass = false;
                break;
            }
        }
        if (!pass) continue;
        if (w != i) {
            std::copy(t.row(i), t.row(i) + t.width,
                      t.ids.begin() + static_cast<std::ptrdiff_t>(w * t.width));
            t.cnts[w] = t.cnts[i];
        }
        ++w;
    }
    t.ids.resize(w * t.width);
    t.cnts.resize(w);
    return t;
}

/** Largest count with ties toward the smallest key by resolved strings,
 *  matching table_argmax. */
std::optional<std::pair<Row, Count>> flat_argmax(const FlatTable& t, const ValueDict& dict) {
    std::optional<std::pair<Row, Count>> best;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const Count& c = t.cnts[i];
        if (best && best->second > c) continue;
        Row cand(t.row(i), t.row(i) + t.width);
        if (!best || c > best->second ||
            (c == best->second && string_row_less(dict, cand, best->first)))
            best = {std::move(cand), c};
    }
    return best;
}

}  // namespace

Database apply_selections(const Database& db, const ConjunctiveQuery& query) {
    Database out;
    out.dict() = db.dict();  // copying preserves every id
    for (const auto& atom : query.atoms) {
        const Relation& rel = db.relation(atom.relation);
        if (rel.schema().size() != atom.attrs.size())
            throw QueryError("atom '" + atom.relation + "' has " +
                             std::to_string(atom.attrs.size()) + " attributes but the relation has " +
                             std::to_string(rel.schema().size()) + " columns");
        Relation bound = rel.renamed(atom.relation, atom.attrs);
        out.add(filter_rows(std::move(bound), atom.selections, out.dict()));
    }
    for (const auto& [name, rel] : db.relations())
        if (!query.uses(name)) out.add(rel);
    return out;
}

PassTables compute_botjoins(const Database& bound, const JoinTree& tree) {
    return do_botjoins(bound, tree, std::nullopt);
}

void compute_topjoins(const Database& bound, const JoinTree& tree, PassTables& passes) {
    do_topjoins(bound, tree, passes, std::nullopt);
}

std::vector<MultiplicityTable> compute_multiplicity_tables(const Database& bound,
                                                           const JoinTree& tree,
                                                           const PassTables& passes) {
    SensitivityStats scratch;
    StatsTracker st{scratch};
    return build_tables(bound, tree, passes, st);
}

SensitivityReport ls_acyclic(const Database& db, const ConjunctiveQuery& query) {
    GyoResult gyo = gyo_decompose(query);
    if (!gyo.acyclic) throw CyclicQuery(residual_message(gyo.residual));
    return run_tree(db, query, *gyo.tree, std::nullopt);
}

SensitivityReport ls_general(const Database& db, const ConjunctiveQuery& query,
                             const JoinTree& tree) {
    return run_tree(db, query, tree, std::nullopt);
}

SensitivityReport topk_bound(const Database& db, const ConjunctiveQuery& query, std::size_t k) {
    if (k == 0) throw ConfigError("top-k parameter must be at least 1");
    GyoResult gyo = gyo_decompose(query);
    if (!gyo.acyclic) throw CyclicQuery(residual_message(gyo.residual));
    return run_tree(db, query, *gyo.tree, k);
}

SensitivityReport topk_bound(const Database& db, const ConjunctiveQuery& query, std::size_t k,
                             const JoinTree& tree) {
    if (k == 0) throw ConfigError("top-k parameter must be at least 1");
    return run_tree(db, query, tree, k);
}

SensitivityReport ls_path(const Database& db, const ConjunctiveQuery& query) {
    auto order = chain_order(query);
    if (!order)
        throw NotAPathQuery(
            "the atoms do not form a chain in which only consecutive atoms share attributes");
    const std::size_t m = order->size();

    // Binding an atom is the identity when it renames nothing and carries no
    // selections; skip the database copy when that holds for every atom.
    bool identity = true;
    for (const auto& atom : query.atoms) {
        const Relation& r = db.relation(atom.relation);
        if (!atom.selections.empty() || r.schema() != atom.attrs) {
            identity = false;
            break;
        }
    }
    std::optional<Database> bound_store;
    if (!identity) bound_store = apply_selections(db, query);
    const Database& bound = identity ? db : *bound_store;

    SensitivityReport report;
    StatsTracker st{report.stats};

    // Shared attributes between consecutive chain atoms; the two sweeps are
    // keyed on these cuts.
    std::vector<std::vector<std::string>> cut(m > 0 ? m - 1 : 0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        std::set<std::string> shared;
        const Atom& a = query.atoms[(*order)[i]];
        const Atom& b = query.atoms[(*order)[i + 1]];
        for (const auto& attr : a.attrs)
            if (b.has_attr(attr)) shared.insert(attr);
        cut[i] = sorted_attrs(shared);
    }
    std::vector<const Relation*> rel(m);
    for (std::size_t i = 0; i < m; ++i) rel[i] = &bound.relation(query.atoms[(*order)[i]].relation);
    std::vector<FlatRelation> flat;
    flat.reserve(m);
    for (std::size_t i = 0; i < m; ++i) flat.emplace_back(*rel[i]);

    // down[i]: extensions of a cut-(i-1) key through atoms 1..i-1;
    // up[i]: extensions of a cut-i key through atoms i+1..m.
    std::vector<FlatTable> down(m, flat_unit()), up(m, flat_unit());
    for (std::size_t i = 1; i < m; ++i)
        down[i] = flat_step(down[i - 1], flat[i - 1], cut[i - 1], st, true);
    for (std::size_t i = m; i-- > 1;)
        up[i - 1] = flat_step(up[i], flat[i], cut[i - 1], st, i + 1 < m);

    {
        // The total |Q(D)|: the first atom joined against its up table,
        // summed without materializing.
        const FlatRelation& first = flat[0];
        const FlatTable& u = up[0];
        std::vector<std::size_t> kpos;
        kpos.reserve(u.schema.size());
        for (const auto& attr : u.schema) kpos.push_back(*rel[0]->attr_index(attr));
        const std::size_t budget = memory_budget_rows();
        std::vector<ValueId> key(u.width);
        std::size_t matched = 0;
        Count total;
        for (std::size_t rix = 0; rix < first.size(); ++rix) {
            const ValueId* row = first.row(rix);
            for (std::size_t j = 0; j < u.width; ++j) key[j] = row[kpos[j]];
            const std::size_t hit = flat_find(u, key.data());
            if (hit == kNoRow) continue;
            ++matched;
            if (matched > budget) throw MemoryBudgetExceeded(matched, budget);
            total += first.cnts[rix] * u.cnts[hit];
        }
        st.note_rows(matched);
        report.join_size = total;
    }

    std::vector<AtomBest> bests(query.atoms.size());
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t atom_idx = (*order)[i];
        const Atom& atom = query.atoms[atom_idx];
        AtomBest best;
        if (atom_satisfiable(atom)) {
            const FlatTable before = flat_filter(std::move(down[i]), atom.selections, bound.dict());
            const FlatTable after = flat_filter(std::move(up[i]), atom.selections, bound.dict());
            auto a = flat_argmax(before, bound.dict());
            auto b = flat_argmax(after, bound.dict());
            if (a && b) {
                best.tsens = a->second * b->second;
                // Merge the two cut keys (disjoint on a chain) into one
                // sorted key, matching the tree pipeline's table keys.
                std::map<std::string, ValueId> partial;
                for (std::size_t j = 0; j < before.schema.size(); ++j)
                    partial[before.schema[j]] = a->first[j];
                for (std::size_t j = 0; j < after.schema.size(); ++j)
                    partial[after.schema[j]] = b->first[j];
                std::vector<std::string> key_attrs;
                Row key;
                for (const auto& [attr, id] : partial) {
                    key_attrs.push_back(attr);
                    key.push_back(id);
                }
                best.values = complete_witness(*rel[i], atom, key_attrs, key, bound.dict());
            }
        }
        bests[atom_idx] = std::move(best);
    }
    finalize_report(report, query, bests);
    return report;
}

Count tuple_sensitivity(const Database& db, const ConjunctiveQuery& query,
                        const std::vector<MultiplicityTable>& tables,
                        const std::string& relation, const std::vector<std::string>& values) {
    const Atom& atom = query.atom_for(relation);
    if (values.size() != atom.attrs.size())
        throw QueryError("tuple for '" + relation + "' has " + std::to_string(values.size()) +
                         " values, atom has " + std::to_string(atom.attrs.size()) +
                         " attributes");
    const MultiplicityTable* mt = nullptr;
    for (const auto& t : tables)
        if (t.relation == relation) {
            mt = &t;
            break;
        }
    if (!mt) throw QueryError("multiplicity tables do not cover relation '" + relation + "'");

    for (const auto& sel : atom.selections) {
        for (std::size_t i = 0; i < atom.attrs.size(); ++i)
            if (atom.attrs[i] == sel.attr && !sel.matches(values[i])) return Count(0);
    }

    Row key;
    key.reserve(mt->key_attrs.size());
    for (const auto& attr : mt->key_attrs) {
        std::size_t pos = 0;
        while (atom.attrs[pos] != attr) ++pos;
        auto id = db.dict().find(values[pos]);
        if (!id) return Count(0);  // value unseen anywhere: it joins nothing
        key.push_back(*id);
    }
    auto it = mt->table.rows().find(key);
    return it == mt->table.rows().end() ? Count(0) : it->second;
}

Count count_query(const Database& db, const ConjunctiveQuery& query, const JoinTree* tree) {
    const Database bound = apply_selections(db, query);
    auto total_over = [&](const JoinTree& t) {
        PassTables passes = do_botjoins(bound, t, std::nullopt);
        Count total(1);
        for (int root : t.roots()) total *= passes.botjoin.at(root).total();
        return total;
    };
    if (tree) return total_over(*tree);
    GyoResult gyo = gyo_decompose(query);
    if (!gyo.acyclic) throw CyclicQuery(residual_message(gyo.residual));
    return total_over(*gyo.tree);
}

}  // namespace tsens
