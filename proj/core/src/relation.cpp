#include "tsens/relation.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <utility>

namespace tsens {

namespace {

std::size_t initial_budget() {
    if (const char* env = std::getenv("TSENS_MEM_ROWS")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return 50'000'000;
}

std::size_t& budget_slot() {
    static thread_local std::size_t budget = initial_budget();
    return budget;
}

void check_budget(std::size_t rows) {
    const std::size_t budget = budget_slot();
    if (rows > budget) throw MemoryBudgetExceeded(rows, budget);
}

// FNV-1a over the id bytes; keys are short, quality is plenty.
constexpr std::size_t kFnvBasis = 1469598103934665603ull;

constexpr std::size_t fnv_step(std::size_t h, ValueId id) {
    for (int shift = 0; shift < 32; shift += 8) {
        h ^= static_cast<std::size_t>((id >> shift) & 0xff);
        h *= 1099511628211ull;
    }
    return h;
}

// Collects produced rows in a flat buffer and folds duplicates in sorted
// batches.  Appending plus an occasional sort is far cheaper than routing
// every produced row through a tree insert, and the batch size doubles with
// the distinct count so the total work stays O(n log n).  The budget check
// runs against the post-merge distinct count, which is the same quantity the
// per-insert path used to measure.
class RowAccumulator {
  public:
    void add(Row row, Count cnt) {
        buffer_.emplace_back(std::move(row), cnt);
        if (buffer_.size() >= compact_at_ || buffer_.size() > budget_) compact();
    }

    // Moves everything accumulated so far into `rows` (assumed empty).
    void finish(std::map<Row, Count>& rows) {
        compact();
        for (auto& [row, cnt] : buffer_)
            rows.emplace_hint(rows.end(), std::move(row), cnt);
        buffer_.clear();
    }

  private:
    void compact() {
        std::sort(buffer_.begin(), buffer_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t w = 0;
        for (std::size_t i = 0; i < buffer_.size(); ++i) {
            if (w > 0 && buffer_[w - 1].first == buffer_[i].first) {
                buffer_[w - 1].second += buffer_[i].second;
            } else {
                if (w != i) buffer_[w] = std::move(buffer_[i]);
                ++w;
            }
        }
        buffer_.resize(w);
        check_budget(buffer_.size());
        compact_at_ = std::max(kMinCompact, buffer_.size() * 2);
    }

    static constexpr std::size_t kMinCompact = std::size_t{1} << 16;

    std::vector<std::pair<Row, Count>> buffer_;
    std::size_t compact_at_ = kMinCompact;
    std::size_t budget_ = memory_budget_rows();
};

}  // namespace

std::size_t memory_budget_rows() { return budget_slot(); }

ScopedMemoryBudget::ScopedMemoryBudget(std::size_t rows) : previous_(budget_slot()) {
    budget_slot() = rows;
}

ScopedMemoryBudget::~ScopedMemoryBudget() { budget_slot() = previous_; }

Relation::Relation(std::string name, std::vector<std::string> schema)
    : name_(std::move(name)), schema_(std::move(schema)) {
    std::set<std::string> seen;
    for (const auto& attr : schema_) {
        if (attr.empty()) throw QueryError("relation '" + name_ + "' has an empty attribute name");
        if (!seen.insert(attr).second)
            throw QueryError("relation '" + name_ + "' repeats attribute '" + attr + "'");
    }
}

Relation Relation::canonicalize(std::string name, std::vector<std::string> schema,
                                const std::vector<RawRow>& raw_rows) {
    Relation rel(std::move(name), std::move(schema));
    for (const auto& raw : raw_rows) {
        if (raw.values.size() != rel.schema_.size())
            throw QueryError("relation '" + rel.name_ + "': tuple arity " +
                             std::to_string(raw.values.size()) + " != schema arity " +
                             std::to_string(rel.schema_.size()));
        if (raw.cnt.is_zero())
            throw QueryError("relation '" + rel.name_ + "': tuple count must be >= 1");
        auto [it, inserted] = rel.rows_.try_emplace(raw.values, raw.cnt);
        if (!inserted) it->second += raw.cnt;
        check_budget(rel.rows_.size());
    }
    return rel;
}

Count Relation::total() const {
    Count sum;
    for (const auto& [row, cnt] : rows_) sum += cnt;
    return sum;
}

std::optional<std::size_t> Relation::attr_index(const std::string& attr) const {
    for (std::size_t i = 0; i < schema_.size(); ++i)
        if (schema_[i] == attr) return i;
    return std::nullopt;
}

Relation Relation::renamed(std::string name, std::vector<std::string> schema) const {
    if (schema.size() != schema_.size())
        throw QueryError("cannot rebind relation '" + name_ + "' (arity " +
                         std::to_string(schema_.size()) + ") to " +
                         std::to_string(schema.size()) + " attributes");
    Relation rel(std::move(name), std::move(schema));
    rel.rows_ = rows_;
    return rel;
}

Relation Relation::with_one_removed(const Row& row) const {
    auto it = rows_.find(row);
    if (it == rows_.end())
        throw QueryError("relation '" + name_ + "': cannot remove an absent tuple");
    Relation rel(name_, schema_);
    rel.rows_ = rows_;
    auto target = rel.rows_.find(row);
    if (target->second == Count(1))
        rel.rows_.erase(target);
    else
        target->second = target->second - Count(1);
    return rel;
}

Relation Relation::with_one_added(const Row& row) const {
    if (row.size() != schema_.size())
        throw QueryError("relation '" + name_ + "': tuple arity mismatch on insert");
    Relation rel(name_, schema_);
    rel.rows_ = rows_;
    auto [it, inserted] = rel.rows_.try_emplace(row, Count(1));
    if (!inserted) it->second += Count(1);
    return rel;
}

Relation Relation::without_row(const Row& row) const {
    Relation rel(name_, schema_);
    rel.rows_ = rows_;
    rel.rows_.erase(row);
    return rel;
}

Relation cnt_join(const Relation& left, const Relation& right) {
    // Output schema: left attributes, then right-only attributes.
    std::vector<std::string> schema = left.schema_;
    std::vector<std::size_t> right_extra;  // right columns appended to output
    std::vector<std::pair<std::size_t, std::size_t>> key;  // (left idx, right idx)
    for (std::size_t r = 0; r < right.schema_.size(); ++r) {
        if (auto l = left.attr_index(right.schema_[r]))
            key.emplace_back(*l, r);
        else {
            right_extra.push_back(r);
            schema.push_back(right.schema_[r]);
        }
    }

    Relation out("(" + left.name_ + "*" + right.name_ + ")", std::move(schema));

    // Index the right side as a flat array sorted by key hash: one
    // contiguous allocation instead of a node per distinct key, probed by
    // binary search.  Hash collisions are resolved by comparing the key
    // columns before producing a row.
    struct Slot {
        std::size_t hash;
        const std::pair<const Row, Count>* entry;
    };
    std::vector<Slot> index;
    index.reserve(right.rows_.size());
    for (const auto& entry : right.rows_) {
        std::size_t h = kFnvBasis;
        for (const auto& [l, r] : key) h = fnv_step(h, entry.first[r]);
        index.push_back({h, &entry});
    }
    std::sort(index.begin(), index.end(),
              [](const Slot& a, const Slot& b) { return a.hash < b.hash; });

    RowAccumulator acc;
    for (const auto& [lrow, lcnt] : left.rows_) {
        std::size_t h = kFnvBasis;
        for (const auto& [l, r] : key) h = fnv_step(h, lrow[l]);
        auto lo = std::lower_bound(index.begin(), index.end(), h,
                                   [](const Slot& s, std::size_t v) { return s.hash < v; });
        for (; lo != index.end() && lo->hash == h; ++lo) {
            const auto& rrow = lo->entry->first;
            bool match = true;
            for (const auto& [l, r] : key)
                if (lrow[l] != rrow[r]) {
                    match = false;
                    break;
                }
            if (!match) continue;
            Row combined;
            combined.reserve(out.schema_.size());
            combined.insert(combined.end(), lrow.begin(), lrow.end());
            for (std::size_t r : right_extra) combined.push_back(rrow[r]);
            acc.add(std::move(combined), lcnt * lo->entry->second);
        }
    }
    acc.finish(out.rows_);
    return out;
}

Relation groupby_sum(const Relation& rel, const std::vector<std::string>& attrs) {
    std::vector<std::size_t> projection;
    projection.reserve(attrs.size());
    for (const auto& attr : attrs) {
        auto idx = rel.attr_index(attr);
        if (!idx)
            throw QueryError("groupby_sum: relation '" + rel.name_ +
                             "' has no attribute '" + attr + "'");
        projection.push_back(*idx);
    }

    Relation out(rel.name_, attrs);
    RowAccumulator acc;
    for (const auto& [row, cnt] : rel.rows_) {
        Row group(projection.size());
        for (std::size_t i = 0; i < projection.size(); ++i) group[i] = row[projection[i]];
        acc.add(std::move(group), cnt);
    }
    acc.finish(out.rows_);
    return out;
}

void Database::add(Relation relation) {
    const std::string name = relation.name();
    if (!relations_.emplace(name, std::move(relation)).second)
        throw QueryError("duplicate relation '" + name + "'");
}

void Database::replace(Relation relation) {
    auto it = relations_.find(relation.name());
    if (it == relations_.end())
        throw QueryError("unknown relation '" + relation.name() + "'");
    it->second = std::move(relation);
}

const Relation& Database::relation(const std::string& name) const {
    auto it = relations_.find(name);
    if (it == relations_.end()) throw QueryError("unknown relation '" + name + "'");
    return it->second;
}

std::vector<std::string> Database::names() const {
    std::vector<std::string> out;
    out.reserve(relations_.size());
    for (const auto& [name, rel] : relations_) out.push_back(name);
    return out;
}

Count Database::total_tuples() const {
    Count sum;
    for (const auto& [name, rel] : relations_) sum += rel.total();
    return sum;
}

std::size_t Database::total_distinct_rows() const {
    std::size_t sum = 0;
    for (const auto& [name, rel] : relations_) sum += rel.distinct_rows();
    return sum;
}

void Database::add_from_strings(
    const std::string& name, const std::vector<std::string>& schema,
    const std::vector<std::pair<std::vector<std::string>, Count>>& rows) {
    std::vector<RawRow> raw;
    raw.reserve(rows.size());
    for (const auto& [values, cnt] : rows) {
        RawRow r;
        r.values.reserve(values.size());
        for (const auto& v : values) r.values.push_back(dict_.intern(v));
        r.cnt = cnt;
        raw.push_back(std::move(r));
    }
    add(Relation::canonicalize(name, schema, raw));
}

}  // namespace tsens
