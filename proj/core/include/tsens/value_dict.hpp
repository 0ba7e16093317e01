#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tsens/errors.hpp"

namespace tsens {

/** Dense identifier of an interned attribute value. */
using ValueId = std::uint32_t;

/** Interns attribute values as dense ids, assigned in first-seen order.
 *
 *  Interning is a bijection (intern(resolve(id)) == id for every issued id),
 *  so relations can store compact id tuples while reports resolve them back
 *  to the original strings. Id order — and therefore the canonical row order
 *  of relations — is deterministic for a given load sequence.
 */
class ValueDict {
public:
    /** Returns the id for `value`, assigning the next free id on first sight. */
    ValueId intern(std::string_view value) {
        ensure_index();
        if (auto it = index_.find(value); it != index_.end()) return it->second;
        const auto id = static_cast<ValueId>(values_.size());
        values_.emplace_back(value);
        index_.emplace(values_.back(), id);
        return id;
    }

    /** Looks a value up without interning it. */
    std::optional<ValueId> find(std::string_view value) const {
        ensure_index();
        if (auto it = index_.find(value); it != index_.end()) return it->second;
        return std::nullopt;
    }

    const std::string& resolve(ValueId id) const {
        if (id >= values_.size())
            throw QueryError("unknown value id " + std::to_string(id));
        return values_[id];
    }

    std::size_t size() const noexcept { return values_.size(); }

    // Copies leave the lookup index empty and rebuild it on first use: many
    // copies (bound databases, one-tuple perturbations) only ever resolve
    // ids back to strings, which needs no index at all.
    ValueDict() = default;
    ValueDict(const ValueDict& other) : values_(other.values_) {}
    ValueDict& operator=(const ValueDict& other) {
        if (this != &other) {
            values_ = other.values_;
            index_.clear();
        }
        return *this;
    }
    ValueDict(ValueDict&&) = default;
    ValueDict& operator=(ValueDict&&) = default;

private:
    // index_ owns copies of the keys (values_ may reallocate, so views into
    // it would dangle); transparent hash/eq allow string_view lookups.
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };
    struct Eq {
        using is_transparent = void;
        bool operator()(std::string_view a, std::string_view b) const noexcept {
            return a == b;
        }
    };

    void ensure_index() const {
        if (index_.size() == values_.size()) return;
        index_.clear();
        index_.reserve(values_.size());
        for (ValueId id = 0; id < values_.size(); ++id)
            index_.emplace(values_[id], id);
    }

    std::vector<std::string> values_;
    mutable std::unordered_map<std::string, ValueId, Hash, Eq> index_;
};

}  // namespace tsens
