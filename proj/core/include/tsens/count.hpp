#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "tsens/errors.hpp"

namespace tsens {

/** Unsigned 128-bit multiplicity with checked arithmetic.
 *
 *  Every addition and multiplication verifies the result fits; overflow
 *  throws CountOverflow rather than saturating or wrapping, because a
 *  wrapped count would silently corrupt downstream sensitivities.
 *  Counts serialize as decimal strings (they exceed common JSON integer
 *  ranges).
 */
class Count {
public:
    constexpr Count() = default;
    constexpr Count(std::uint64_t value) : v_(value) {}  // NOLINT(google-explicit-constructor)

    /** Parses a non-empty decimal digit string; throws DataError on junk
     *  and CountOverflow past 2^128 - 1. */
    static Count from_decimal(std::string_view text);

    Count operator+(Count other) const {
        unsigned __int128 r;
        if (__builtin_add_overflow(v_, other.v_, &r))
            throw CountOverflow("count addition overflows 128 bits");
        return Count(r, Raw{});
    }

    Count operator*(Count other) const {
        unsigned __int128 r;
        if (__builtin_mul_overflow(v_, other.v_, &r))
            throw CountOverflow("count multiplication overflows 128 bits");
        return Count(r, Raw{});
    }

    Count& operator+=(Count other) { return *this = *this + other; }
    Count& operator*=(Count other) { return *this = *this * other; }

    /** Saturating subtraction is deliberately absent: the algorithms only
     *  ever subtract a quantity known to be <= the minuend. */
    Count operator-(Count other) const {
        if (other.v_ > v_)
            throw CountOverflow("count subtraction underflows");
        return Count(v_ - other.v_, Raw{});
    }

    friend auto operator<=>(const Count&, const Count&) = default;

    bool is_zero() const noexcept { return v_ == 0; }

    std::string to_string() const;

    /** Lossy conversion for DP arithmetic (noise dwarfs the rounding). */
    double to_double() const { return static_cast<double>(v_); }

    unsigned __int128 raw() const noexcept { return v_; }

private:
    struct Raw {};
    constexpr Count(unsigned __int128 value, Raw) : v_(value) {}

    unsigned __int128 v_ = 0;
};

/** Largest count difference, used for symmetric deltas. */
inline Count abs_diff(Count a, Count b) { return a < b ? b - a : a - b; }

}  // namespace tsens
