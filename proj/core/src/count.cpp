#include "tsens/count.hpp"

#include <algorithm>

namespace tsens {

Count Count::from_decimal(std::string_view text) {
    if (text.empty()) throw DataError("empty count");
    Count result;
    for (char c : text) {
        if (c < '0' || c > '9')
            throw DataError("invalid count '" + std::string(text) +
                            "': expected decimal digits");
        result = result * Count(10) + Count(static_cast<std::uint64_t>(c - '0'));
    }
    return result;
}

std::string Count::to_string() const {
    if (v_ == 0) return "0";
    std::string digits;
    unsigned __int128 v = v_;
    while (v != 0) {
        digits.push_back(static_cast<char>('0' + static_cast<unsigned>(v % 10)));
        v /= 10;
    }
    std::reverse(digits.begin(), digits.end());
    return digits;
}

}  // namespace tsens
