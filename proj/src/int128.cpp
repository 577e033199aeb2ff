#include "pslab/int128.hpp"

#include <algorithm>

#include "pslab/errors.hpp"

namespace pslab {

std::string to_string(u128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
        out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::string to_string(i128 v) {
    if (v >= 0) return to_string(static_cast<u128>(v));
    return "-" + to_string(static_cast<u128>(-(v + 1)) + 1);
}

i128 parse_i128(std::string_view text) {
    if (text.empty()) throw DomainError("empty integer");
    bool neg = false;
    std::size_t i = 0;
    if (text[0] == '-' || text[0] == '+') {
        neg = text[0] == '-';
        i = 1;
    }
    if (i == text.size()) throw DomainError("malformed integer '" + std::string(text) + "'");
    constexpr u128 limit = (static_cast<u128>(1) << 127) - 1;
    u128 v = 0;
    for (; i < text.size(); ++i) {
        const char ch = text[i];
        if (ch < '0' || ch > '9') throw DomainError("malformed integer '" + std::string(text) + "'");
        const auto digit = static_cast<u128>(ch - '0');
        if (v > (limit - digit) / 10) throw DomainError("integer out of range '" + std::string(text) + "'");
        v = v * 10 + digit;
    }
    return neg ? -static_cast<i128>(v) : static_cast<i128>(v);
}

i128 checked_pow(i128 base, unsigned exp) {
    i128 result = 1;
    for (unsigned k = 0; k < exp; ++k) {
        if (__builtin_mul_overflow(result, base, &result))
            throw DomainError("integer power overflows 128 bits");
    }
    return result;
}

} // namespace pslab
