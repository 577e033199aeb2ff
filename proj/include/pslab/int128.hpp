#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

namespace pslab {

using i128 = __int128;
using u128 = unsigned __int128;

std::string to_string(i128 v);
std::string to_string(u128 v);

// Parses an optionally signed decimal integer; throws DomainError on junk or overflow.
i128 parse_i128(std::string_view text);

// Exact integer power; throws DomainError when the result does not fit in i128.
i128 checked_pow(i128 base, unsigned exp);

inline std::ostream& operator<<(std::ostream& os, i128 v) { return os << to_string(v); }

} // namespace pslab
