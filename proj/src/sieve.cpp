#include "pslab/sieve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pslab/errors.hpp"

namespace pslab {

namespace {

constexpr std::uint64_t kSegmentBytes = std::uint64_t{1} << 18;

std::uint64_t isqrt(std::uint64_t v) {
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(v)));
    while (r * r > v) --r;
    while ((r + 1) * (r + 1) <= v) ++r;
    return r;
}

std::vector<std::uint32_t> small_primes(std::uint64_t limit) {
    std::vector<std::uint8_t> composite(limit + 1, 0);
    std::vector<std::uint32_t> out;
    for (std::uint64_t i = 2; i <= limit; ++i) {
        if (composite[i]) continue;
        out.push_back(static_cast<std::uint32_t>(i));
        for (std::uint64_t j = i * i; j <= limit; j += i) composite[j] = 1;
    }
    return out;
}

// Calls visit(p) for each prime in (a, b] in ascending order.
template <typename Visit>
void sieve_range(std::uint64_t a, std::uint64_t b, std::uint64_t cap, Visit&& visit) {
    if (b > cap) throw DomainError("primes_in: upper bound " + std::to_string(b) + " exceeds cap " + std::to_string(cap));
    if (a >= b) return;
    const auto base = small_primes(isqrt(b));
    std::vector<std::uint8_t> composite;
    for (std::uint64_t lo = a + 1; lo <= b; lo += kSegmentBytes) {
        const std::uint64_t hi = std::min(b, lo + kSegmentBytes - 1);
        composite.assign(hi - lo + 1, 0);
        for (const std::uint64_t p : base) {
            if (p * p > hi) break;
            std::uint64_t start = std::max(p * p, (lo + p - 1) / p * p);
            for (std::uint64_t j = start; j <= hi; j += p) composite[j - lo] = 1;
        }
        for (std::uint64_t n = std::max<std::uint64_t>(lo, 2); n <= hi; ++n)
            if (!composite[n - lo]) visit(n);
    }
}

} // namespace

std::vector<std::uint64_t> primes_in(std::uint64_t a, std::uint64_t b, std::uint64_t cap) {
    std::vector<std::uint64_t> out;
    if (b > a) out.reserve(static_cast<std::size_t>((b - a) / std::max(1.0, std::log(static_cast<double>(b))) * 1.3) + 16);
    sieve_range(a, b, cap, [&](std::uint64_t p) { out.push_back(p); });
    return out;
}

std::uint64_t count_primes_in(std::uint64_t a, std::uint64_t b, std::uint64_t cap) {
    std::uint64_t count = 0;
    sieve_range(a, b, cap, [&](std::uint64_t) { ++count; });
    return count;
}

ArithmeticTable::ArithmeticTable(std::uint64_t limit, std::uint64_t max_entries) : limit_(limit) {
    if (limit > max_entries)
        throw BudgetError("factorization table of " + std::to_string(limit) + " entries exceeds budget " +
                          std::to_string(max_entries));
    spf_.assign(limit + 1, 0);
    mu_.assign(limit + 1, 0);
    if (limit >= 1) mu_[1] = 1;
    std::vector<std::uint32_t> primes;
    for (std::uint64_t i = 2; i <= limit; ++i) {
        if (spf_[i] == 0) {
            spf_[i] = static_cast<std::uint32_t>(i);
            mu_[i] = -1;
            primes.push_back(static_cast<std::uint32_t>(i));
        }
        for (const std::uint32_t p : primes) {
            const std::uint64_t q = i * p;
            if (p > spf_[i] || q > limit) break;
            spf_[q] = p;
            mu_[q] = p == spf_[i] ? 0 : static_cast<std::int8_t>(-mu_[i]);
        }
    }
}

double ArithmeticTable::mangoldt(std::uint64_t n) const {
    if (n < 2) return 0.0;
    const std::uint32_t p = spf_[n];
    std::uint64_t m = n;
    while (m % p == 0) m /= p;
    return m == 1 ? std::log(static_cast<double>(p)) : 0.0;
}

} // namespace pslab
