#pragma once

#include <cstdint>
#include <vector>

namespace pslab {

// Largest upper bound accepted by primes_in.
inline constexpr std::uint64_t kDefaultSieveCap = std::uint64_t{1} << 40;

// Primes in (a, b], ascending, by a segmented sieve of Eratosthenes.
std::vector<std::uint64_t> primes_in(std::uint64_t a, std::uint64_t b,
                                     std::uint64_t cap = kDefaultSieveCap);

// pi(b) - pi(a) without materializing the list.
std::uint64_t count_primes_in(std::uint64_t a, std::uint64_t b, std::uint64_t cap = kDefaultSieveCap);

// Smallest-prime-factor table on [0, limit] with Moebius and von Mangoldt
// values derived from it. Built once by a linear sieve, then read-only.
class ArithmeticTable {
public:
    // Throws BudgetError when limit exceeds max_entries.
    explicit ArithmeticTable(std::uint64_t limit, std::uint64_t max_entries = std::uint64_t{1} << 27);

    std::uint64_t limit() const { return limit_; }
    std::uint32_t spf(std::uint64_t n) const { return spf_[n]; }
    bool is_prime(std::uint64_t n) const { return n >= 2 && spf_[n] == n; }
    int mobius(std::uint64_t n) const { return mu_[n]; }
    // log p if n = p^k, else 0.
    double mangoldt(std::uint64_t n) const;

private:
    std::uint64_t limit_;
    std::vector<std::uint32_t> spf_;
    std::vector<std::int8_t> mu_;
};

} // namespace pslab
