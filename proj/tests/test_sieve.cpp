#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pslab/errors.hpp"
#include "pslab/sieve.hpp"

using namespace pslab;

TEST_CASE("primes_in small ranges") {
    CHECK(primes_in(1, 10) == std::vector<std::uint64_t>{2, 3, 5, 7});
    CHECK(primes_in(10, 11) == std::vector<std::uint64_t>{11});
    CHECK(primes_in(0, 2) == std::vector<std::uint64_t>{2});
    CHECK(primes_in(2, 2).empty());
    CHECK(primes_in(13, 16).empty());
}

TEST_CASE("primes_in agrees with trial division") {
    auto check = [](std::uint64_t a, std::uint64_t b) {
        std::vector<std::uint64_t> ref;
        for (std::uint64_t n = a + 1; n <= b; ++n)
            if (oracle::is_prime_trial(n)) ref.push_back(n);
        CHECK(primes_in(a, b) == ref);
        CHECK(count_primes_in(a, b) == ref.size());
    };
    check(1000000, 1000100);
    check(0, 5000);
    // Crosses several sieve segments.
    check(999000, 1600000);
    check((std::uint64_t{1} << 34) - 3000, (std::uint64_t{1} << 34) + 3000);
}

TEST_CASE("primes_in rejects ranges beyond the cap") {
    CHECK_THROWS_AS(primes_in(1, 1001, 1000), DomainError);
    CHECK_NOTHROW(primes_in(1, 1000, 1000));
}

TEST_CASE("pi(10^6) from counting") {
    CHECK(count_primes_in(0, 1000000) == 78498);
}

TEST_CASE("ArithmeticTable Moebius and von Mangoldt") {
    const ArithmeticTable t(10000);
    for (std::uint64_t n = 1; n <= 10000; ++n) {
        // Oracle: factor by trial division.
        std::uint64_t r = n;
        int distinct = 0;
        bool square = false;
        std::uint64_t only = 0;
        for (std::uint64_t d = 2; d * d <= r; ++d) {
            if (r % d) continue;
            int e = 0;
            while (r % d == 0) { r /= d; ++e; }
            ++distinct;
            only = d;
            if (e > 1) square = true;
        }
        if (r > 1) { ++distinct; only = r; }
        const int mu = square ? 0 : (distinct % 2 ? -1 : 1);
        CHECK(t.mobius(n) == mu);
        const double lam = distinct == 1 ? std::log(static_cast<double>(only)) : 0.0;
        CHECK(t.mangoldt(n) == doctest::Approx(lam).epsilon(1e-14));
        CHECK(t.is_prime(n) == oracle::is_prime_trial(n));
    }
    CHECK_THROWS_AS(ArithmeticTable(1000, 100), BudgetError);
}
