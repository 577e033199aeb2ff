#include <doctest.h>

#include <mpfr.h>

#include <cmath>

#include "oracles.hpp"
#include "pslab/representation.hpp"
#include "pslab/sieve.hpp"

using namespace pslab;

namespace {

const Exponent c105 = Exponent::rational(21, 20);

// 200-bit round-to-nearest values of X, X1, delta for c = a/b.
struct RefParams {
    double X, X1, delta;
};

RefParams ref_params(std::uint64_t n, unsigned a, unsigned b) {
    mpfr_t x, t;
    mpfr_inits2(200, x, t, (mpfr_ptr)nullptr);
    // X = (n/2)^(b/a)
    mpfr_set_ui(x, n, MPFR_RNDN);
    mpfr_div_ui(x, x, 2, MPFR_RNDN);
    mpfr_pow_ui(x, x, b, MPFR_RNDN);
    mpfr_rootn_ui(x, x, a, MPFR_RNDN);
    RefParams r{};
    r.X = mpfr_get_d(x, MPFR_RNDN);
    r.X1 = 1.25 * r.X;
    // delta = (b/a) X^((a-b)/b) inverted: X^(1-c) = 1 / X^((a-b)/b)
    mpfr_pow_ui(t, x, a - b, MPFR_RNDN);
    mpfr_rootn_ui(t, t, b, MPFR_RNDN);
    mpfr_ui_div(t, b, t, MPFR_RNDN);
    mpfr_div_ui(t, t, a, MPFR_RNDN);
    r.delta = mpfr_get_d(t, MPFR_RNDN);
    mpfr_clears(x, t, (mpfr_ptr)nullptr);
    return r;
}

bool encloses(const CertifiedValue& v, double x) { return v.lo_double() <= x && x <= v.hi_double(); }

bool strictly_inside(double v, double lo, double hi, double margin) { return v > lo + margin && v < hi - margin; }

} // namespace

TEST_CASE("derive_params examples") {
    CHECK_THROWS_AS(derive_params(2, Exponent::rational(1, 1)), DomainError);
    CHECK_THROWS_AS(derive_params(2, Exponent::rational(1, 1), {.allow_degenerate_exponent = true}), DomainError);
    CHECK_THROWS_AS(derive_params(100, Exponent::rational(2, 1)), DomainError);
    CHECK_THROWS_AS(derive_params(100, Exponent::rational(9, 10)), DomainError);

    const auto p = derive_params(2000000, c105);
    const RefParams ref = ref_params(2000000, 21, 20);
    CHECK(encloses(p.X, ref.X));
    CHECK(encloses(p.delta, ref.delta));
    CHECK(p.X.width() < 1e-9);
    CHECK(p.X1.mid() == doctest::Approx(ref.X1).epsilon(1e-15));
    CHECK(encloses(p.gamma, 20.0 / 21.0));

    const auto q = derive_params(512, Exponent::rational(3, 2));
    // X^3 = 256^2 exactly.
    CHECK(q.X.lo_double() * q.X.lo_double() * q.X.lo_double() <= 65536.0 * (1 + 1e-15));
    CHECK(q.X.mid() == doctest::Approx(40.317473596635935).epsilon(1e-14));
    CHECK(q.delta.mid() == doctest::Approx(2.0 / 3.0 / std::sqrt(40.317473596635935)).epsilon(1e-14));
}

TEST_CASE("theorem2 parameters") {
    const std::uint64_t N = 1000000;
    const double eta = 1.0 / (std::log(1e6) * std::log(1e6));
    const auto p = derive_params_theorem2(N + 10, N, c105);
    CHECK(p.eta.mid() == doctest::Approx(eta).epsilon(1e-14));
    CHECK(p.X1.mid() == doctest::Approx((1 + eta) * p.X.mid()).epsilon(1e-14));
    const auto w = WindowSpec::for_params(p);
    CHECK(w.frac_pc.lo.mid() == doctest::Approx(4 * eta));
    CHECK(w.residual.hi.mid() == doctest::Approx(1 - p.delta.mid() + eta * p.delta.mid()));
    CHECK_THROWS_AS(derive_params_theorem2(N, N, c105), DomainError);
}

TEST_CASE("c = 1 degenerates: every prime is Out") {
    const Exponent one = Exponent::rational(1, 1);
    const auto p = derive_params(1000, one, {.allow_degenerate_exponent = true});
    const auto w = WindowSpec::for_params(p);
    for (const auto q : window_primes(p)) CHECK(check_window(static_cast<i128>(q), p, w).kind == WindowClass::out);
    CHECK(count_window_primes(p, w).in == 0);
}

TEST_CASE("explicit windows: {p^c} inside (0.6, 0.7) is Out") {
    const auto params = derive_params(2000000, c105);
    const auto w = WindowSpec::explicit_windows(0.0, 0.5, 0.0, 1.0);
    int seen = 0;
    for (const auto p : window_primes(params)) {
        const double f = oracle::frac_rational_pow(p, 21, 20);
        if (f > 0.6 && f < 0.7) {
            CHECK(check_window(static_cast<i128>(p), params, w).kind == WindowClass::out);
            if (++seen == 50) break;
        }
    }
    CHECK(seen == 50);
    CHECK_THROWS_AS(WindowSpec::explicit_windows(0.5, 0.4, 0, 1), DomainError);
}

TEST_CASE("check_window rejects primes outside (X, X1]") {
    const auto params = derive_params(2000000, c105);
    const auto w = WindowSpec::for_params(params);
    CHECK_THROWS_AS(check_window(2, params, w), DomainError);
    CHECK_THROWS_AS(check_window(10000019, params, w), DomainError);
}

TEST_CASE("window sweep matches a 200-bit oracle at n = 2e6, c = 1.05") {
    const std::uint64_t n = 2000000;
    const auto params = derive_params(n, c105);
    const auto w = WindowSpec::for_params(params);
    const RefParams ref = ref_params(n, 21, 20);
    const double rlo = 1 - 5.0 / 6.0 * ref.delta, rhi = 1 - 2.0 / 3.0 * ref.delta;

    const auto primes = window_primes(params);
    std::uint64_t ref_count = 0;
    for (std::uint64_t q = static_cast<std::uint64_t>(ref.X) + 1; q <= static_cast<std::uint64_t>(ref.X1); ++q)
        ref_count += oracle::is_prime_trial(q);
    CHECK(primes.size() == ref_count);

    WindowTally ref_tally;
    std::uint64_t disagreements = 0;
    const double margin = 1e-12;
    for (const auto p : primes) {
        const double f = oracle::frac_rational_pow(p, 21, 20);
        const double r = oracle::frac_residual(n, p, 21, 20);
        const bool in = strictly_inside(f, 0.0, 0.5, margin) && strictly_inside(r, rlo, rhi, margin);
        const bool near = std::abs(f) < margin || std::abs(f - 0.5) < margin || std::abs(r - rlo) < margin ||
                          std::abs(r - rhi) < margin;
        const auto got = check_window(static_cast<i128>(p), params, w).kind;
        if (near) continue;
        if ((got == WindowClass::in) != in) ++disagreements;
        if (in) ++ref_tally.in; else ++ref_tally.out;
    }
    CHECK(disagreements == 0);
    const WindowTally t = count_window_primes(params, w);
    CHECK(t.in == ref_tally.in);
    CHECK(t.uncertain == 0);
    CHECK(t.total() == primes.size());
}

TEST_CASE("full window tally equals pi(X1) - pi(X)") {
    for (const std::uint64_t n : {100000ull, 777777ull, 2000000ull}) {
        const auto params = derive_params(static_cast<i128>(n), c105);
        const auto t = count_window_primes(params, WindowSpec::explicit_windows(0, 1, 0, 1));
        const RefParams ref = ref_params(n, 21, 20);
        const auto expected = count_primes_in(static_cast<std::uint64_t>(ref.X), static_cast<std::uint64_t>(ref.X1));
        CHECK(t.in + t.uncertain + t.out == expected);
        // Only primes with {p^c} or residual fraction exactly 0 can be Out here.
        CHECK(t.out == 0);
    }
}

TEST_CASE("find_representation_window at n = 2e6, c = 1.05") {
    const auto s = find_representation_window(2000000, c105);
    REQUIRE(s.representation.has_value());
    const auto& r = *s.representation;
    CHECK(r.verified);
    CHECK(verify_representation(r.n, r.m, r.p, c105));
    const auto params = derive_params(2000000, c105);
    CHECK(static_cast<double>(r.p) > params.X.lo_double());
    CHECK(static_cast<double>(r.p) <= params.X1.hi_double());
    CHECK(check_window(r.p, params, WindowSpec::for_params(params)).kind == WindowClass::in);
    // Oracle: exact floors from integer roots.
    const auto fm = oracle::floor_rational_pow(static_cast<std::uint64_t>(r.m), 21, 20);
    const auto fp = oracle::floor_rational_pow(static_cast<std::uint64_t>(r.p), 21, 20);
    CHECK(fm + fp == 2000000);
    CHECK(s.violations == 0);
    CHECK(find_representation_bruteforce(2000000, c105).has_value());
}

TEST_CASE("window success implies brute-force success") {
    for (i128 n = 100000; n < 100000 + 300; ++n) {
        const auto s = find_representation_window(n, c105);
        if (s.representation) {
            CHECK(s.representation->verified);
            CHECK(find_representation_bruteforce(n, c105).has_value());
        }
    }
}

TEST_CASE("bruteforce examples") {
    const Exponent one = Exponent::rational(1, 1);
    const auto r5 = find_representation_bruteforce(5, one);
    REQUIRE(r5.has_value());
    CHECK(r5->p == 2);
    CHECK(r5->m == 3);

    // n = 4, c = 3/2 decided by exhaustive enumeration.
    const auto ach = oracle::achievable_exhaustive(3, 4, 3, 2);
    const auto r4 = find_representation_bruteforce(4, Exponent::rational(3, 2));
    CHECK(r4.has_value() == (ach.count(4) == 1));

    const auto ach100 = oracle::achievable_exhaustive(99, 100, 21, 20);
    const auto r100 = find_representation_bruteforce(100, c105);
    CHECK(ach100.count(100) == 1);
    REQUIRE(r100.has_value());
    CHECK(verify_representation(100, r100->m, r100->p, c105));
}

TEST_CASE("bruteforce agrees with exhaustive enumeration") {
    for (auto [a, b] : {std::pair{21u, 20u}, std::pair{3u, 2u}, std::pair{6u, 5u}}) {
        const Exponent c = Exponent::rational(a, b);
        const auto ach = oracle::achievable_exhaustive(1, 3000, a, b);
        for (std::uint64_t n = 2; n <= 3000; ++n) {
            const auto r = find_representation_bruteforce(static_cast<i128>(n), c);
            CHECK(r.has_value() == (ach.count(n) == 1));
            if (r) CHECK(verify_representation(r->n, r->m, r->p, c));
        }
        CHECK(all_representations_bruteforce(2000, c).empty() == (ach.count(2000) == 0));
    }
}

TEST_CASE("c = 1: every n >= 3 is representable") {
    const Exponent one = Exponent::rational(1, 1);
    for (i128 n = 3; n < 500; ++n) CHECK(find_representation_bruteforce(n, one).has_value());
    CHECK_FALSE(find_representation_bruteforce(2, one).has_value());
}

TEST_CASE("verify_representation") {
    const Exponent one = Exponent::rational(1, 1);
    CHECK(verify_representation(5, 2, 3, one));
    CHECK_FALSE(verify_representation(5, 2, 2, one));
    CHECK_THROWS_AS(verify_representation(5, 1, 4, one), DomainError);
    CHECK_THROWS_AS(verify_representation(5, 0, 3, one), DomainError);
    const Exponent real = Exponent::rational(4, 3).as_real();
    CHECK_THROWS_AS(verify_representation(18, 8, 2, real, {.start_bits = 64, .cap_bits = 256}), IndeterminateError);
}

TEST_CASE("criterion audit at sampled n") {
    for (i128 n : {100003, 250000, 1000001, 2000000}) {
        const auto params = derive_params(n, c105);
        const auto a = audit_window_criterion(params, WindowSpec::for_params(params));
        CHECK(a.violations == 0);
        CHECK(a.tally.in > 0);
    }
}
