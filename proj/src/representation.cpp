#include "pslab/representation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "pslab/log.hpp"
#include "pslab/sieve.hpp"

namespace pslab {

namespace {

int bit_length_u(u128 v) {
    const auto hi = static_cast<std::uint64_t>(v >> 64);
    if (hi != 0) return 128 - std::countl_zero(hi);
    return 64 - std::countl_zero(static_cast<std::uint64_t>(v));
}

ProblemParams derive_at(i128 n, i128 N, const Exponent& c, Variant variant, int bits, bool degenerate) {
    const int w = bits + 2 * bit_length_u(static_cast<u128>(N)) + 16;
    ProblemParams out;
    out.n = n;
    out.c = c;
    out.variant = variant;
    out.block_start = N;
    out.degenerate = degenerate;
    out.precision_bits = bits;

    BigFloat glo(w), ghi(w);
    c.enclose_gamma(glo.get(), ghi.get());

    BigFloat half(w);
    set_i128(half.get(), N, MPFR_RNDN);
    mpfr_div_2ui(half.get(), half.get(), 1, MPFR_RNDN);  // exact

    // N/2 >= 2, so (N/2)^g is increasing in g.
    BigFloat xlo(w), xhi(w);
    mpfr_pow(xlo.get(), half.get(), glo.get(), MPFR_RNDD);
    mpfr_pow(xhi.get(), half.get(), ghi.get(), MPFR_RNDU);

    BigFloat elo(w), ehi(w);
    if (variant == Variant::theorem2) {
        BigFloat llo(w), lhi(w), nn(w);
        set_i128(nn.get(), N, MPFR_RNDN);
        mpfr_log(llo.get(), nn.get(), MPFR_RNDD);
        mpfr_log(lhi.get(), nn.get(), MPFR_RNDU);
        mpfr_sqr(lhi.get(), lhi.get(), MPFR_RNDU);
        mpfr_sqr(llo.get(), llo.get(), MPFR_RNDD);
        mpfr_ui_div(elo.get(), 1, lhi.get(), MPFR_RNDD);
        mpfr_ui_div(ehi.get(), 1, llo.get(), MPFR_RNDU);
    }

    BigFloat x1lo(w), x1hi(w);
    if (variant == Variant::theorem2) {
        mpfr_add_ui(x1lo.get(), elo.get(), 1, MPFR_RNDD);
        mpfr_mul(x1lo.get(), x1lo.get(), xlo.get(), MPFR_RNDD);
        mpfr_add_ui(x1hi.get(), ehi.get(), 1, MPFR_RNDU);
        mpfr_mul(x1hi.get(), x1hi.get(), xhi.get(), MPFR_RNDU);
    } else {
        mpfr_mul_ui(x1lo.get(), xlo.get(), 5, MPFR_RNDD);
        mpfr_div_2ui(x1lo.get(), x1lo.get(), 2, MPFR_RNDD);
        mpfr_mul_ui(x1hi.get(), xhi.get(), 5, MPFR_RNDU);
        mpfr_div_2ui(x1hi.get(), x1hi.get(), 2, MPFR_RNDU);
    }

    // delta = gamma X^(1-c); 1 - c <= 0 and X >= 1, so X^(1-c) is decreasing in X
    // and increasing in the exponent.
    BigFloat clo(w), chi(w), one_minus_lo(w), one_minus_hi(w);
    c.enclose(clo.get(), chi.get());
    mpfr_ui_sub(one_minus_lo.get(), 1, chi.get(), MPFR_RNDD);
    mpfr_ui_sub(one_minus_hi.get(), 1, clo.get(), MPFR_RNDU);
    BigFloat dlo(w), dhi(w);
    mpfr_pow(dlo.get(), xhi.get(), one_minus_lo.get(), MPFR_RNDD);
    mpfr_pow(dhi.get(), xlo.get(), one_minus_hi.get(), MPFR_RNDU);
    mpfr_mul(dlo.get(), dlo.get(), glo.get(), MPFR_RNDD);
    mpfr_mul(dhi.get(), dhi.get(), ghi.get(), MPFR_RNDU);

    out.gamma = CertifiedValue(std::move(glo), std::move(ghi), bits);
    out.X = CertifiedValue(std::move(xlo), std::move(xhi), bits);
    out.X1 = CertifiedValue(std::move(x1lo), std::move(x1hi), bits);
    out.delta = CertifiedValue(std::move(dlo), std::move(dhi), bits);
    out.eta = CertifiedValue(std::move(elo), std::move(ehi), bits);
    return out;
}

ProblemParams derive_checked(i128 n, i128 N, const Exponent& c, Variant variant, const DeriveOptions& opts) {
    if (n < 4 || N < 4) throw DomainError("derive_params: n must be >= 4 (got " + to_string(n) + ")");
    if (c.approx() < 1.0 || c.approx() >= 2.0) throw DomainError("derive_params: exponent must satisfy 1 <= c < 2");
    const bool degenerate = opts.allow_degenerate_exponent && c.is_one();
    int bits = opts.precision_bits;
    for (;;) {
        ProblemParams p = derive_at(n, N, c, variant, bits, degenerate);
        if (degenerate) return p;
        if (mpfr_cmp_ui(p.delta.lo().get(), 1) >= 0)
            throw DomainError("derive_params: delta >= 1 for n=" + to_string(n) + ", c=" + c.to_string() +
                              " (n too small for the window criterion)");
        if (mpfr_cmp_ui(p.delta.hi().get(), 1) < 0) return p;
        if (bits >= opts.policy.cap_bits) break;
        bits = std::min(bits * 2, opts.policy.cap_bits);
    }
    throw DomainError("derive_params: cannot decide delta < 1 at the precision cap");
}

// p in (X, X1]: 1 yes, 0 no, -1 undecided.
int in_range(i128 p, const ProblemParams& params) {
    BigFloat pp(130);
    set_i128(pp.get(), p, MPFR_RNDN);
    const bool above_x = mpfr_greater_p(pp.get(), params.X.hi().get());
    const bool not_above_x = mpfr_lessequal_p(pp.get(), params.X.lo().get());
    const bool below_x1 = mpfr_lessequal_p(pp.get(), params.X1.lo().get());
    const bool above_x1 = mpfr_greater_p(pp.get(), params.X1.hi().get());
    if (not_above_x || above_x1) return 0;
    if (above_x && below_x1) return 1;
    return -1;
}

WindowClass classify(const CertifiedValue& v, const WindowInterval& w) {
    if (mpfr_lessequal_p(v.hi().get(), w.lo.lo().get()) || mpfr_greaterequal_p(v.lo().get(), w.hi.hi().get()))
        return WindowClass::out;
    if (mpfr_greater_p(v.lo().get(), w.lo.hi().get()) && mpfr_less_p(v.hi().get(), w.hi.lo().get()))
        return WindowClass::in;
    return WindowClass::uncertain;
}

CertifiedValue exact_point(double v, int bits) { return CertifiedValue::point(v, bits); }

// a + s * d for an enclosure d and exact rationals a, s = sn / sd (sd a power of two or small int).
CertifiedValue affine(long a, long sn, long sd, const CertifiedValue& d) {
    const auto w = std::max(d.lo().precision(), d.hi().precision()) + 8;
    BigFloat lo(w), hi(w);
    // s * d: sign of s decides which end maps where.
    if (sn >= 0) {
        mpfr_mul_si(lo.get(), d.lo().get(), sn, MPFR_RNDD);
        mpfr_mul_si(hi.get(), d.hi().get(), sn, MPFR_RNDU);
    } else {
        mpfr_mul_si(lo.get(), d.hi().get(), sn, MPFR_RNDD);
        mpfr_mul_si(hi.get(), d.lo().get(), sn, MPFR_RNDU);
    }
    mpfr_div_si(lo.get(), lo.get(), sd, MPFR_RNDD);
    mpfr_div_si(hi.get(), hi.get(), sd, MPFR_RNDU);
    mpfr_add_si(lo.get(), lo.get(), a, MPFR_RNDD);
    mpfr_add_si(hi.get(), hi.get(), a, MPFR_RNDU);
    return {std::move(lo), std::move(hi), d.precision_bits()};
}

// Product of two nonnegative enclosures.
CertifiedValue mul_pos(const CertifiedValue& a, const CertifiedValue& b) {
    const auto w = std::max(a.lo().precision(), b.lo().precision()) + 8;
    BigFloat lo(w), hi(w);
    mpfr_mul(lo.get(), a.lo().get(), b.lo().get(), MPFR_RNDD);
    mpfr_mul(hi.get(), a.hi().get(), b.hi().get(), MPFR_RNDU);
    return {std::move(lo), std::move(hi), a.precision_bits()};
}

// 1 - delta + s * eta * delta, s = +-1.
CertifiedValue one_minus_delta_plus(int s, const CertifiedValue& eta, const CertifiedValue& delta) {
    const CertifiedValue ed = mul_pos(eta, delta);
    const auto w = std::max(ed.lo().precision(), delta.lo().precision()) + 8;
    BigFloat lo(w), hi(w);
    mpfr_ui_sub(lo.get(), 1, delta.hi().get(), MPFR_RNDD);
    mpfr_ui_sub(hi.get(), 1, delta.lo().get(), MPFR_RNDU);
    if (s > 0) {
        mpfr_add(lo.get(), lo.get(), ed.lo().get(), MPFR_RNDD);
        mpfr_add(hi.get(), hi.get(), ed.hi().get(), MPFR_RNDU);
    } else {
        mpfr_sub(lo.get(), lo.get(), ed.hi().get(), MPFR_RNDD);
        mpfr_sub(hi.get(), hi.get(), ed.lo().get(), MPFR_RNDU);
    }
    return {std::move(lo), std::move(hi), delta.precision_bits()};
}

} // namespace

ProblemParams ProblemParams::at_precision(int bits) const {
    return derive_at(n, block_start, c, variant, bits, degenerate);
}

ProblemParams derive_params(i128 n, const Exponent& c, const DeriveOptions& opts) {
    return derive_checked(n, n, c, Variant::theorem1, opts);
}

ProblemParams derive_params_theorem2(i128 n, i128 N, const Exponent& c, const DeriveOptions& opts) {
    if (N < 4) throw DomainError("derive_params_theorem2: N must be >= 4");
    ProblemParams p = derive_checked(n, N, c, Variant::theorem2, opts);
    // N < n <= (1 + eta) N
    BigFloat nn(130), top(p.eta.hi().precision() + 130);
    set_i128(nn.get(), n, MPFR_RNDN);
    mpfr_add_ui(top.get(), p.eta.hi().get(), 1, MPFR_RNDU);
    BigFloat NN(130);
    set_i128(NN.get(), N, MPFR_RNDN);
    mpfr_mul(top.get(), top.get(), NN.get(), MPFR_RNDU);
    if (n <= N || mpfr_greater_p(nn.get(), top.get()))
        throw DomainError("derive_params_theorem2: n must lie in (N, (1 + eta) N]");
    return p;
}

WindowSpec WindowSpec::for_params(const ProblemParams& params) {
    WindowSpec w;
    w.kind = Kind::derived;
    w.variant = params.variant;
    const int bits = params.precision_bits;
    if (params.variant == Variant::theorem1) {
        w.frac_pc = {exact_point(0.0, bits), exact_point(0.5, bits)};
        w.residual = {affine(1, -5, 6, params.delta), affine(1, -2, 3, params.delta)};
    } else {
        w.frac_pc = {affine(0, 4, 1, params.eta), affine(1, -4, 1, params.eta)};
        w.residual = {one_minus_delta_plus(-1, params.eta, params.delta),
                      one_minus_delta_plus(+1, params.eta, params.delta)};
    }
    return w;
}

WindowSpec WindowSpec::explicit_windows(double frac_lo, double frac_hi, double res_lo, double res_hi) {
    if (!(0.0 <= frac_lo && frac_lo < frac_hi && frac_hi <= 1.0 && 0.0 <= res_lo && res_lo < res_hi && res_hi <= 1.0))
        throw DomainError("explicit windows must be nonempty subintervals of [0, 1]");
    WindowSpec w;
    w.kind = Kind::explicit_bounds;
    w.frac_pc = {exact_point(frac_lo, 64), exact_point(frac_hi, 64)};
    w.residual = {exact_point(res_lo, 64), exact_point(res_hi, 64)};
    return w;
}

std::vector<std::uint64_t> window_primes(const ProblemParams& params, const PrecisionPolicy& policy) {
    const double xlo = std::floor(params.X.lo_double());
    const double x1hi = std::ceil(params.X1.hi_double());
    const auto a = static_cast<std::uint64_t>(std::max(0.0, xlo - 1.0));
    const auto b = static_cast<std::uint64_t>(x1hi);
    std::vector<std::uint64_t> out;
    for (const std::uint64_t p : primes_in(a, b)) {
        int inside = in_range(static_cast<i128>(p), params);
        int bits = params.precision_bits;
        while (inside < 0 && bits < policy.cap_bits) {
            bits = std::min(bits * 2, policy.cap_bits);
            inside = in_range(static_cast<i128>(p), params.at_precision(bits));
        }
        if (inside < 0) throw DomainError("window_primes: cannot decide X < p <= X1 for p=" + std::to_string(p));
        if (inside == 1) out.push_back(p);
    }
    return out;
}

WindowOutcome check_window(i128 p, const ProblemParams& params, const WindowSpec& window,
                           const PrecisionPolicy& policy) {
    int bits = std::max(params.precision_bits, policy.start_bits);
    ProblemParams hp = bits == params.precision_bits ? params : params.at_precision(bits);
    WindowSpec hw = window.kind == WindowSpec::Kind::derived && bits != params.precision_bits
                        ? WindowSpec::for_params(hp)
                        : window;
    for (;;) {
        const int inside = in_range(p, hp);
        if (inside == 0)
            throw DomainError("check_window: p=" + to_string(p) + " is outside (X, X1] for n=" + to_string(params.n));
        if (inside == 1) {
            const auto f1 = frac_pow_at(p, params.c, bits);
            const WindowClass c1 = f1 ? classify(*f1, hw.frac_pc) : WindowClass::uncertain;
            if (c1 == WindowClass::out) return {WindowClass::out, bits};
            const auto r = residual_power_at(params.n, p, params.c, bits);
            const WindowClass c2 = r ? classify(r->frac, hw.residual) : WindowClass::uncertain;
            if (c2 == WindowClass::out) return {WindowClass::out, bits};
            if (c1 == WindowClass::in && c2 == WindowClass::in) return {WindowClass::in, bits};
        }
        if (bits >= policy.cap_bits) break;
        log_escalation("window", p, params.c, bits);
        bits = std::min(bits * 2, policy.cap_bits);
        hp = params.at_precision(bits);
        if (window.kind == WindowSpec::Kind::derived) hw = WindowSpec::for_params(hp);
    }
    log_uncertain(p, params.n, params.c, bits);
    return {WindowClass::uncertain, bits};
}

WindowTally count_window_primes(const ProblemParams& params, const WindowSpec& window, const PrecisionPolicy& policy) {
    WindowTally t;
    for (const std::uint64_t p : window_primes(params, policy)) {
        switch (check_window(static_cast<i128>(p), params, window, policy).kind) {
        case WindowClass::in: ++t.in; break;
        case WindowClass::out: ++t.out; break;
        case WindowClass::uncertain: ++t.uncertain; break;
        }
    }
    return t;
}

WindowSearch find_representation_window(i128 n, const Exponent& c, const PrecisionPolicy& policy) {
    const ProblemParams params = derive_params(n, c, {.policy = policy});
    const WindowSpec window = WindowSpec::for_params(params);
    WindowSearch result;
    for (const std::uint64_t pu : window_primes(params, policy)) {
        const auto p = static_cast<i128>(pu);
        const WindowOutcome o = check_window(p, params, window, policy);
        if (o.kind == WindowClass::out) {
            ++result.tally.out;
            continue;
        }
        if (o.kind == WindowClass::uncertain) {
            ++result.tally.uncertain;
            log_warn("find_representation_window: skipping uncertain prime p=" + to_string(p) + " for n=" + to_string(n));
            continue;
        }
        ++result.tally.in;
        const i128 t = n - floor_pow(p, c, policy);
        const i128 m = ceil_root(t, c, policy);
        if (floor_pow(m, c, policy) != t) {
            ++result.violations;
            continue;
        }
        result.representation = Representation{n, m, p, verify_representation(n, m, p, c, policy)};
        return result;
    }
    return result;
}

std::optional<Representation> find_representation_bruteforce(i128 n, const Exponent& c, const PrecisionPolicy& policy) {
    if (n < 2) return std::nullopt;
    constexpr std::uint64_t chunk = 1 << 15;
    for (std::uint64_t lo = 0;; lo += chunk) {
        for (const std::uint64_t pu : primes_in(lo, lo + chunk)) {
            const auto p = static_cast<i128>(pu);
            const i128 fp = floor_pow(p, c, policy);
            if (fp >= n) return std::nullopt;
            const i128 t = n - fp;
            const i128 m = ceil_root(t, c, policy);
            if (floor_pow(m, c, policy) == t) return Representation{n, m, p, true};
        }
    }
}

std::vector<Representation> all_representations_bruteforce(i128 n, const Exponent& c, const PrecisionPolicy& policy) {
    std::vector<Representation> out;
    for (i128 p = 2; floor_pow(p, c, policy) < n; ++p) {
        if (!is_prime_u64(static_cast<std::uint64_t>(p))) continue;
        const i128 fp = floor_pow(p, c, policy);
        for (i128 m = 1;; ++m) {
            const i128 fm = floor_pow(m, c, policy);
            if (fm + fp > n) break;
            if (fm + fp == n) out.push_back({n, m, p, true});
        }
    }
    return out;
}

bool verify_representation(i128 n, i128 m, i128 p, const Exponent& c, const PrecisionPolicy& policy) {
    if (m < 1) throw DomainError("verify_representation: m must be >= 1");
    if (p < 2 || !is_prime_u64(static_cast<std::uint64_t>(p)))
        throw DomainError("verify_representation: p=" + to_string(p) + " is not prime");
    return floor_pow(m, c, policy) + floor_pow(p, c, policy) == n;
}

CriterionAudit audit_window_criterion(const ProblemParams& params, const WindowSpec& window,
                                      const PrecisionPolicy& policy) {
    CriterionAudit audit;
    for (const std::uint64_t pu : window_primes(params, policy)) {
        const auto p = static_cast<i128>(pu);
        switch (check_window(p, params, window, policy).kind) {
        case WindowClass::out: ++audit.tally.out; continue;
        case WindowClass::uncertain: ++audit.tally.uncertain; continue;
        case WindowClass::in: ++audit.tally.in; break;
        }
        const i128 t = params.n - floor_pow(p, params.c, policy);
        const i128 m = ceil_root(t, params.c, policy);
        if (floor_pow(m, params.c, policy) != t) {
            ++audit.violations;
            audit.violating_primes.push_back(pu);
        }
    }
    return audit;
}

bool is_prime_u64(std::uint64_t n) {
    if (n < 2) return false;
    if (n % 2 == 0) return n == 2;
    if (n % 3 == 0) return n == 3;
    for (std::uint64_t d = 5; d * d <= n; d += 6)
        if (n % d == 0 || n % (d + 2) == 0) return false;
    return true;
}

} // namespace pslab
