#include "pslab/certified.hpp"

#include <gmp.h>

#include <algorithm>
#include <bit>
#include <cmath>

#include "pslab/log.hpp"

namespace pslab {

namespace {

int bit_length(i128 v) {
    const u128 mag = v < 0 ? static_cast<u128>(-(v + 1)) + 1 : static_cast<u128>(v);
    const auto hi = static_cast<std::uint64_t>(mag >> 64);
    if (hi != 0) return 128 - std::countl_zero(hi);
    return 64 - std::countl_zero(static_cast<std::uint64_t>(mag));
}

// Bits needed above the requested fractional precision: integer part of m^c
// plus slack for the exponent-interval widening below.
int working_bits(i128 m, const Exponent& c, int fractional_bits) {
    const int int_bits = static_cast<int>(std::ceil(bit_length(m) * std::max(1.0, c.approx()))) + 1;
    return fractional_bits + int_bits + 12;
}

// lo <= m^c <= hi for m >= 1, at the precision of lo/hi.
//
// m^c is increasing in c for m >= 1. The lower end is m^clo rounded down. The
// upper end is bounded without a second pow call:
//   m^chi = m^clo * exp((chi - clo) ln m) <= m^clo * (1 + 2 (chi - clo) ln m)
// since exp(x) <= 1 + 2x for 0 <= x <= 1, with ln m < 0.7 * bitlen(m).
void pow_bounds(mpfr_ptr lo, mpfr_ptr hi, i128 m, const Exponent& c) {
    const mpfr_prec_t w = mpfr_get_prec(lo);
    if (m == 1) {
        mpfr_set_ui(lo, 1, MPFR_RNDN);
        mpfr_set_ui(hi, 1, MPFR_RNDN);
        return;
    }
    BigFloat clo(w), chi(w), base(std::max<mpfr_prec_t>(w, 128));
    c.enclose(clo.get(), chi.get());
    set_i128(base.get(), m, MPFR_RNDN);
    const int inexact = mpfr_pow(lo, base.get(), clo.get(), MPFR_RNDD);
    mpfr_set(hi, lo, MPFR_RNDU);
    if (inexact != 0) mpfr_nextabove(hi);
    if (mpfr_equal_p(clo.get(), chi.get())) return;
    BigFloat slack(w);
    mpfr_sub(slack.get(), chi.get(), clo.get(), MPFR_RNDU);
    mpfr_mul_ui(slack.get(), slack.get(), static_cast<unsigned long>(bit_length(m)), MPFR_RNDU);
    mpfr_mul_d(slack.get(), slack.get(), 1.4, MPFR_RNDU);
    mpfr_add_ui(slack.get(), slack.get(), 1, MPFR_RNDU);
    mpfr_mul(hi, hi, slack.get(), MPFR_RNDU);
}

// Definite floor of [lo, hi], if any.
std::optional<i128> floor_of(mpfr_srcptr lo, mpfr_srcptr hi) {
    if (mpfr_equal_p(lo, hi)) return floor_to_i128(lo);
    const i128 flo = floor_to_i128(lo);
    const i128 fhi = floor_to_i128(hi);
    if (flo == fhi) return flo;
    return std::nullopt;
}

// floor((m^a)^(1/b)) by exact integer root; also reports exactness.
i128 exact_floor_pow(i128 m, const Exponent& c, bool* exact) {
    mpz_t v, r;
    mpz_inits(v, r, nullptr);
    const u128 mag = static_cast<u128>(m);
    mpz_set_ui(v, static_cast<unsigned long>(mag >> 64));
    mpz_mul_2exp(v, v, 64);
    mpz_add_ui(v, v, static_cast<unsigned long>(mag & UINT64_MAX));
    mpz_pow_ui(v, v, static_cast<unsigned long>(c.num()));
    const int is_exact = mpz_root(r, v, static_cast<unsigned long>(c.den()));
    if (exact != nullptr) *exact = is_exact != 0;
    if (mpz_sizeinbase(r, 2) > 126) {
        mpz_clears(v, r, nullptr);
        throw DomainError("floor of m^c exceeds 128 bits");
    }
    unsigned long long words[2] = {0, 0};
    std::size_t count = 0;
    mpz_export(words, &count, -1, sizeof(unsigned long long), 0, 0, r);
    mpz_clears(v, r, nullptr);
    return static_cast<i128>((static_cast<u128>(words[1]) << 64) | words[0]);
}

void require_positive(i128 m, const char* what) {
    if (m < 1) throw DomainError(std::string(what) + " must be >= 1");
}

} // namespace

CertifiedValue::CertifiedValue(BigFloat lo, BigFloat hi, int precision_bits)
    : lo_(std::move(lo)), hi_(std::move(hi)), precision_bits_(precision_bits) {
    if (mpfr_greater_p(lo_.get(), hi_.get())) throw std::logic_error("CertifiedValue with lo > hi");
}

CertifiedValue CertifiedValue::point(double v, int precision_bits) {
    BigFloat lo(std::max(precision_bits, 64)), hi(std::max(precision_bits, 64));
    mpfr_set_d(lo.get(), v, MPFR_RNDN);
    mpfr_set_d(hi.get(), v, MPFR_RNDN);
    return {std::move(lo), std::move(hi), precision_bits};
}

double CertifiedValue::mid() const {
    BigFloat m(std::max(lo_.precision(), hi_.precision()) + 1);
    mpfr_add(m.get(), lo_.get(), hi_.get(), MPFR_RNDN);
    mpfr_div_2ui(m.get(), m.get(), 1, MPFR_RNDN);
    return m.to_double();
}

double CertifiedValue::width() const {
    BigFloat w(std::max(lo_.precision(), hi_.precision()));
    mpfr_sub(w.get(), hi_.get(), lo_.get(), MPFR_RNDU);
    return w.to_double(MPFR_RNDU);
}

bool CertifiedValue::contains(mpfr_srcptr x) const {
    return mpfr_lessequal_p(lo_.get(), x) && mpfr_lessequal_p(x, hi_.get());
}

bool CertifiedValue::is_point() const { return mpfr_equal_p(lo_.get(), hi_.get()); }

std::optional<i128> CertifiedValue::definite_floor() const { return floor_of(lo_.get(), hi_.get()); }

CertifiedValue pow_enclosure(i128 m, const Exponent& c, int precision_bits, const PrecisionPolicy& policy) {
    require_positive(m, "m");
    if (precision_bits < 1) throw DomainError("precision_bits must be positive");
    // Relative width after pow_bounds is below 2^-w * (2 + 1.4 * c * bitlen(m)).
    const double spread = 2.0 + 1.4 * std::max(1.0, c.approx()) * bit_length(m);
    const int guard = static_cast<int>(std::ceil(std::log2(spread))) + 2;
    const int w = precision_bits + guard;
    if (w > policy.cap_bits) {
        BigFloat lo(policy.cap_bits), hi(policy.cap_bits);
        pow_bounds(lo.get(), hi.get(), m, c);
        throw PrecisionCapExceeded("pow_enclosure: " + std::to_string(precision_bits) +
                                       " bits requested, cap is " + std::to_string(policy.cap_bits),
                                   CertifiedValue(std::move(lo), std::move(hi), policy.cap_bits));
    }
    BigFloat lo(w), hi(w);
    pow_bounds(lo.get(), hi.get(), m, c);
    return {std::move(lo), std::move(hi), precision_bits};
}

std::optional<CertifiedValue> frac_pow_at(i128 m, const Exponent& c, int bits) {
    const int w = working_bits(m, c, bits);
    BigFloat lo(w), hi(w);
    pow_bounds(lo.get(), hi.get(), m, c);
    const auto fl = floor_of(lo.get(), hi.get());
    if (!fl) return std::nullopt;
    BigFloat f(w + 8);
    set_i128(f.get(), *fl, MPFR_RNDN);
    mpfr_sub(lo.get(), lo.get(), f.get(), MPFR_RNDD);
    mpfr_sub(hi.get(), hi.get(), f.get(), MPFR_RNDU);
    return CertifiedValue(std::move(lo), std::move(hi), bits);
}

FloorResult certified_floor_pow(i128 m, const Exponent& c, const PrecisionPolicy& policy) {
    require_positive(m, "m");
    int bits = policy.start_bits;
    for (;;) {
        const int w = working_bits(m, c, bits);
        BigFloat lo(w), hi(w);
        pow_bounds(lo.get(), hi.get(), m, c);
        if (const auto fl = floor_of(lo.get(), hi.get())) return {fl, bits, false};
        if (bits >= policy.cap_bits) break;
        log_escalation("floor", m, c, bits);
        bits = std::min(bits * 2, policy.cap_bits);
    }
    if (c.is_rational()) return {exact_floor_pow(m, c, nullptr), bits, true};
    log_indeterminate("floor", m, c, bits);
    return {std::nullopt, bits, false};
}

i128 floor_pow(i128 m, const Exponent& c, const PrecisionPolicy& policy) {
    const FloorResult r = certified_floor_pow(m, c, policy);
    if (!r.value)
        throw IndeterminateError("[m^c] undecided at " + std::to_string(r.achieved_precision) +
                                 " bits for m=" + to_string(m) + ", c=" + c.to_string());
    return *r.value;
}

CertifiedValue frac_pow(i128 m, const Exponent& c, const PrecisionPolicy& policy) {
    require_positive(m, "m");
    int bits = policy.start_bits;
    for (;;) {
        if (auto f = frac_pow_at(m, c, bits)) return std::move(*f);
        if (bits >= policy.cap_bits) break;
        log_escalation("frac", m, c, bits);
        bits = std::min(bits * 2, policy.cap_bits);
    }
    if (!c.is_rational())
        throw IndeterminateError("{m^c} undecided at cap for m=" + to_string(m) + ", c=" + c.to_string());
    // The enclosure straddles an integer even at the cap; the exact root decides.
    bool exact = false;
    const i128 fl = exact_floor_pow(m, c, &exact);
    const int w = working_bits(m, c, bits);
    BigFloat lo(w), hi(w);
    if (exact) return {std::move(lo), std::move(hi), bits};
    pow_bounds(lo.get(), hi.get(), m, c);
    BigFloat f(w + 8);
    set_i128(f.get(), fl, MPFR_RNDN);
    mpfr_sub(lo.get(), lo.get(), f.get(), MPFR_RNDD);
    mpfr_sub(hi.get(), hi.get(), f.get(), MPFR_RNDU);
    if (mpfr_sgn(lo.get()) < 0) mpfr_set_zero(lo.get(), 1);
    if (mpfr_cmp_ui(hi.get(), 1) > 0) mpfr_set_ui(hi.get(), 1, MPFR_RNDU);
    return {std::move(lo), std::move(hi), bits};
}

i128 ceil_root(i128 t, const Exponent& c, const PrecisionPolicy& policy) {
    if (t <= 1) return 1;
    double est = std::ceil(std::pow(static_cast<double>(t), 1.0 / c.approx()));
    i128 m = est < 1.0 ? 1 : static_cast<i128>(est);
    while (m > 1 && floor_pow(m - 1, c, policy) >= t) --m;
    while (floor_pow(m, c, policy) < t) ++m;
    return m;
}

std::optional<ResidualEnclosure> residual_power_at(i128 n, i128 p, const Exponent& c, int bits) {
    const int w = working_bits(std::max(n, p), c, bits) + bit_length(n);
    BigFloat plo(w), phi(w);
    pow_bounds(plo.get(), phi.get(), p, c);
    BigFloat nn(w), blo(w), bhi(w);
    set_i128(nn.get(), n, MPFR_RNDN);
    mpfr_sub(blo.get(), nn.get(), phi.get(), MPFR_RNDD);
    mpfr_sub(bhi.get(), nn.get(), plo.get(), MPFR_RNDU);
    if (mpfr_sgn(bhi.get()) <= 0)
        throw DomainError("residual_power: p^c >= n for n=" + to_string(n) + ", p=" + to_string(p));
    if (mpfr_sgn(blo.get()) <= 0) return std::nullopt;

    BigFloat glo(w), ghi(w);
    c.enclose_gamma(glo.get(), ghi.get());
    BigFloat lo(w), hi(w);
    // x^g is increasing in g for x >= 1 and decreasing for x < 1.
    mpfr_pow(lo.get(), blo.get(), mpfr_cmp_ui(blo.get(), 1) >= 0 ? glo.get() : ghi.get(), MPFR_RNDD);
    mpfr_pow(hi.get(), bhi.get(), mpfr_cmp_ui(bhi.get(), 1) >= 0 ? ghi.get() : glo.get(), MPFR_RNDU);
    const auto fl = floor_of(lo.get(), hi.get());
    if (!fl) return std::nullopt;
    BigFloat flo(lo), fhi(hi), f(w + 8);
    set_i128(f.get(), *fl, MPFR_RNDN);
    mpfr_sub(flo.get(), flo.get(), f.get(), MPFR_RNDD);
    mpfr_sub(fhi.get(), fhi.get(), f.get(), MPFR_RNDU);
    return ResidualEnclosure{CertifiedValue(std::move(lo), std::move(hi), bits),
                             CertifiedValue(std::move(flo), std::move(fhi), bits)};
}

ResidualEnclosure residual_power(i128 n, i128 p, const Exponent& c, const PrecisionPolicy& policy) {
    require_positive(p, "p");
    require_positive(n, "n");
    int bits = policy.start_bits;
    for (;;) {
        if (auto r = residual_power_at(n, p, c, bits)) return std::move(*r);
        if (bits >= policy.cap_bits) break;
        log_escalation("residual", p, c, bits);
        bits = std::min(bits * 2, policy.cap_bits);
    }
    if (c.is_rational()) {
        // p^c integral: the residual is (n - k)^(b/a) of an integer, settled by exact roots.
        bool pc_exact = false;
        const i128 k = exact_floor_pow(p, c, &pc_exact);
        if (pc_exact) {
            if (k >= n) throw DomainError("residual_power: p^c >= n for n=" + to_string(n) + ", p=" + to_string(p));
            const Exponent g = Exponent::rational(c.den(), c.num());
            const CertifiedValue frac = frac_pow(n - k, g, policy);
            const CertifiedValue value = pow_enclosure(n - k, g, policy.start_bits, policy);
            return {value, frac};
        }
    }
    // Distinguish an undecidable n - p^c > 0 (domain) from an undecided floor.
    const int w = working_bits(std::max(n, p), c, bits) + bit_length(n);
    BigFloat plo(w), phi(w), nn(w);
    pow_bounds(plo.get(), phi.get(), p, c);
    set_i128(nn.get(), n, MPFR_RNDN);
    mpfr_sub(nn.get(), nn.get(), phi.get(), MPFR_RNDD);
    if (mpfr_sgn(nn.get()) <= 0)
        throw DomainError("residual_power: cannot decide p^c < n for n=" + to_string(n) + ", p=" + to_string(p));
    throw IndeterminateError("residual (n - p^c)^gamma undecided at cap for n=" + to_string(n) +
                             ", p=" + to_string(p) + ", c=" + c.to_string());
}

} // namespace pslab
