#include "pslab/expsum.hpp"

#include <gmp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>

#include "pslab/log.hpp"
#include "pslab/sieve.hpp"

namespace pslab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Enclosure width at which a fractional part is accepted into a phase table.
constexpr double kTableWidth = 0x1p-40;
// Rounding of a fractional part to the nearest double.
constexpr double kMidRounding = 0x1p-53;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void mpz_set_u128(mpz_t z, u128 v) {
    mpz_set_ui(z, static_cast<unsigned long>(v >> 64));
    mpz_mul_2exp(z, z, 64);
    mpz_add_ui(z, z, static_cast<unsigned long>(v & UINT64_MAX));
}

std::uint64_t mpz_get_u64_checked(const mpz_t z) {
    if (mpz_sizeinbase(z, 2) > 64) throw DomainError("value exceeds 64 bits");
    return mpz_get_ui(z);
}

// floor((num/den)^(1/root)).
std::uint64_t floor_ratio_root(mpz_t num, const mpz_t den, unsigned long root) {
    mpz_t r;
    mpz_init(r);
    mpz_fdiv_q(num, num, den);
    mpz_root(r, num, root);
    const std::uint64_t out = mpz_get_u64_checked(r);
    mpz_clear(r);
    return out;
}

// Calls fn(begin, end) over `workers` contiguous chunks of [0, count).
template <typename Fn>
void parallel_chunks(std::uint64_t count, unsigned workers, Fn&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::uint64_t>(count / 1024, 1))));
    if (workers == 1) {
        fn(std::uint64_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::uint64_t step = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::uint64_t b = std::min(count, w * step), e = std::min(count, b + step);
        pool.emplace_back([&, w, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

PhaseTable::PhaseTable(std::uint64_t lo, std::uint64_t hi, i128 n, const Exponent& c, bool with_residual,
                       const PrecisionPolicy& policy, unsigned workers)
    : lo_(lo), hi_(hi), n_(n), c_(c), with_residual_(with_residual) {
    if (hi <= lo) throw DomainError("PhaseTable: empty range");
    const std::uint64_t count = hi - lo;
    f1_.assign(count, 0.0);
    e1_.assign(count, 0.0);
    if (with_residual) {
        f2_.assign(count, 0.0);
        e2_.assign(count, 0.0);
    }
    parallel_chunks(count, workers, [&](std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) {
            const auto x = static_cast<i128>(lo + 1 + i);
            std::optional<CertifiedValue> f;
            std::optional<ResidualEnclosure> r;
            for (int bits = policy.start_bits;; bits = std::min(bits * 2, policy.cap_bits)) {
                f = frac_pow_at(x, c, bits);
                if (f && with_residual) r = residual_power_at(n, x, c, bits);
                const bool ok = f && f->width() <= kTableWidth && (!with_residual || (r && r->frac.width() <= kTableWidth));
                if (ok) break;
                if (bits >= policy.cap_bits) {
                    f = frac_pow(x, c, policy);
                    if (with_residual) r = residual_power(n, x, c, policy);
                    break;
                }
            }
            f1_[i] = f->mid();
            e1_[i] = f->width() + kMidRounding;
            if (with_residual) {
                f2_[i] = r->frac.mid();
                e2_[i] = r->frac.width() + kMidRounding;
            }
        }
    });
}

double PhaseTable::phase(std::uint64_t x, std::int64_t h, std::int64_t j) const {
    double v = static_cast<double>(h) * frac_pc(x);
    if (j != 0) v += static_cast<double>(j) * frac_residual(x);
    return v - std::floor(v);
}

double PhaseTable::phase_error(std::uint64_t x, std::int64_t h, std::int64_t j) const {
    const double ah = std::abs(static_cast<double>(h)), aj = std::abs(static_cast<double>(j));
    double e = ah * err_pc(x) + 4.0 * kMidRounding * (ah + aj + 1.0);
    if (j != 0) e += aj * err_residual(x);
    return e;
}

cplx PhaseTable::e(std::uint64_t x, std::int64_t h, std::int64_t j) const {
    return std::polar(1.0, kTwoPi * phase(x, h, j));
}

std::pair<std::uint64_t, std::uint64_t> integer_range(const ProblemParams& params) {
    if (params.variant != Variant::theorem1)
        throw DomainError("integer_range: only the theorem1 parameterization is supported");
    if (params.c.is_rational()) {
        // X^a = (n/2)^b and X1^a = (5/4)^a (n/2)^b, floors by exact roots.
        const auto a = static_cast<unsigned long>(params.c.num()), b = static_cast<unsigned long>(params.c.den());
        mpz_t nb, den, num;
        mpz_inits(nb, den, num, nullptr);
        mpz_set_u128(nb, static_cast<u128>(params.n));
        mpz_pow_ui(nb, nb, b);
        mpz_ui_pow_ui(den, 2, b);
        mpz_set(num, nb);
        const std::uint64_t fx = floor_ratio_root(num, den, a);
        mpz_ui_pow_ui(num, 5, a);
        mpz_mul(num, num, nb);
        mpz_ui_pow_ui(nb, 4, a);
        mpz_mul(den, den, nb);
        const std::uint64_t fx1 = floor_ratio_root(num, den, a);
        mpz_clears(nb, den, num, nullptr);
        return {fx, fx1};
    }
    for (int bits = params.precision_bits;; bits *= 2) {
        const ProblemParams p = bits == params.precision_bits ? params : params.at_precision(bits);
        const auto fx = p.X.definite_floor(), fx1 = p.X1.definite_floor();
        if (fx && fx1) return {static_cast<std::uint64_t>(*fx), static_cast<std::uint64_t>(*fx1)};
        if (bits >= 4096) throw IndeterminateError("integer_range: floor of X undecided at the cap");
    }
}

i128 target_for(std::uint64_t X, const Exponent& c) {
    if (c.is_rational()) {
        // floor(2 X^(a/b)) = floor((2^b X^a)^(1/b)).
        const auto a = static_cast<unsigned long>(c.num()), b = static_cast<unsigned long>(c.den());
        mpz_t v, one;
        mpz_inits(v, one, nullptr);
        mpz_set_ui(v, X);
        mpz_pow_ui(v, v, a);
        mpz_mul_2exp(v, v, b);
        mpz_set_ui(one, 1);
        const std::uint64_t out = floor_ratio_root(v, one, b);
        mpz_clears(v, one, nullptr);
        return static_cast<i128>(out);
    }
    for (int bits = 64;; bits *= 2) {
        const CertifiedValue v = pow_enclosure(static_cast<i128>(X), c, bits);
        BigFloat lo(v.lo()), hi(v.hi());
        mpfr_mul_2ui(lo.get(), lo.get(), 1, MPFR_RNDD);
        mpfr_mul_2ui(hi.get(), hi.get(), 1, MPFR_RNDU);
        if (const auto f = CertifiedValue(lo, hi, bits).definite_floor()) return *f;
        if (bits >= 2048) throw IndeterminateError("target_for: floor(2 X^c) undecided");
    }
}

ExpSumResult exp_sum(const ExpSumQuery& q, const PhaseTable& table) {
    if (q.h == 0 && q.j == 0 && !q.allow_zero_frequency)
        throw DomainError("exp_sum: (h, j) = (0, 0) is excluded");
    if (q.hi <= q.lo) throw DomainError("exp_sum: empty range");
    if (!table.contains(q.lo + 1) || !table.contains(q.hi)) throw DomainError("exp_sum: table does not cover the range");
    if (q.j != 0 && (!table.has_residual() || table.n() != q.n)) throw DomainError("exp_sum: table lacks the residual for this n");
    if (!(table.c() == q.c)) throw DomainError("exp_sum: table exponent differs");

    ExpSumResult r;
    auto add = [&](std::uint64_t x, double w) {
        r.value += w * table.e(x, q.h, q.j);
        r.weight += std::abs(w);
        r.max_phase_error = std::max(r.max_phase_error, kTwoPi * table.phase_error(x, q.h, q.j));
        ++r.terms;
    };
    switch (q.domain) {
    case SumDomain::primes:
        for (const std::uint64_t p : primes_in(q.lo, q.hi)) add(p, 1.0);
        break;
    case SumDomain::integers:
        for (std::uint64_t x = q.lo + 1; x <= q.hi; ++x) add(x, 1.0);
        break;
    case SumDomain::lambda_weighted: {
        const ArithmeticTable t(q.hi);
        for (std::uint64_t x = q.lo + 1; x <= q.hi; ++x)
            if (const double w = t.mangoldt(x); w != 0.0) add(x, w);
        break;
    }
    }
    if (r.max_phase_error > kPhaseBudget)
        throw IndeterminateError("exp_sum: per-term phase error " + std::to_string(r.max_phase_error) +
                                 " exceeds the budget");
    return r;
}

ExpSumResult exp_sum(const ExpSumQuery& q, const PrecisionPolicy& policy) {
    if (q.h == 0 && q.j == 0 && !q.allow_zero_frequency)
        throw DomainError("exp_sum: (h, j) = (0, 0) is excluded");
    if (q.hi <= q.lo) throw DomainError("exp_sum: empty range");
    const PhaseTable table(q.lo, q.hi, q.n, q.c, q.j != 0, policy);
    return exp_sum(q, table);
}

double lemma1_bound(double F, double N, double delta) {
    if (!(F >= 2.0 && F <= std::pow(N, 1.5)))
        throw DomainError("lemma1_bound: requires 2 <= F <= N^(3/2)");
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("lemma1_bound: requires 0 < delta <= 1");
    return (std::pow(F, 1.0 / 6.0) * std::sqrt(N) + std::pow(F, -1.0 / 3.0) * N) / std::sqrt(delta);
}

PhaseDerivatives phase_derivatives(double t, double x, double c) {
    if (!(t > 0.0)) throw DomainError("phase_derivatives: t must be positive");
    const double s = std::pow(t, c);
    if (!(s < 1.0)) throw DomainError("phase_derivatives: t^c must be < 1");
    const double g = 1.0 / c, u = 1.0 - s;
    PhaseDerivatives d{};
    d.alpha2 = (c - 1) * std::pow(t, c - 2) * (c * x - std::pow(u, g - 2));
    d.alpha3 = -(c - 1) * (2 * c - 1) * std::pow(t, 2 * c - 3) * std::pow(u, g - 3) + (c - 2) / t * d.alpha2;
    d.beta2 = (c - 1) * std::pow(t, c - 2) * (c * c * x - std::pow(u, g - 3) * (c + (c - 1) * s));
    d.beta3 = -(c - 1) * (2 * c - 1) * std::pow(t, 2 * c - 3) * std::pow(u, g - 4) * ((c - 1) * s + 2 * c) +
              (c - 2) / t * d.beta2;
    return d;
}

void write_reports_csv(std::ostream& os, const std::vector<BoundReport>& rows) {
    os << "schema_version,kind,params,measured,bound,ratio,terms,seconds\n";
    const auto prec = os.precision(17);
    for (const auto& r : rows) {
        os << 1 << ',' << r.kind << ',';
        for (std::size_t i = 0; i < r.params.size(); ++i) os << (i ? ";" : "") << r.params[i].first << '=' << r.params[i].second;
        os << ',' << r.measured << ',' << r.bound << ',' << r.ratio << ',' << r.terms << ',' << r.seconds << '\n';
    }
    os.precision(prec);
}

CoefficientFamily parse_family(const std::string& name) {
    if (name == "zero") return CoefficientFamily::zero;
    if (name == "constant") return CoefficientFamily::constant;
    if (name == "mobius") return CoefficientFamily::mobius;
    if (name == "random") return CoefficientFamily::random_unimodular;
    throw DomainError("unknown coefficient family '" + name + "' (zero, constant, mobius, random)");
}

std::string family_name(CoefficientFamily f) {
    switch (f) {
    case CoefficientFamily::zero: return "zero";
    case CoefficientFamily::constant: return "constant";
    case CoefficientFamily::mobius: return "mobius";
    case CoefficientFamily::random_unimodular: return "random";
    }
    return "?";
}

std::vector<cplx> coefficients(CoefficientFamily f, std::uint64_t lo, std::uint64_t hi, std::uint64_t seed) {
    std::vector<cplx> out(hi > lo ? hi - lo : 0);
    switch (f) {
    case CoefficientFamily::zero: break;
    case CoefficientFamily::constant: std::fill(out.begin(), out.end(), cplx(1.0)); break;
    case CoefficientFamily::mobius: {
        const ArithmeticTable t(hi);
        for (std::uint64_t m = lo + 1; m <= hi; ++m) out[m - lo - 1] = static_cast<double>(t.mobius(m));
        break;
    }
    case CoefficientFamily::random_unimodular:
        for (std::uint64_t m = lo + 1; m <= hi; ++m) {
            const double u = static_cast<double>(splitmix64(seed ^ splitmix64(m)) >> 11) * 0x1p-53;
            out[m - lo - 1] = std::polar(1.0, kTwoPi * u);
        }
        break;
    }
    return out;
}

namespace {

void check_bilinear(const BilinearQuery& q) {
    if (q.M < 1 || q.K < 1) throw DomainError("bilinear: M, K must be >= 1");
    if (q.M1 < q.M || q.M1 > 2 * q.M) throw DomainError("bilinear: need M <= M1 <= 2M");
    if (q.K1 < q.K || q.K1 > 2 * q.K) throw DomainError("bilinear: need K <= K1 <= 2K");
    if (q.X1 <= q.X) throw DomainError("bilinear: need X < X1");
    const long double terms = static_cast<long double>(q.M1 - q.M) * static_cast<long double>(q.K1 - q.K);
    if (terms > static_cast<long double>(q.term_budget))
        throw BudgetError("bilinear: " + std::to_string(static_cast<double>(terms)) + " terms exceed the budget of " +
                          std::to_string(q.term_budget));
}

// k range with X < mk <= X1 and K < k <= K1, as [first, last].
std::pair<std::uint64_t, std::uint64_t> k_range(std::uint64_t m, std::uint64_t K, std::uint64_t K1, std::uint64_t X,
                                                std::uint64_t X1) {
    return {std::max(K + 1, X / m + 1), std::min(K1, X1 / m)};
}

} // namespace

BilinearResult bilinear_sum(const BilinearQuery& q, const PhaseTable& table) {
    check_bilinear(q);
    if (q.M1 == q.M || q.K1 == q.K) return {};
    if (!table.contains(q.X + 1) || !table.contains(q.X1)) throw DomainError("bilinear: table does not cover (X, X1]");
    if (q.j != 0 && (!table.has_residual() || table.n() != q.n)) throw DomainError("bilinear: table lacks the residual");
    const auto a = coefficients(q.a, q.M, q.M1, q.seed);
    const auto b = coefficients(q.b, q.K, q.K1, q.seed + 1);
    BilinearResult r;
    for (std::uint64_t m = q.M + 1; m <= q.M1; ++m) {
        const cplx am = a[m - q.M - 1];
        const auto [k0, k1] = k_range(m, q.K, q.K1, q.X, q.X1);
        cplx inner = 0.0;
        for (std::uint64_t k = k0; k <= k1; ++k) {
            inner += b[k - q.K - 1] * table.e(m * k, q.h, q.j);
            ++r.terms;
        }
        r.value += am * inner;
    }
    return r;
}

BilinearResult bilinear_sum(const BilinearQuery& q, const PrecisionPolicy& policy) {
    check_bilinear(q);
    if (q.M1 == q.M || q.K1 == q.K) return {};
    const PhaseTable table(q.X, q.X1, q.n, q.c, q.j != 0, policy);
    return bilinear_sum(q, table);
}

WeylReport weyl_shift_sum(const BilinearQuery& q, std::uint64_t Q, double eps, const PrecisionPolicy& policy) {
    check_bilinear(q);
    if (Q < 1) throw DomainError("weyl_shift_sum: Q must be >= 1");
    if (static_cast<double>(Q) > static_cast<double>(q.K) * std::pow(static_cast<double>(q.X), -eps))
        throw DomainError("weyl_shift_sum: requires Q <= K X^-eps");
    const PhaseTable table(q.X, q.X1, q.n, q.c, q.j != 0, policy);
    WeylReport w;
    const BilinearResult s = bilinear_sum(q, table);
    w.lhs = std::norm(s.value);
    w.terms = s.terms;

    const auto Qi = static_cast<std::int64_t>(Q);
    double weighted = 0.0;
    for (std::int64_t sh = -Qi; sh <= Qi; ++sh) {
        double total = 0.0;
        for (std::uint64_t k = q.K + 1; k <= q.K1; ++k) {
            const auto kq = static_cast<std::int64_t>(k) + sh;
            if (kq <= static_cast<std::int64_t>(q.K) || kq > static_cast<std::int64_t>(q.K1)) continue;
            const auto k2 = static_cast<std::uint64_t>(kq);
            // I(k, q): X < mk, m(k + q) <= X1 within (M, M1].
            const auto [a0, a1] = k_range(k, q.M, q.M1, q.X, q.X1);
            const auto [b0, b1] = k_range(k2, q.M, q.M1, q.X, q.X1);
            const std::uint64_t m0 = std::max(a0, b0), m1 = std::min(a1, b1);
            cplx inner = 0.0;
            for (std::uint64_t m = m0; m <= m1; ++m)
                inner += table.e(m * k2, q.h, q.j) * std::conj(table.e(m * k, q.h, q.j));
            total += std::abs(inner);
        }
        if (sh == 0) w.zero_shift = total;
        else w.shifted_total += total;
        if (std::abs(sh) < Qi) weighted += (1.0 - std::abs(static_cast<double>(sh)) / static_cast<double>(Q)) * total;
    }
    const double X = static_cast<double>(q.X), Qd = static_cast<double>(Q);
    w.rhs_standard = X * X / Qd + X / Qd * w.shifted_total;
    w.rhs_explicit = static_cast<double>(q.M1 - q.M) * (1.0 + static_cast<double>(q.K1 - q.K) / Qd) * weighted;
    w.fitted_constant = w.lhs / w.rhs_standard;
    w.delta0 = std::pow(X, -eps / 10.0);
    if (q.j != 0) {
        // g(m) = f(m(k + q)) - f(mk), f(u) = y alpha(u / T), so
        // g'''(m) = y T^-3 ((k + q)^3 alpha'''(m(k + q)/T) - k^3 alpha'''(mk/T)).
        const double cd = q.c.approx(), nd = static_cast<double>(q.n);
        const double T = std::pow(nd, 1.0 / cd), y = static_cast<double>(q.j) * T;
        const double xp = static_cast<double>(q.h) * nd / y;
        const double M = static_cast<double>(q.M);
        const std::uint64_t kstep = std::max<std::uint64_t>(1, (q.K1 - q.K) / 32);
        const std::uint64_t mstep = std::max<std::uint64_t>(1, (q.M1 - q.M) / 32);
        double lo = INFINITY, hi = 0.0;
        for (std::int64_t sh = 1; sh <= Qi; ++sh)
            for (std::uint64_t k = q.K + 1; k + static_cast<std::uint64_t>(sh) <= q.K1; k += kstep) {
                const std::uint64_t k2i = k + static_cast<std::uint64_t>(sh);
                const std::uint64_t m0 = std::max(k_range(k, q.M, q.M1, q.X, q.X1).first, k_range(k2i, q.M, q.M1, q.X, q.X1).first);
                const std::uint64_t m1 = std::min(k_range(k, q.M, q.M1, q.X, q.X1).second, k_range(k2i, q.M, q.M1, q.X, q.X1).second);
                for (std::uint64_t m = m0; m <= m1; m += mstep) {
                    const double k2 = static_cast<double>(k2i), kd = static_cast<double>(k);
                    const double md = static_cast<double>(m);
                    const double g3 = y / (T * T * T) *
                                      (k2 * k2 * k2 * phase_derivatives(md * k2 / T, xp, cd).alpha3 -
                                       kd * kd * kd * phase_derivatives(md * kd / T, xp, cd).alpha3);
                    const double ratio = std::abs(g3) / (std::abs(static_cast<double>(sh) * y) / (X * M * M));
                    lo = std::min(lo, ratio);
                    hi = std::max(hi, ratio);
                }
            }
        if (hi > 0.0) {
            w.g3_ratio_min = lo;
            w.g3_ratio_max = hi;
        }
    }
    return w;
}

SDeltaReport sdelta_count(std::uint64_t X, std::uint64_t X1, const Exponent& c, double delta,
                          const PrecisionPolicy& policy, unsigned workers) {
    if (!(X >= 2 && X < X1 && X1 <= 2 * X)) throw DomainError("sdelta_count: requires 2 <= X < X1 <= 2X");
    if (!(delta > 0.0 && delta < 0.25)) throw DomainError("sdelta_count: requires 0 < delta < 1/4");
    const std::uint64_t count = X1 - X;
    const unsigned nw = std::max(1u, workers);
    std::vector<std::uint64_t> hits(nw, 0), undecided(nw, 0);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
    const std::uint64_t step = (count + nw - 1) / nw;
    for (unsigned w = 0; w < nw; ++w) spans.emplace_back(std::min(count, w * step), std::min(count, (w + 1) * step));
    auto work = [&](unsigned w) {
        BigFloat d(128), one_minus(128);
        mpfr_set_d(d.get(), delta, MPFR_RNDN);
        mpfr_ui_sub(one_minus.get(), 1, d.get(), MPFR_RNDN);  // exact at 128 bits
        for (std::uint64_t i = spans[w].first; i < spans[w].second; ++i) {
            const auto x = static_cast<i128>(X + 1 + i);
            // 1: ||x^c|| < delta, 0: not, -1: undecided.
            auto decide = [&](const CertifiedValue& f) {
                if (mpfr_less_p(f.hi().get(), d.get()) || mpfr_greater_p(f.lo().get(), one_minus.get())) return 1;
                if (mpfr_greaterequal_p(f.lo().get(), d.get()) && mpfr_lessequal_p(f.hi().get(), one_minus.get())) return 0;
                return -1;
            };
            int verdict = -1;
            for (int bits = policy.start_bits; verdict < 0; bits = std::min(bits * 2, policy.cap_bits)) {
                if (const auto f = frac_pow_at(x, c, bits)) verdict = decide(*f);
                if (verdict < 0 && bits >= policy.cap_bits) {
                    try {
                        verdict = decide(frac_pow(x, c, policy));
                    } catch (const IndeterminateError&) {
                    }
                    break;
                }
            }
            if (verdict < 0) {
                log_info("sdelta: ||x^c|| < delta undecided at cap for x=" + to_string(x));
                ++undecided[w];
            } else {
                hits[w] += static_cast<std::uint64_t>(verdict);
            }
        }
    };
    if (nw == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nw; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    SDeltaReport r;
    for (unsigned w = 0; w < nw; ++w) {
        r.count += hits[w];
        r.undecided += undecided[w];
    }
    const double Xd = static_cast<double>(X);
    r.bound = delta * static_cast<double>(X1 - X) + std::pow(Xd, c.approx() / 2.0) / std::sqrt(delta);
    r.ratio = static_cast<double>(r.count) / r.bound;
    return r;
}

VaughanResult vaughan_decompose(std::uint64_t X, std::uint64_t X1, std::int64_t h, std::int64_t j, i128 n,
                                const Exponent& c, std::uint64_t u, std::uint64_t v, const PrecisionPolicy& policy,
                                unsigned workers, std::uint64_t table_budget) {
    if (!(X >= 2 && X < X1)) throw DomainError("vaughan: requires 2 <= X < X1");
    if (u < 2 || v < 2 || u * v > X) throw DomainError("vaughan: requires u, v >= 2 and uv <= X");
    const ArithmeticTable arith(X1, table_budget);
    const PhaseTable table(X, X1, n, c, j != 0, policy, workers);
    std::vector<cplx> E(X1 - X);
    for (std::uint64_t m = X + 1; m <= X1; ++m) E[m - X - 1] = table.e(m, h, j);
    auto e = [&](std::uint64_t m) { return E[m - X - 1]; };

    VaughanResult r;
    r.X = X;
    r.X1 = X1;
    r.u = u;
    r.v = v;
    for (std::uint64_t m = X + 1; m <= X1; ++m)
        if (const double w = arith.mangoldt(m); w != 0.0) r.direct += w * e(m);

    const std::uint64_t y = v, z = u;  // Moebius and Lambda cutoffs
    // Emits one component per dyadic block (2^i, 2^(i+1)] of the outer variable.
    auto blocks = [&](VaughanComponent::Type type, std::uint64_t first, std::uint64_t last, auto&& outer_term) {
        for (std::uint64_t B = 1; B / 2 < last; B *= 2) {
            const std::uint64_t lo = std::max(first, B / 2 + 1), hi = std::min(last, B);
            if (lo > hi) continue;
            VaughanComponent comp{type, lo - 1, hi, X / hi, X1 / lo, 0.0};
            bool any = false;
            for (std::uint64_t m = lo; m <= hi; ++m) any |= outer_term(m, comp.value);
            if (any) r.components.push_back(comp);
        }
    };

    // Type I with log weight: sum_{b <= y} mu(b) sum_k log k e(f(bk)).
    blocks(VaughanComponent::Type::type1_log, 1, std::min(y, X1), [&](std::uint64_t b, cplx& acc) {
        const int mu = arith.mobius(b);
        if (mu == 0) return false;
        cplx inner = 0.0;
        for (std::uint64_t k = X / b + 1; k <= X1 / b; ++k) inner += std::log(static_cast<double>(k)) * e(b * k);
        acc += static_cast<double>(mu) * inner;
        return true;
    });

    // Type I: a_m = sum_{bc = m, b <= y, c <= z} mu(b) Lambda(c), inner weight 1.
    const std::uint64_t amax = std::min(y * z, X1);
    std::vector<double> a(amax + 1, 0.0);
    for (std::uint64_t b = 1; b <= y; ++b) {
        if (arith.mobius(b) == 0) continue;
        for (std::uint64_t cc = 2; cc <= z && b * cc <= amax; ++cc)
            if (const double l = arith.mangoldt(cc); l != 0.0) a[b * cc] += arith.mobius(b) * l;
    }
    blocks(VaughanComponent::Type::type1, 1, amax, [&](std::uint64_t m, cplx& acc) {
        if (a[m] == 0.0) return false;
        cplx inner = 0.0;
        for (std::uint64_t k = X / m + 1; k <= X1 / m; ++k) inner += e(m * k);
        acc += a[m] * inner;
        return true;
    });

    // Type II: a_m = Lambda(m) for m > z, b_k = sum_{d | k, d > y} mu(d) = [k = 1] - sum_{d | k, d <= y} mu(d).
    const std::uint64_t kmax = X1 / (z + 1);
    std::vector<int> bk(kmax + 1, 0);
    for (std::uint64_t d = 1; d <= std::min(y, kmax); ++d)
        if (const int mu = arith.mobius(d); mu != 0)
            for (std::uint64_t k = d; k <= kmax; k += d) bk[k] -= mu;
    if (kmax >= 1) bk[1] += 1;
    const std::uint64_t emax = X1 / (y + 1);
    blocks(VaughanComponent::Type::type2, z + 1, emax, [&](std::uint64_t m, cplx& acc) {
        const double l = arith.mangoldt(m);
        if (l == 0.0) return false;
        cplx inner = 0.0;
        bool any = false;
        for (std::uint64_t k = X / m + 1; k <= X1 / m; ++k)
            if (bk[k] != 0) {
                inner += static_cast<double>(bk[k]) * e(m * k);
                any = true;
            }
        acc += l * inner;
        return any;
    });

    for (const auto& comp : r.components)
        r.recombined += comp.type == VaughanComponent::Type::type1 ? -comp.value : comp.value;
    return r;
}

std::vector<BoundReport> bound_sweep(std::uint64_t X, const Exponent& c, double eps, const PrecisionPolicy& policy,
                                     unsigned workers) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("bound_sweep: eps must lie in (0, 1)");
    if (X < 8) throw DomainError("bound_sweep: X too small");
    const double cd = c.approx();
    if (cd < 16.0 / 15.0 && !(eps < 0.5 * (16.0 / 15.0 - cd)))
        log_warn("bound_sweep: eps violates 0 < eps < (16/15 - c)/2; proceeding");
    const std::uint64_t X1 = 5 * X / 4;
    const i128 n = target_for(X, c);
    const double Xd = static_cast<double>(X);
    const auto H = static_cast<std::int64_t>(std::floor(std::pow(Xd, eps)));
    const auto J = static_cast<std::int64_t>(std::floor(std::pow(Xd, cd - 1.0 + eps)));
    const double target = std::pow(Xd, 2.0 - cd - 3.0 * eps);
    const auto t0 = Clock::now();
    const PhaseTable table(X, X1, n, c, J > 0, policy, workers);
    const double table_seconds = seconds_since(t0);

    std::vector<BoundReport> out;
    for (std::int64_t h = -H; h <= H; ++h)
        for (std::int64_t jj = -J; jj <= J; ++jj) {
            if (h == 0 && jj == 0) continue;
            const auto t1 = Clock::now();
            ExpSumQuery q{h, jj, n, c, X, X1, SumDomain::primes, false};
            const ExpSumResult s = exp_sum(q, table);
            BoundReport rep;
            rep.kind = "exp_sum_2.5";
            rep.params = {{"X", Xd},
                          {"X1", static_cast<double>(X1)},
                          {"n", static_cast<double>(n)},
                          {"c", cd},
                          {"eps", eps},
                          {"h", static_cast<double>(h)},
                          {"j", static_cast<double>(jj)},
                          {"H", static_cast<double>(H)},
                          {"J", static_cast<double>(J)},
                          {"delta0", std::pow(Xd, -eps / 10.0)},
                          {"max_phase_error", s.max_phase_error}};
            rep.measured = std::abs(s.value);
            rep.bound = target;
            rep.ratio = rep.measured / target;
            rep.terms = s.terms;
            rep.seconds = seconds_since(t1) + (out.empty() ? table_seconds : 0.0);
            out.push_back(std::move(rep));
        }
    return out;
}

} // namespace pslab
