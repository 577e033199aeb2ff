#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pslab/certified.hpp"
#include "pslab/representation.hpp"

namespace pslab {

using cplx = std::complex<double>;

// Per-term phase error allowed in exponential sums, in radians.
inline constexpr double kPhaseBudget = 1e-9;
inline constexpr std::uint64_t kDefaultTermBudget = 100000000;

// {x^c} and {(n - x^c)^gamma} for every integer x in (lo, hi], as doubles with
// a certified bound on their distance to the true values. Built in parallel,
// read-only afterwards.
class PhaseTable {
public:
    // with_residual = false skips the second component (j = 0 sums); n is then unused.
    PhaseTable(std::uint64_t lo, std::uint64_t hi, i128 n, const Exponent& c, bool with_residual,
               const PrecisionPolicy& policy = {}, unsigned workers = 1);

    std::uint64_t lo() const { return lo_; }
    std::uint64_t hi() const { return hi_; }
    i128 n() const { return n_; }
    const Exponent& c() const { return c_; }
    bool has_residual() const { return with_residual_; }
    bool contains(std::uint64_t x) const { return x > lo_ && x <= hi_; }

    double frac_pc(std::uint64_t x) const { return f1_[x - lo_ - 1]; }
    double frac_residual(std::uint64_t x) const { return f2_[x - lo_ - 1]; }
    double err_pc(std::uint64_t x) const { return e1_[x - lo_ - 1]; }
    double err_residual(std::uint64_t x) const { return e2_[x - lo_ - 1]; }

    // h x^c + j (n - x^c)^gamma mod 1, with its error bound in turns.
    double phase(std::uint64_t x, std::int64_t h, std::int64_t j) const;
    double phase_error(std::uint64_t x, std::int64_t h, std::int64_t j) const;
    cplx e(std::uint64_t x, std::int64_t h, std::int64_t j) const;

private:
    std::uint64_t lo_, hi_;
    i128 n_;
    Exponent c_;
    bool with_residual_;
    std::vector<double> f1_, f2_, e1_, e2_;
};

enum class SumDomain { primes, integers, lambda_weighted };

struct ExpSumQuery {
    std::int64_t h = 0;
    std::int64_t j = 0;
    i128 n = 0;
    Exponent c = Exponent::rational(1, 1);
    std::uint64_t lo = 0;  // range (lo, hi]
    std::uint64_t hi = 0;
    SumDomain domain = SumDomain::primes;
    bool allow_zero_frequency = false;  // (0, 0) is excluded by default
};

struct ExpSumResult {
    cplx value;
    std::uint64_t terms = 0;
    double weight = 0.0;           // sum of |weights|, the trivial bound
    double max_phase_error = 0.0;  // worst per-term phase error, radians
};

// Integers in (X, X1] as (floor X, floor X1], decided on the enclosures.
std::pair<std::uint64_t, std::uint64_t> integer_range(const ProblemParams& params);

ExpSumResult exp_sum(const ExpSumQuery& q, const PrecisionPolicy& policy = {});
// Same sum from a prebuilt table covering the range.
ExpSumResult exp_sum(const ExpSumQuery& q, const PhaseTable& table);

// delta^-1/2 (F^1/6 N^1/2 + F^-1/3 N); requires 2 <= F <= N^3/2 and 0 < delta <= 1.
double lemma1_bound(double F, double N, double delta);

struct PhaseDerivatives {
    double alpha2, alpha3, beta2, beta3;
};

// Second and third derivatives of alpha(t) = x t^c + (1 - t^c)^gamma and of
// beta(t) = t alpha'(t). Requires 0 < t and t^c < 1.
PhaseDerivatives phase_derivatives(double t, double x, double c);

struct BoundReport {
    std::string kind;
    std::vector<std::pair<std::string, double>> params;
    double measured = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
    std::uint64_t terms = 0;
    double seconds = 0.0;
};

// Header and one row per report: kind, key=value;... parameters, measured, bound, ratio, terms, wall time.
void write_reports_csv(std::ostream& os, const std::vector<BoundReport>& rows);

enum class CoefficientFamily { zero, constant, mobius, random_unimodular };

CoefficientFamily parse_family(const std::string& name);
std::string family_name(CoefficientFamily f);

struct BilinearQuery {
    std::uint64_t M = 0, M1 = 0, K = 0, K1 = 0;
    std::uint64_t X = 0, X1 = 0;  // constraint X < mk <= X1
    std::int64_t h = 0, j = 0;
    i128 n = 0;
    Exponent c = Exponent::rational(1, 1);
    CoefficientFamily a = CoefficientFamily::constant;
    CoefficientFamily b = CoefficientFamily::constant;
    std::uint64_t seed = 1;
    std::uint64_t term_budget = kDefaultTermBudget;
};

// Coefficients for indices lo+1..hi of a family (random families depend only on seed and index range).
std::vector<cplx> coefficients(CoefficientFamily f, std::uint64_t lo, std::uint64_t hi, std::uint64_t seed);

struct BilinearResult {
    cplx value;
    std::uint64_t terms = 0;
};

// Direct double sum of a_m b_k e(h (mk)^c + j (n - (mk)^c)^gamma) over M < m <= M1, K < k <= K1, X < mk <= X1.
BilinearResult bilinear_sum(const BilinearQuery& q, const PrecisionPolicy& policy = {});
BilinearResult bilinear_sum(const BilinearQuery& q, const PhaseTable& table);

struct WeylReport {
    double lhs = 0.0;            // |bilinear sum|^2
    double rhs_standard = 0.0;      // X^2/Q + (X/Q) sum_{0<|q|<=Q} sum_k |sum_m e(g)|
    double rhs_explicit = 0.0;   // (M1-M)(1 + (K1-K)/Q) sum_{|q|<Q} (1-|q|/Q) sum_k |sum_m e(g)|
    double shifted_total = 0.0;  // sum over 0<|q|<=Q, k of |sum_m e(g)|
    double zero_shift = 0.0;     // q = 0 contribution, equal to the pair count
    double fitted_constant = 0.0;  // lhs / rhs_standard
    std::uint64_t terms = 0;
    // |g'''(m)| / (|q y| X^-1 M^-2) over the shifted pairs, y = j n^gamma (j != 0 only).
    // Read literally, both sides of the condition bound this ratio by constants;
    // with a delta0 = X^(-eps/10) factor on the lower side only min >= delta0 is needed.
    double g3_ratio_min = 0.0;
    double g3_ratio_max = 0.0;
    double delta0 = 0.0;
};

// Requires 1 <= Q <= K X^-eps.
WeylReport weyl_shift_sum(const BilinearQuery& q, std::uint64_t Q, double eps, const PrecisionPolicy& policy = {});

struct SDeltaReport {
    std::uint64_t count = 0;
    std::uint64_t undecided = 0;
    double bound = 0.0;  // delta (X1 - X) + delta^-1/2 X^(c/2)
    double ratio = 0.0;
};

// Integers x in (X, X1] with ||x^c|| < delta. Requires 2 <= X < X1 <= 2X, 0 < delta < 1/4.
SDeltaReport sdelta_count(std::uint64_t X, std::uint64_t X1, const Exponent& c, double delta,
                          const PrecisionPolicy& policy = {}, unsigned workers = 1);

struct VaughanComponent {
    enum class Type { type1_log, type1, type2 };
    Type type;
    std::uint64_t M, M1;  // outer variable block (M, M1]
    std::uint64_t K, K1;  // inner variable range
    cplx value;
};

struct VaughanResult {
    std::uint64_t X = 0, X1 = 0, u = 0, v = 0;
    cplx direct;
    cplx recombined;
    std::vector<VaughanComponent> components;
    double discrepancy() const { return std::abs(direct - recombined); }
};

// Lambda-weighted sum over X < m <= X1 directly and via Vaughan's identity
// with Lambda cutoff u and Moebius cutoff v (both >= 2, uv <= X). Outer
// variables are split into dyadic blocks.
VaughanResult vaughan_decompose(std::uint64_t X, std::uint64_t X1, std::int64_t h, std::int64_t j, i128 n,
                                const Exponent& c, std::uint64_t u, std::uint64_t v,
                                const PrecisionPolicy& policy = {}, unsigned workers = 1,
                                std::uint64_t table_budget = std::uint64_t{1} << 27);

// Target n = floor(2 X^c), X1 = floor(5X/4) as used by the decomposition and sweep defaults.
i128 target_for(std::uint64_t X, const Exponent& c);

// |exp_sum over primes in (X, X1]| against X^(2 - c - 3 eps) for |h| <= H, |j| <= J, (h, j) != (0, 0).
std::vector<BoundReport> bound_sweep(std::uint64_t X, const Exponent& c, double eps, const PrecisionPolicy& policy = {},
                                     unsigned workers = 1);

} // namespace pslab
