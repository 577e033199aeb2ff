#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pslab/certified.hpp"

namespace pslab {

// Which sufficiency criterion the windows come from: the fixed-margin windows
// used for every large n, or the eta-thin windows used for almost-all n.
enum class Variant { theorem1, theorem2 };

// Derived quantities for a target n: X = (n/2)^gamma, X1 = 5X/4 (or (1 + eta)X),
// delta = gamma X^(1 - c), all held as enclosures at `precision_bits`.
struct ProblemParams {
    i128 n = 0;
    Exponent c = Exponent::rational(1, 1);
    Variant variant = Variant::theorem1;
    i128 block_start = 0;  // N for the theorem2 variant, equal to n otherwise
    bool degenerate = false;
    int precision_bits = 64;

    CertifiedValue gamma;
    CertifiedValue X;
    CertifiedValue X1;
    CertifiedValue delta;
    CertifiedValue eta;  // (log N)^-2 for theorem2; the point 0 for theorem1

    // Same inputs re-derived at a higher precision.
    ProblemParams at_precision(int bits) const;
};

struct DeriveOptions {
    int precision_bits = 64;
    PrecisionPolicy policy{};
    // c = 1 makes delta identically 1. Accepting it keeps the degenerate c = 1
    // cases (all {p^c} = 0) available for checks.
    bool allow_degenerate_exponent = false;
};

// Throws DomainError for n < 4, c outside [1, 2), or delta >= 1.
ProblemParams derive_params(i128 n, const Exponent& c, const DeriveOptions& opts = {});

// Almost-all variant: block (N, (1 + eta) N], eta = (log N)^-2, for a target n in that block.
ProblemParams derive_params_theorem2(i128 n, i128 N, const Exponent& c, const DeriveOptions& opts = {});

// Open interval (lo, hi) whose endpoints are themselves enclosed.
struct WindowInterval {
    CertifiedValue lo;
    CertifiedValue hi;
};

struct WindowSpec {
    enum class Kind { derived, explicit_bounds };
    Kind kind = Kind::derived;
    Variant variant = Variant::theorem1;
    WindowInterval frac_pc;   // window for {p^c}
    WindowInterval residual;  // window for {(n - p^c)^gamma}

    // (0, 1/2) x (1 - 5/6 delta, 1 - 2/3 delta), or
    // (4 eta, 1 - 4 eta) x (1 - delta - eta delta, 1 - delta + eta delta).
    static WindowSpec for_params(const ProblemParams& params);
    // Windows with exactly representable endpoints, never re-derived.
    static WindowSpec explicit_windows(double frac_lo, double frac_hi, double res_lo, double res_hi);
};

enum class WindowClass { in, out, uncertain };

struct WindowOutcome {
    WindowClass kind = WindowClass::out;
    int precision_bits = 0;
};

struct Representation {
    i128 n = 0;
    i128 m = 0;
    i128 p = 0;
    bool verified = false;
};

struct WindowTally {
    std::uint64_t in = 0;
    std::uint64_t out = 0;
    std::uint64_t uncertain = 0;
    std::uint64_t total() const { return in + out + uncertain; }
};

// Primes p with X < p <= X1, decided on the enclosures.
std::vector<std::uint64_t> window_primes(const ProblemParams& params, const PrecisionPolicy& policy = {});

// In iff both fractional parts lie strictly inside their windows; Out iff one
// lies strictly outside; Uncertain if still undecided at the precision cap.
WindowOutcome check_window(i128 p, const ProblemParams& params, const WindowSpec& window,
                           const PrecisionPolicy& policy = {});

WindowTally count_window_primes(const ProblemParams& params, const WindowSpec& window,
                                const PrecisionPolicy& policy = {});

struct WindowSearch {
    std::optional<Representation> representation;
    WindowTally tally;              // classifications made before returning
    std::uint64_t violations = 0;   // In-primes whose m failed the exact check
};

WindowSearch find_representation_window(i128 n, const Exponent& c, const PrecisionPolicy& policy = {});

// Ground truth: smallest prime p (ascending) with [m^c] = n - [p^c] for
// m = ceil((n - [p^c])^gamma). Finds a representation iff one exists.
std::optional<Representation> find_representation_bruteforce(i128 n, const Exponent& c,
                                                             const PrecisionPolicy& policy = {});

// Every (m, p) pair, for test oracles only.
std::vector<Representation> all_representations_bruteforce(i128 n, const Exponent& c,
                                                           const PrecisionPolicy& policy = {});

// True iff [m^c] + [p^c] = n exactly. Throws on indeterminate floors and when p is not prime.
bool verify_representation(i128 n, i128 m, i128 p, const Exponent& c, const PrecisionPolicy& policy = {});

struct CriterionAudit {
    WindowTally tally;
    std::uint64_t violations = 0;  // In-primes with no integer m in [(n-[p^c])^g, (n+1-[p^c])^g)
    std::vector<std::uint64_t> violating_primes;
};

// Checks, for every prime classified In, that the window criterion really
// produces an integer m solving the floor equation.
CriterionAudit audit_window_criterion(const ProblemParams& params, const WindowSpec& window,
                                      const PrecisionPolicy& policy = {});

bool is_prime_u64(std::uint64_t n);

} // namespace pslab
