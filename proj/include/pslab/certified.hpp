#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "pslab/bigfloat.hpp"
#include "pslab/errors.hpp"
#include "pslab/exponent.hpp"
#include "pslab/int128.hpp"

namespace pslab {

// Working-precision schedule: start, then double until the cap.
struct PrecisionPolicy {
    int start_bits = 64;
    int cap_bits = 4096;
};

// Closed interval [lo, hi] guaranteed to contain a real quantity.
class CertifiedValue {
public:
    // The point 0.
    CertifiedValue() : CertifiedValue(BigFloat(64), BigFloat(64), 64) {}
    CertifiedValue(BigFloat lo, BigFloat hi, int precision_bits);
    // Exact point value (every double is representable at >= 53 bits).
    static CertifiedValue point(double v, int precision_bits = 64);

    const BigFloat& lo() const { return lo_; }
    const BigFloat& hi() const { return hi_; }
    int precision_bits() const { return precision_bits_; }

    // Outward-rounded double bounds and a midpoint for reporting.
    double lo_double() const { return lo_.to_double(MPFR_RNDD); }
    double hi_double() const { return hi_.to_double(MPFR_RNDU); }
    double mid() const;
    // hi - lo rounded up.
    double width() const;

    bool contains(mpfr_srcptr x) const;
    bool is_point() const;

    // Definite floor if no integer lies in (lo, hi]; empty otherwise.
    std::optional<i128> definite_floor() const;

private:
    BigFloat lo_;
    BigFloat hi_;
    int precision_bits_;
};

struct FloorResult {
    std::optional<i128> value;  // empty: indeterminate at the precision cap
    int achieved_precision = 0;
    bool exact_fallback = false;  // decided by exact integer root arithmetic

    bool determinate() const { return value.has_value(); }
};

// Thrown by pow_enclosure when the requested width would need more working
// precision than the cap allows; carries the widest enclosure that was computed.
class PrecisionCapExceeded : public Error {
public:
    PrecisionCapExceeded(const std::string& what, CertifiedValue widest)
        : Error(ExitCode::indeterminate, what), widest_(std::move(widest)) {}
    const CertifiedValue& widest() const { return widest_; }

private:
    CertifiedValue widest_;
};

// Enclosure of m^c with hi - lo <= 2^(1 - precision_bits) * m^c.
CertifiedValue pow_enclosure(i128 m, const Exponent& c, int precision_bits,
                             const PrecisionPolicy& policy = {});

// Exact [m^c]. Escalates precision geometrically; for rational c an enclosure
// that still straddles an integer at the cap is settled by integer k-th roots.
FloorResult certified_floor_pow(i128 m, const Exponent& c, const PrecisionPolicy& policy = {});

// Same as certified_floor_pow but throws IndeterminateError instead of returning
// an empty value.
i128 floor_pow(i128 m, const Exponent& c, const PrecisionPolicy& policy = {});

// Enclosure of {m^c}, consistent with certified_floor_pow and inside [0, 1).
CertifiedValue frac_pow(i128 m, const Exponent& c, const PrecisionPolicy& policy = {});

// Smallest m >= 1 with [m^c] >= t, i.e. ceil(t^(1/c)) for t >= 1. Exact.
i128 ceil_root(i128 t, const Exponent& c, const PrecisionPolicy& policy = {});

struct ResidualEnclosure {
    CertifiedValue value;  // (n - p^c)^gamma
    CertifiedValue frac;   // {(n - p^c)^gamma}
};

// Encloses (n - p^c)^gamma, gamma = 1/c, and its fractional part. Requires p^c < n.
ResidualEnclosure residual_power(i128 n, i128 p, const Exponent& c,
                                 const PrecisionPolicy& policy = {});

// Fractional part {m^c} enclosed at exactly `bits` working precision, with no
// escalation; empty if the floor is not decided at that precision. Hot loops use
// this before falling back to frac_pow.
std::optional<CertifiedValue> frac_pow_at(i128 m, const Exponent& c, int bits);

// Same for the residual (n - p^c)^gamma; empty when p^c < n is undecided or the
// floor straddles an integer at `bits`.
std::optional<ResidualEnclosure> residual_power_at(i128 n, i128 p, const Exponent& c, int bits);

} // namespace pslab
