#pragma once

#include <mpfr.h>

#include <string>
#include <utility>

#include "pslab/int128.hpp"

namespace pslab {

// Owning wrapper around an mpfr_t. Copies preserve precision and value exactly.
class BigFloat {
public:
    explicit BigFloat(mpfr_prec_t bits = 64) { mpfr_init2(v_, bits); mpfr_set_zero(v_, 1); }
    BigFloat(const BigFloat& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    BigFloat(BigFloat&& o) noexcept {
        mpfr_init2(v_, MPFR_PREC_MIN);
        mpfr_swap(v_, o.v_);
    }
    BigFloat& operator=(const BigFloat& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    BigFloat& operator=(BigFloat&& o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }
    ~BigFloat() { mpfr_clear(v_); }

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }
    mpfr_prec_t precision() const { return mpfr_get_prec(v_); }

    double to_double(mpfr_rnd_t rnd = MPFR_RNDN) const { return mpfr_get_d(v_, rnd); }
    std::string to_string(int digits = 20) const;

private:
    mpfr_t v_;
};

// Sets dst to the exact integer v (dst precision must be >= 128 for full range,
// smaller values round according to rnd).
void set_i128(mpfr_ptr dst, i128 v, mpfr_rnd_t rnd);

// Floor of an MPFR value as i128; the value must be finite and in range.
i128 floor_to_i128(mpfr_srcptr x);

} // namespace pslab
