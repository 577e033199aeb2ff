#include "pslab/bigfloat.hpp"

#include <gmp.h>

#include <cstdio>
#include <stdexcept>

namespace pslab {

std::string BigFloat::to_string(int digits) const {
    char* buf = nullptr;
    const std::string fmt = "%." + std::to_string(digits) + "Rg";
    if (mpfr_asprintf(&buf, fmt.c_str(), v_) < 0) throw std::runtime_error("mpfr_asprintf failed");
    std::string out(buf);
    mpfr_free_str(buf);
    return out;
}

void set_i128(mpfr_ptr dst, i128 v, mpfr_rnd_t rnd) {
    if (v >= INT64_MIN && v <= INT64_MAX) {
        mpfr_set_si(dst, static_cast<long>(v), rnd);
        return;
    }
    const bool neg = v < 0;
    const u128 mag = neg ? static_cast<u128>(-(v + 1)) + 1 : static_cast<u128>(v);
    mpfr_t tmp;
    mpfr_init2(tmp, 128);
    mpfr_set_ui(tmp, static_cast<unsigned long>(mag >> 64), MPFR_RNDN);
    mpfr_mul_2ui(tmp, tmp, 64, MPFR_RNDN);
    mpfr_add_ui(tmp, tmp, static_cast<unsigned long>(mag & UINT64_MAX), MPFR_RNDN);
    if (neg) mpfr_neg(tmp, tmp, MPFR_RNDN);
    mpfr_set(dst, tmp, rnd);
    mpfr_clear(tmp);
}

i128 floor_to_i128(mpfr_srcptr x) {
    if (!mpfr_number_p(x)) throw std::domain_error("floor of non-finite value");
    mpz_t z;
    mpz_init(z);
    mpfr_get_z(z, x, MPFR_RNDD);
    if (mpz_sizeinbase(z, 2) > 126) {
        mpz_clear(z);
        throw std::overflow_error("floor does not fit in 128 bits");
    }
    const bool neg = mpz_sgn(z) < 0;
    mpz_abs(z, z);
    u128 mag = 0;
    std::size_t count = 0;
    unsigned long long words[2] = {0, 0};
    mpz_export(words, &count, -1, sizeof(unsigned long long), 0, 0, z);
    mag = (static_cast<u128>(words[1]) << 64) | words[0];
    mpz_clear(z);
    return neg ? -static_cast<i128>(mag) : static_cast<i128>(mag);
}

} // namespace pslab
