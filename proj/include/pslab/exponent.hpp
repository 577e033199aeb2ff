#pragma once

#include <mpfr.h>

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace pslab {

// The exponent c of the sequence [m^c]. Held exactly: either a reduced
// rational a/b, or a real constant described by a routine that encloses it at
// any requested precision. Derived quantities such as gamma = 1/c are always
// obtained as enclosures from this exact description.
class Exponent {
public:
    // Writes lo <= c <= hi; precision is taken from lo and hi.
    using Encloser = std::function<void(mpfr_ptr lo, mpfr_ptr hi)>;

    static Exponent rational(std::int64_t num, std::int64_t den);

    // "21/20", "1.05", "3/2" or "1"; decimals are converted to exact rationals.
    static Exponent parse(std::string_view text);

    // An exponent treated as irrational: no exact integer fallback exists for it.
    static Exponent real(Encloser encloser, std::string label, double approx);

    // Same value, but flagged irrational. Used to exercise the no-fallback policy.
    Exponent as_real() const;

    bool is_rational() const { return rational_; }
    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double approx() const { return approx_; }
    bool is_one() const { return rational_ && num_ == den_; }

    // Encloses c (respectively gamma = 1/c) at the precision of lo/hi.
    void enclose(mpfr_ptr lo, mpfr_ptr hi) const;
    void enclose_gamma(mpfr_ptr lo, mpfr_ptr hi) const;

    std::string to_string() const;

    friend bool operator==(const Exponent& a, const Exponent& b) {
        return a.rational_ == b.rational_ && a.num_ == b.num_ && a.den_ == b.den_ &&
               a.label_ == b.label_;
    }

private:
    Exponent() = default;

    bool rational_ = true;
    std::int64_t num_ = 1;
    std::int64_t den_ = 1;
    double approx_ = 1.0;
    std::string label_;
    Encloser encloser_;
};

} // namespace pslab
