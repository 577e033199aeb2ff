#include "pslab/exponent.hpp"

#include <cctype>
#include <numeric>
#include <utility>

#include "pslab/errors.hpp"

namespace pslab {

namespace {

std::int64_t parse_nonneg(std::string_view digits, std::string_view whole) {
    if (digits.empty()) throw DomainError("malformed exponent '" + std::string(whole) + "'");
    std::int64_t v = 0;
    for (char ch : digits) {
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            throw DomainError("malformed exponent '" + std::string(whole) + "'");
        if (v > (INT64_MAX - 9) / 10) throw DomainError("exponent too long '" + std::string(whole) + "'");
        v = v * 10 + (ch - '0');
    }
    return v;
}

} // namespace

Exponent Exponent::rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw DomainError("exponent with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    if (num <= 0) throw DomainError("exponent must be positive");
    const std::int64_t g = std::gcd(num, den);
    Exponent e;
    e.num_ = num / g;
    e.den_ = den / g;
    e.approx_ = static_cast<double>(e.num_) / static_cast<double>(e.den_);
    return e;
}

Exponent Exponent::parse(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (const auto slash = text.find('/'); slash != std::string_view::npos)
        return rational(parse_nonneg(text.substr(0, slash), text), parse_nonneg(text.substr(slash + 1), text));
    if (const auto dot = text.find('.'); dot != std::string_view::npos) {
        const auto int_part = text.substr(0, dot);
        const auto frac_part = text.substr(dot + 1);
        if (frac_part.size() > 17) throw DomainError("exponent has too many decimals '" + std::string(text) + "'");
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac_part.size(); ++i) den *= 10;
        const std::int64_t whole = int_part.empty() ? 0 : parse_nonneg(int_part, text);
        const std::int64_t frac = frac_part.empty() ? 0 : parse_nonneg(frac_part, text);
        if (whole > (INT64_MAX - frac) / den) throw DomainError("exponent too long '" + std::string(text) + "'");
        return rational(whole * den + frac, den);
    }
    return rational(parse_nonneg(text, text), 1);
}

Exponent Exponent::real(Encloser encloser, std::string label, double approx) {
    Exponent e;
    e.rational_ = false;
    e.num_ = 0;
    e.den_ = 0;
    e.approx_ = approx;
    e.label_ = std::move(label);
    e.encloser_ = std::move(encloser);
    return e;
}

Exponent Exponent::as_real() const {
    Exponent e = *this;
    e.rational_ = false;
    if (e.label_.empty()) e.label_ = to_string() + " (as real)";
    return e;
}

void Exponent::enclose(mpfr_ptr lo, mpfr_ptr hi) const {
    if (encloser_) {
        encloser_(lo, hi);
        return;
    }
    mpfr_set_si(lo, num_, MPFR_RNDD);
    mpfr_div_si(lo, lo, den_, MPFR_RNDD);
    mpfr_set_si(hi, num_, MPFR_RNDU);
    mpfr_div_si(hi, hi, den_, MPFR_RNDU);
}

void Exponent::enclose_gamma(mpfr_ptr lo, mpfr_ptr hi) const {
    if (encloser_) {
        mpfr_t clo, chi;
        mpfr_init2(clo, mpfr_get_prec(lo));
        mpfr_init2(chi, mpfr_get_prec(hi));
        encloser_(clo, chi);
        mpfr_ui_div(lo, 1, chi, MPFR_RNDD);
        mpfr_ui_div(hi, 1, clo, MPFR_RNDU);
        mpfr_clear(clo);
        mpfr_clear(chi);
        return;
    }
    mpfr_set_si(lo, den_, MPFR_RNDD);
    mpfr_div_si(lo, lo, num_, MPFR_RNDD);
    mpfr_set_si(hi, den_, MPFR_RNDU);
    mpfr_div_si(hi, hi, num_, MPFR_RNDU);
}

std::string Exponent::to_string() const {
    if (!label_.empty()) return label_;
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

} // namespace pslab
