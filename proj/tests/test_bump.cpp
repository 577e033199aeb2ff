#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "pslab/bump.hpp"

using namespace pslab;

namespace {

// Trapezoid rule on [lo, lo + 1) for a 1-periodic smooth function: spectrally
// accurate, and unrelated to the library's Kronrod panels.
std::complex<double> trapezoid_coeff(const PeriodicWindow& w, std::int64_t m, double lo, double len, int points) {
    std::complex<double> s = 0.0;
    const double h = len / points;
    for (int k = 0; k < points; ++k) {
        const double t = lo + k * h;
        s += w(t) * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(m) * t);
    }
    return s * h;
}

} // namespace

TEST_CASE("psi0 values") {
    CHECK(psi0(0.0) == 0.0);
    CHECK(psi0(1.0) == 0.0);
    CHECK(psi0(-0.3) == 0.0);
    CHECK(psi0(1.7) == 0.0);
    CHECK(psi0(0.5) == doctest::Approx(psi0_constant() * std::exp(-4.0)).epsilon(1e-15));

    boost::math::quadrature::tanh_sinh<double> ts;
    const double I = ts.integrate([](double t) { return std::exp(-1.0 / (t * (1.0 - t))); }, 0.0, 1.0);
    CHECK(std::abs(psi0_constant() - 1.0 / I) < 1e-12 * psi0_constant());
    CHECK(psi0_constant() == doctest::Approx(142.25037577709585).epsilon(1e-12));
}

TEST_CASE("smooth step") {
    CHECK(smooth_step(-1.0) == 0.0);
    CHECK(smooth_step(2.0) == 1.0);
    CHECK(smooth_step(0.5) == doctest::Approx(0.5).epsilon(1e-14));
    double last = 0.0;
    for (int k = 1; k < 100; ++k) {
        const double u = k / 100.0;
        const double v = smooth_step(u);
        CHECK(v >= last);
        CHECK(v + smooth_step(1.0 - u) == doctest::Approx(1.0).epsilon(1e-14));
        last = v;
    }
}

TEST_CASE("zeroth coefficients") {
    const auto phi = PeriodicWindow::phi_section2();
    CHECK(std::abs(fourier_coeff(phi, 0).value.real() - 0.5) < 1e-10);
    CHECK(fourier_coeff(phi, 0).value.imag() == 0.0);
    for (double delta : {0.5, 1e-2, 1e-3}) {
        const auto psi = PeriodicWindow::psi_section2(delta);
        const double v = fourier_coeff(psi, 0).value.real();
        CHECK(std::abs(v - delta / 6.0) < 1e-10 * delta / 6.0);
    }
    const double eta = 0.01, delta = 0.2;
    const auto psi5 = PeriodicWindow::psi_section5(delta, eta);
    CHECK(std::abs(fourier_coeff(psi5, 0).value.real() - 2 * eta * delta) < 1e-10 * 2 * eta * delta);
}

TEST_CASE("coefficients match a periodic trapezoid oracle") {
    const auto phi = PeriodicWindow::phi_section2();
    for (std::int64_t m : {1, 2, 5, 17, 40}) {
        const auto c = fourier_coeff(phi, m).value;
        const auto ref = trapezoid_coeff(phi, m, 0.0, 1.0, 4096);
        CHECK(std::abs(c - ref) < 1e-12);
    }
    const double delta = 0.05;
    const auto psi = PeriodicWindow::psi_section2(delta);
    for (std::int64_t m : {1, 7, 60, 500}) {
        const auto c = fourier_coeff(psi, m).value;
        const auto ref = trapezoid_coeff(psi, m, 0.0, 1.0, 1 << 17);
        CHECK(std::abs(c - ref) < 1e-12);
    }
    const auto maj = PeriodicWindow::lemma4_majorant(0.05);
    for (std::int64_t m : {0, 3, 11}) {
        const auto c = fourier_coeff(maj, m).value;
        const auto ref = trapezoid_coeff(maj, m, -0.5, 1.0, 1 << 14);
        CHECK(std::abs(c - ref) < 1e-11);
    }
}

TEST_CASE("Hermitian symmetry and real zeroth coefficient") {
    const auto psi = PeriodicWindow::psi_section2(0.1);
    const FourierTable t(psi, 50);
    for (std::int64_t m = 1; m <= 50; ++m) {
        CHECK(t.at(-m).value == std::conj(t.at(m).value));
        // Direct quadrature at negative m, not via the table.
        CHECK(std::abs(fourier_coeff(psi, -m).value - std::conj(t.at(m).value)) < 1e-13);
    }
    CHECK(t.at(0).value.imag() == 0.0);
    CHECK(t.at(0).value.real() > 0.0);
    CHECK_THROWS_AS(t.at(51), DomainError);
}

TEST_CASE("Parseval at M = 1000") {
    const auto phi = PeriodicWindow::phi_section2();
    const FourierTable t(phi, 1000);
    double s = std::norm(t.at(0).value);
    for (std::int64_t m = 1; m <= 1000; ++m) s += 2.0 * std::norm(t.at(m).value);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double l2 = ts.integrate([](double x) { const double v = psi0(2.0 * x); return v * v; }, 0.0, 0.5);
    CHECK(l2_norm_squared(phi) == doctest::Approx(l2).epsilon(1e-12));
    CHECK(s <= l2 * (1 + 1e-12));
    CHECK(std::abs(s - l2) < 1e-8 * l2);
}

TEST_CASE("window supports") {
    const double delta = 0.03;
    const auto psi = PeriodicWindow::psi_section2(delta);
    CHECK(psi.support_lo() == doctest::Approx(1 - 5.0 / 6.0 * delta).epsilon(1e-14));
    CHECK(psi.support_hi() == doctest::Approx(1 - 2.0 / 3.0 * delta).epsilon(1e-14));
    for (int k = 0; k <= 10000; ++k) {
        const double t = -3.0 + k * 6.0 / 10000;
        const double f = t - std::floor(t);
        if (f <= psi.support_lo() || f >= psi.support_hi()) CHECK(psi(t) == 0.0);
    }
    CHECK(psi(1 - 0.75 * delta) == doctest::Approx(psi0(0.5)));
    CHECK(psi(-0.75 * delta) == doctest::Approx(psi0(0.5)));

    const double eta = 0.02;
    const auto psi5 = PeriodicWindow::psi_section5(delta, eta);
    CHECK(psi5.support_lo() == doctest::Approx(1 - delta - eta * delta).epsilon(1e-13));
    CHECK(psi5.support_hi() == doctest::Approx(1 - delta + eta * delta).epsilon(1e-13));

    const auto phi = PeriodicWindow::phi_section2();
    CHECK(phi(0.25) == doctest::Approx(psi0(0.5)));
    CHECK(phi(0.75) == 0.0);
    CHECK(phi(1.25) == doctest::Approx(psi0(0.5)));
}

TEST_CASE("majorant pairs are squeezed between indicators") {
    const double eta = 0.03;
    const auto phi5 = PeriodicWindow::phi_section5(eta);
    for (int k = 0; k <= 20000; ++k) {
        const double t = k / 20000.0;
        const double v = phi5(t);
        const double inner = (t >= 6 * eta && t <= 1 - 6 * eta) ? 1.0 : 0.0;
        const double outer = (t >= 4 * eta && t <= 1 - 4 * eta) ? 1.0 : 0.0;
        CHECK(inner <= v);
        CHECK(v <= outer);
    }
    const double delta = 0.01;
    const auto maj = PeriodicWindow::lemma4_majorant(delta);
    for (int k = -20000; k <= 20000; ++k) {
        const double t = k / 40000.0;
        const double v = maj(t);
        CHECK(((std::abs(t) <= delta) ? 1.0 : 0.0) <= v);
        CHECK(v <= ((std::abs(t) <= 2 * delta) ? 1.0 : 0.0));
        CHECK(std::abs(maj(t + 3.0) - v) < 1e-12);
    }
}

TEST_CASE("decay fits") {
    const auto phi = PeriodicWindow::phi_section2();
    const FourierTable tp(phi, 60);
    const auto f0 = verify_decay(tp, 0, 1.0);
    CHECK(f0.constant >= std::abs(tp.at(0).value));
    const auto f3 = verify_decay(tp, 3, 1.0);
    CHECK(std::isfinite(f3.constant));
    CHECK(f3.constant > 0.0);

    double c2[2];
    int i = 0;
    for (double delta : {0.1, 0.02}) {
        const FourierTable t(PeriodicWindow::psi_section2(delta), static_cast<std::int64_t>(std::ceil(30 / delta)));
        c2[i++] = verify_decay(t, 2, delta).constant;
    }
    CHECK(c2[0] / c2[1] < 2.0);
    CHECK(c2[1] / c2[0] < 2.0);
    CHECK_THROWS_AS(verify_decay(tp, 9, 1.0), DomainError);
}

TEST_CASE("table csv export") {
    const FourierTable t(PeriodicWindow::phi_section2(), 2);
    std::ostringstream os;
    t.write_csv(os);
    const std::string s = os.str();
    CHECK(s.rfind("schema_version,index,real,imag,error_bound\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 6);
}

TEST_CASE("smoothed sum trivial windows") {
    const auto params = derive_params(200000, Exponent::rational(21, 20));
    const auto primes = window_primes(params);
    const auto zero = smoothed_sum(params, PeriodicWindow::constant(0.0), PeriodicWindow::constant(0.0));
    CHECK(zero.value == 0.0);
    const auto one = smoothed_sum(params, PeriodicWindow::constant(1.0), PeriodicWindow::constant(1.0));
    CHECK(one.value == static_cast<double>(primes.size()));
    CHECK(one.skipped == 0);
}

TEST_CASE("c = 1: Phi(p) = Phi(0) = 0") {
    const auto params = derive_params(5000, Exponent::rational(1, 1), {.allow_degenerate_exponent = true});
    const auto s = smoothed_sum(params, PeriodicWindow::phi_section2(), PeriodicWindow::psi_section2(0.5));
    CHECK(s.value == 0.0);
    CHECK(s.primes > 0);
}

TEST_CASE("reconstruction: main term and convergence") {
    const auto params = derive_params(200000, Exponent::rational(21, 20));
    const double delta = params.delta.mid();
    const auto phi = PeriodicWindow::phi_section2();
    const auto psi = PeriodicWindow::psi_section2(delta);
    const FourierTable tphi(phi, 240);
    const FourierTable tpsi(psi, static_cast<std::int64_t>(std::ceil(720 / delta)));
    const auto direct = smoothed_sum(params, phi, psi);

    const auto r0 = fourier_reconstruction(params, tphi, tpsi, 0, 0, 8, 1.0, delta);
    CHECK(r0.value == doctest::Approx(delta / 12.0 * static_cast<double>(r0.primes)).epsilon(1e-9));
    CHECK(r0.primes == window_primes(params).size());

    double last_gap = 1e300, last_tail = 1e300;
    for (std::int64_t k : {1, 4, 16, 64}) {
        const auto r = fourier_reconstruction(params, tphi, tpsi, k, 3 * k, 8, 1.0, delta);
        const double gap = std::abs(direct.value - r.value);
        CHECK(gap <= r.tail_bound);
        CHECK(r.tail_bound <= last_tail);
        last_tail = r.tail_bound;
        last_gap = gap;
    }
    CHECK(last_gap < 1e-6 * direct.value);
    CHECK_THROWS_AS(fourier_reconstruction(params, tphi, tpsi, 241, 0, 8, 1.0, delta), DomainError);
}

TEST_CASE("truncation parameters") {
    const auto params = derive_params(2000000, Exponent::rational(21, 20));
    const auto t = truncation_for(params, 0.005);
    CHECK(t.H == static_cast<std::int64_t>(std::floor(std::pow(params.X.mid(), 0.005))));
    CHECK(t.J == static_cast<std::int64_t>(std::floor(std::pow(params.X.mid(), 0.055))));
    CHECK(t.r == 8);
    CHECK(truncation_for(params, 0.25).r == 6);
}
