#include "pslab/bump.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "pslab/log.hpp"

namespace pslab {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double kernel(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::exp(-1.0 / (t * (1.0 - t)));
}

// Single 61-point Kronrod panel; for the flat-ended kernel this is already at
// round-off level on any subinterval of [0, 1/2].
template <typename F>
double panel(F&& f, double a, double b) {
    return gauss_kronrod<double, 61>::integrate(f, a, b, 0, 0.0);
}

struct Estimate {
    double value;
    double error;
};

// Bisection driven by the disagreement between a panel and its two halves;
// the returned error is that disagreement, which bounds the finer result in practice.
template <typename F>
Estimate adaptive(F&& f, double a, double b, double tol, int depth) {
    const double whole = panel(f, a, b);
    const double mid = 0.5 * (a + b);
    const double halves = panel(f, a, mid) + panel(f, mid, b);
    const double diff = std::abs(whole - halves);
    if (diff <= tol || depth == 0) return {halves, diff};
    // Below the rounding level of the panel further splitting only adds noise.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                         panel([&](double x) { return std::abs(f(x)); }, a, b);
    if (diff <= noise) return {halves, noise};
    const Estimate l = adaptive(f, a, mid, 0.5 * tol, depth - 1);
    const Estimate r = adaptive(f, mid, b, 0.5 * tol, depth - 1);
    return {l.value + r.value, l.error + r.error};
}

double kernel_integral(double a, double b) { return panel(kernel, a, b); }

} // namespace

double psi0_constant() {
    static const double c = 1.0 / (2.0 * kernel_integral(0.0, 0.5));
    return c;
}

double psi0(double t) { return psi0_constant() * kernel(t); }

double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    // The kernel is symmetric about 1/2, so integrate over the shorter side.
    if (u > 0.5) return 1.0 - psi0_constant() * kernel_integral(0.0, 1.0 - u);
    return psi0_constant() * kernel_integral(0.0, u);
}

PeriodicWindow PeriodicWindow::from_bump(BumpSpec spec, std::string name) {
    PeriodicWindow w;
    w.spec_ = spec;
    w.name_ = std::move(name);
    switch (spec.kind) {
    case BumpSpec::Kind::normalized:
        if (!(spec.scale > 0.0)) throw DomainError("bump scale must be positive");
        w.lo_ = -spec.shift / spec.scale;
        w.hi_ = (1.0 - spec.shift) / spec.scale;
        break;
    case BumpSpec::Kind::majorant_pair:
        if (!(spec.outer_lo < spec.inner_lo && spec.inner_lo <= spec.inner_hi && spec.inner_hi < spec.outer_hi))
            throw DomainError("majorant pair needs outer_lo < inner_lo <= inner_hi < outer_hi");
        w.lo_ = spec.outer_lo;
        w.hi_ = spec.outer_hi;
        break;
    case BumpSpec::Kind::constant:
        w.lo_ = 0.0;
        w.hi_ = 1.0;
        return w;
    }
    if (!(w.hi_ - w.lo_ < 1.0)) throw DomainError("window support must be shorter than one period");
    return w;
}

PeriodicWindow PeriodicWindow::constant(double value) {
    BumpSpec s;
    s.kind = BumpSpec::Kind::constant;
    s.value = value;
    return from_bump(s, "constant");
}

PeriodicWindow PeriodicWindow::phi_section2() {
    BumpSpec s;
    s.scale = 2.0;
    return from_bump(s, "phi2");
}

PeriodicWindow PeriodicWindow::psi_section2(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("psi window needs 0 < delta < 1");
    BumpSpec s;
    s.scale = 6.0 / delta;
    s.shift = 5.0 - 6.0 / delta;
    return from_bump(s, "psi2");
}

PeriodicWindow PeriodicWindow::psi_section5(double delta, double eta) {
    if (!(delta > 0.0 && delta < 1.0 && eta > 0.0 && eta < 0.5)) throw DomainError("psi5 window needs 0 < delta < 1, 0 < eta < 1/2");
    BumpSpec s;
    s.scale = 1.0 / (2.0 * eta * delta);
    s.shift = 0.5 - (1.0 - delta) * s.scale;
    return from_bump(s, "psi5");
}

PeriodicWindow PeriodicWindow::phi_section5(double eta) {
    if (!(eta > 0.0 && eta < 1.0 / 12.0)) throw DomainError("phi5 window needs 0 < eta < 1/12");
    BumpSpec s;
    s.kind = BumpSpec::Kind::majorant_pair;
    s.outer_lo = 4.5 * eta;
    s.inner_lo = 5.5 * eta;
    s.inner_hi = 1.0 - 5.5 * eta;
    s.outer_hi = 1.0 - 4.5 * eta;
    return from_bump(s, "phi5");
}

PeriodicWindow PeriodicWindow::lemma4_majorant(double delta) {
    if (!(delta > 0.0 && delta < 0.25)) throw DomainError("lemma4 window needs 0 < delta < 1/4");
    BumpSpec s;
    s.kind = BumpSpec::Kind::majorant_pair;
    s.outer_lo = -1.75 * delta;
    s.inner_lo = -1.25 * delta;
    s.inner_hi = 1.25 * delta;
    s.outer_hi = 1.75 * delta;
    return from_bump(s, "lemma4");
}

double PeriodicWindow::eval_base(double t) const {
    switch (spec_.kind) {
    case BumpSpec::Kind::normalized: return psi0(spec_.scale * t + spec_.shift);
    case BumpSpec::Kind::majorant_pair:
        if (t <= spec_.outer_lo || t >= spec_.outer_hi) return 0.0;
        return smooth_step((t - spec_.outer_lo) / (spec_.inner_lo - spec_.outer_lo)) *
               smooth_step((spec_.outer_hi - t) / (spec_.outer_hi - spec_.inner_hi));
    case BumpSpec::Kind::constant: return spec_.value;
    }
    return 0.0;
}

double PeriodicWindow::operator()(double t) const {
    if (is_constant()) return spec_.value;
    const double r = t - std::floor(t - lo_);  // representative in [lo, lo + 1)
    if (r <= lo_ || r >= hi_) return 0.0;
    return eval_base(r);
}

Coefficient fourier_coeff(const PeriodicWindow& w, std::int64_t m, const QuadratureOptions& opts) {
    if (w.is_constant()) return {m == 0 ? std::complex<double>(w.spec().value, 0.0) : 0.0, 0.0};
    // Normalized bumps are integrated in the kernel variable u, t = lo + u / scale,
    // so the mass is exactly that of psi0 whatever the scale.
    const bool kernel_var = w.spec().kind == BumpSpec::Kind::normalized;
    const double a = kernel_var ? 0.0 : w.support_lo();
    const double b = kernel_var ? 1.0 : w.support_hi();
    const double jac = kernel_var ? 1.0 / w.spec().scale : 1.0;
    const double t0 = w.support_lo();
    auto f = [&](double x) { return kernel_var ? psi0(x) : w.eval_base(x); };
    // m t = m t0 + m jac (x - a); the first part is reduced mod 1 with its fma residual so
    // large m does not put cancellation noise into every integrand value.
    const double mt0 = static_cast<double>(m) * t0;
    const double base = (mt0 - std::floor(mt0)) + std::fma(static_cast<double>(m), t0, -mt0);
    const double slope = static_cast<double>(m) * jac;
    auto arg = [&](double x) { return kTwoPi * (base + slope * (x - a)); };
    // One piece per oscillation keeps each Kronrod panel well resolved.
    const auto pieces = static_cast<int>(std::ceil(std::abs(static_cast<double>(m)) * (b - a) * jac)) + 1;
    const double step = (b - a) / pieces;
    const double piece_tol = opts.tolerance / (4.0 * pieces * std::max(jac, 1.0));
    double re = 0.0, im = 0.0, err = 0.0;
    for (int k = 0; k < pieces; ++k) {
        const double x0 = a + k * step, x1 = (k + 1 == pieces) ? b : x0 + step;
        const Estimate c = adaptive([&](double x) { return f(x) * std::cos(arg(x)); }, x0, x1, piece_tol,
                                    opts.max_depth);
        re += jac * c.value;
        err += jac * c.error;
        if (m != 0) {
            const Estimate s = adaptive([&](double x) { return f(x) * std::sin(arg(x)); }, x0, x1, piece_tol,
                                        opts.max_depth);
            im -= jac * s.value;
            err += jac * s.error;
        }
    }
    // Round-off floor of the summation itself.
    err += 4.0 * std::numeric_limits<double>::epsilon() * pieces * (std::abs(re) + std::abs(im) + 1e-300);
    if (err > opts.tolerance)
        throw QuadratureError("fourier_coeff: quadrature for " + w.name() + " at m=" + std::to_string(m) +
                                  " reached only " + std::to_string(err),
                              err);
    return {{re, im}, err};
}

FourierTable::FourierTable(const PeriodicWindow& w, std::int64_t max_index, const QuadratureOptions& opts)
    : name_(w.name()) {
    if (max_index < 0) throw DomainError("FourierTable: max_index must be >= 0");
    pos_.reserve(static_cast<std::size_t>(max_index) + 1);
    for (std::int64_t m = 0; m <= max_index; ++m) pos_.push_back(fourier_coeff(w, m, opts));
    pos_[0].value.imag(0.0);
}

Coefficient FourierTable::at(std::int64_t m) const {
    const auto k = static_cast<std::size_t>(m < 0 ? -m : m);
    if (k >= pos_.size()) throw DomainError("FourierTable: index " + std::to_string(m) + " outside table");
    const Coefficient& c = pos_[k];
    return m < 0 ? Coefficient{std::conj(c.value), c.error} : c;
}

double FourierTable::max_error() const {
    double e = 0.0;
    for (const auto& c : pos_) e = std::max(e, c.error);
    return e;
}

void FourierTable::write_csv(std::ostream& os) const {
    os << "schema_version,index,real,imag,error_bound\n";
    os.precision(17);
    const std::int64_t M = max_index();
    for (std::int64_t m = -M; m <= M; ++m) {
        const Coefficient c = at(m);
        os << 1 << ',' << m << ',' << c.value.real() << ',' << c.value.imag() << ',' << c.error << '\n';
    }
}

double l2_norm_squared(const PeriodicWindow& w) {
    if (w.is_constant()) return w.spec().value * w.spec().value;
    if (w.spec().kind == BumpSpec::Kind::normalized)
        return adaptive([](double u) { const double v = psi0(u); return v * v; }, 0.0, 1.0, 1e-15, 12).value /
               w.spec().scale;
    return adaptive([&](double t) { const double v = w.eval_base(t); return v * v; }, w.support_lo(), w.support_hi(),
                    1e-15, 12)
        .value;
}

DecayFit verify_decay(const FourierTable& table, int r, double scale) {
    if (r < 0 || r > 8) throw DomainError("verify_decay: r must be in 0..8");
    if (!(scale > 0.0)) throw DomainError("verify_decay: scale must be positive");
    DecayFit fit;
    fit.r = r;
    for (std::int64_t m = 0; m <= table.max_index(); ++m) {
        const double a = std::abs(table.at(m).value);
        const double ratio = a / (scale * std::pow(1.0 + scale * static_cast<double>(m), -r));
        if (ratio > fit.constant) {
            fit.constant = ratio;
            fit.argmax = m;
        }
    }
    return fit;
}

namespace {

struct FracPair {
    double pc;
    double residual;
};

std::optional<FracPair> fractional_parts(const ProblemParams& params, i128 p, const PrecisionPolicy& policy) {
    for (int bits = policy.start_bits;; bits = std::min(bits * 2, policy.cap_bits)) {
        const auto f = frac_pow_at(p, params.c, bits);
        const auto r = f ? residual_power_at(params.n, p, params.c, bits) : std::nullopt;
        if (f && r) return FracPair{f->mid(), r->frac.mid()};
        if (bits >= policy.cap_bits) return std::nullopt;
    }
}

template <typename Visit>
std::uint64_t for_each_window_prime(const ProblemParams& params, const PrecisionPolicy& policy, Visit&& visit) {
    std::uint64_t skipped = 0;
    for (const std::uint64_t p : window_primes(params, policy)) {
        const auto fp = fractional_parts(params, static_cast<i128>(p), policy);
        if (!fp) {
            log_warn("fractional parts undecided at the cap for p=" + std::to_string(p));
            ++skipped;
            continue;
        }
        visit(*fp);
    }
    return skipped;
}

double tail_beyond(const DecayFit& fit, double scale, std::int64_t M) {
    if (fit.r < 2) return std::numeric_limits<double>::infinity();
    return 2.0 * fit.constant * std::pow(1.0 + scale * static_cast<double>(M), 1 - fit.r) / (fit.r - 1);
}

} // namespace

SmoothedSum smoothed_sum(const ProblemParams& params, const PeriodicWindow& phi, const PeriodicWindow& psi,
                         const PrecisionPolicy& policy) {
    SmoothedSum s;
    s.skipped = for_each_window_prime(params, policy, [&](const FracPair& f) {
        s.value += phi(f.pc) * psi(f.residual);
        ++s.primes;
    });
    return s;
}

Reconstruction fourier_reconstruction(const ProblemParams& params, const FourierTable& phi, const FourierTable& psi,
                                      std::int64_t H, std::int64_t J, int r, double phi_scale, double psi_scale,
                                      const PrecisionPolicy& policy) {
    if (H < 0 || J < 0) throw DomainError("fourier_reconstruction: H, J must be >= 0");
    if (phi.max_index() < H || psi.max_index() < J)
        throw DomainError("fourier_reconstruction: tables do not cover |h| <= H, |j| <= J");
    Reconstruction rec;
    rec.H = H;
    rec.J = J;
    rec.r = r;

    std::vector<std::complex<double>> sums(static_cast<std::size_t>((2 * H + 1) * (2 * J + 1)));
    const std::uint64_t skipped = for_each_window_prime(params, policy, [&](const FracPair& f) {
        ++rec.primes;
        std::size_t k = 0;
        for (std::int64_t h = -H; h <= H; ++h)
            for (std::int64_t j = -J; j <= J; ++j)
                sums[k++] += std::polar(1.0, kTwoPi * (static_cast<double>(h) * f.pc + static_cast<double>(j) * f.residual));
    });
    if (skipped) throw IndeterminateError("fourier_reconstruction: undecided fractional parts");

    std::complex<double> value = 0.0;
    double quad = 0.0;
    std::size_t k = 0;
    for (std::int64_t h = -H; h <= H; ++h) {
        const Coefficient a = phi.at(h);
        for (std::int64_t j = -J; j <= J; ++j) {
            const Coefficient b = psi.at(j);
            value += a.value * b.value * sums[k++];
            quad += std::abs(a.value) * b.error + a.error * std::abs(b.value) + a.error * b.error;
        }
    }
    rec.value = value.real();
    rec.main_term = phi.at(0).value.real() * psi.at(0).value.real() * static_cast<double>(rec.primes);

    // l1 masses inside the truncation, and in total (table with its errors plus fitted decay beyond it).
    auto mass = [](const FourierTable& t, std::int64_t upto, bool with_error) {
        double s = 0.0;
        for (std::int64_t m = -upto; m <= upto; ++m) s += std::abs(t.at(m).value) + (with_error ? t.at(m).error : 0.0);
        return s;
    };
    const double phi_in = mass(phi, H, false), psi_in = mass(psi, J, false);
    const double phi_all = mass(phi, phi.max_index(), true) +
                           tail_beyond(verify_decay(phi, r, phi_scale), phi_scale, phi.max_index());
    const double psi_all = mass(psi, psi.max_index(), true) +
                           tail_beyond(verify_decay(psi, r, psi_scale), psi_scale, psi.max_index());
    const double n = static_cast<double>(rec.primes);
    const double rounding = 1e-12 * n * static_cast<double>(sums.size()) * phi_all * psi_all;
    rec.tail_bound = n * (phi_all * psi_all - phi_in * psi_in) + n * quad + rounding;
    return rec;
}

Truncation truncation_for(const ProblemParams& params, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("truncation: eps must lie in (0, 1)");
    const double X = params.X.mid();
    const double c = params.c.approx();
    Truncation t;
    t.H = static_cast<std::int64_t>(std::floor(std::pow(X, eps)));
    t.J = static_cast<std::int64_t>(std::floor(std::pow(X, c - 1.0 + eps)));
    t.r = static_cast<int>(std::min(std::floor(1.0 / eps) + 2.0, 8.0));
    return t;
}

} // namespace pslab
