#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pslab/representation.hpp"

namespace pslab {

// Normalization constant C with C * int_0^1 exp(-1/(t(1-t))) dt = 1.
double psi0_constant();

// psi0(t) = C exp(-1/(t(1-t))) on (0, 1), zero elsewhere.
double psi0(double t);

// Smooth step: int_0^u psi0, clamped to 0 below 0 and 1 above 1.
double smooth_step(double u);

// Either the normalized kernel composed with an affine map, or a smoothed
// trapezoid that is 1 on [inner_lo, inner_hi] and 0 outside [outer_lo, outer_hi].
struct BumpSpec {
    enum class Kind { normalized, majorant_pair, constant };
    Kind kind = Kind::normalized;
    // normalized: f(t) = psi0(scale * t + shift)
    double scale = 1.0;
    double shift = 0.0;
    // majorant_pair
    double outer_lo = 0.0, inner_lo = 0.0, inner_hi = 0.0, outer_hi = 0.0;
    // constant
    double value = 0.0;
};

// 1-periodic extension of a bump whose support [support_lo, support_hi] has
// length below one.
class PeriodicWindow {
public:
    static PeriodicWindow from_bump(BumpSpec spec, std::string name);
    static PeriodicWindow constant(double value);

    // Phi0(t) = psi0(2t).
    static PeriodicWindow phi_section2();
    // Psi0(t) = psi0(6 delta^-1 (t - 1) + 5), support (1 - 5/6 delta, 1 - 2/3 delta).
    static PeriodicWindow psi_section2(double delta);
    // Psi0(t) = psi0((2 eta delta)^-1 (t - 1 + delta) + 1/2).
    static PeriodicWindow psi_section5(double delta, double eta);
    // Majorizes chi[6 eta, 1 - 6 eta], majorized by chi[4 eta, 1 - 4 eta]; ramps of width eta.
    static PeriodicWindow phi_section5(double eta);
    // Majorizes chi[-delta, delta], majorized by chi[-2 delta, 2 delta]; ramps of width delta/2.
    static PeriodicWindow lemma4_majorant(double delta);

    double operator()(double t) const;
    // Value on the base period representative, no reduction.
    double eval_base(double t) const;

    const BumpSpec& spec() const { return spec_; }
    const std::string& name() const { return name_; }
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }
    bool is_constant() const { return spec_.kind == BumpSpec::Kind::constant; }

private:
    BumpSpec spec_;
    std::string name_;
    double lo_ = 0.0, hi_ = 1.0;
};

struct Coefficient {
    std::complex<double> value;
    double error = 0.0;
};

struct QuadratureOptions {
    double tolerance = 1e-12;  // absolute bound demanded on each coefficient
    int max_depth = 12;
};

// int_0^1 f(t) e(-m t) dt. Throws QuadratureError if the estimate exceeds the tolerance.
Coefficient fourier_coeff(const PeriodicWindow& w, std::int64_t m, const QuadratureOptions& opts = {});

class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double achieved)
        : Error(ExitCode::indeterminate, what), achieved_(achieved) {}
    double achieved() const { return achieved_; }

private:
    double achieved_;
};

// Coefficients for |m| <= max_index; negative indices by conjugation.
class FourierTable {
public:
    FourierTable(const PeriodicWindow& w, std::int64_t max_index, const QuadratureOptions& opts = {});

    std::int64_t max_index() const { return static_cast<std::int64_t>(pos_.size()) - 1; }
    Coefficient at(std::int64_t m) const;
    const std::string& name() const { return name_; }
    // Largest per-entry error estimate.
    double max_error() const;

    void write_csv(std::ostream& os) const;

private:
    std::string name_;
    std::vector<Coefficient> pos_;
};

// int_0^1 |f|^2.
double l2_norm_squared(const PeriodicWindow& w);

struct DecayFit {
    int r = 0;
    double constant = 0.0;     // smallest C with |f^(m)| <= C s (1 + s|m|)^-r on the table
    std::int64_t argmax = 0;
};

DecayFit verify_decay(const FourierTable& table, int r, double scale);

struct SmoothedSum {
    double value = 0.0;
    std::uint64_t primes = 0;
    std::uint64_t skipped = 0;  // fractional parts not decided at the precision cap
};

// Sum over X < p <= X1 of Phi(p^c) Psi((n - p^c)^gamma).
SmoothedSum smoothed_sum(const ProblemParams& params, const PeriodicWindow& phi, const PeriodicWindow& psi,
                         const PrecisionPolicy& policy = {});

struct Reconstruction {
    double value = 0.0;
    double tail_bound = 0.0;
    std::int64_t H = 0, J = 0;
    int r = 0;
    double main_term = 0.0;  // Phi^(0) Psi^(0) (pi(X1) - pi(X))
    std::uint64_t primes = 0;
};

// Truncated double Fourier expansion at |h| <= H, |j| <= J with a tail bound
// from the fitted decay constants at order r. phi_scale and psi_scale are the
// decay scales (1 for Phi, delta for Psi).
Reconstruction fourier_reconstruction(const ProblemParams& params, const FourierTable& phi, const FourierTable& psi,
                                      std::int64_t H, std::int64_t J, int r, double phi_scale, double psi_scale,
                                      const PrecisionPolicy& policy = {});

// H = floor(X^eps), J = floor(X^(c - 1 + eps)), r = min(floor(1/eps) + 2, 8).
struct Truncation {
    std::int64_t H = 0, J = 0;
    int r = 0;
};
Truncation truncation_for(const ProblemParams& params, double eps);

} // namespace pslab
