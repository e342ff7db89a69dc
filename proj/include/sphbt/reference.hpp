#ifndef SPHBT_REFERENCE_HPP
#define SPHBT_REFERENCE_HPP

// Independent reference values: spherical Bessel functions, brute-force
// quadrature of the spherical Bessel transform, the Gaussian orbital pair,
// exact hydrogen levels and the driven isotropic oscillator.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "sphbt/errors.hpp"

namespace sphbt::reference {

namespace detail {

/// j_l(x) by its power series; used for x <= 1.
inline double sph_bessel_series(int l, double x) {
    double lead = 1.0;
    for (int t = 1; t <= l; ++t) lead *= x / (2.0 * t + 1.0);
    const double y = -0.5 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= y / (k * (2.0 * l + 2.0 * k + 1.0));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return lead * sum;
}

} // namespace detail

/// j_0(x) .. j_lmax(x). The recurrences run in long double: in double the
/// upward one loses about 1e-10 relative accuracy around l = 50, x = 77.
inline std::vector<double> sph_bessel_array(int lmax, double x) {
    if (lmax < 0) throw DomainError("sph_bessel: negative degree");
    if (!(x >= 0.0)) throw DomainError("sph_bessel: argument must be non-negative");
    const auto L = static_cast<std::size_t>(lmax);
    std::vector<double> out(L + 1);
    if (x <= 1.0) {
        for (int l = 0; l <= lmax; ++l) out[static_cast<std::size_t>(l)] = detail::sph_bessel_series(l, x);
        return out;
    }
    using W = long double;
    const W xl = x, s = std::sin(xl), c = std::cos(xl);
    const W j0 = s / xl, j1 = s / (xl * xl) - c / xl;
    std::vector<W> j(L + 1);
    if (x > lmax) {
        j[0] = j0;
        if (lmax >= 1) j[1] = j1;
        for (std::size_t l = 1; l < L; ++l) j[l + 1] = W(2 * l + 1) / xl * j[l] - j[l - 1];
    } else {
        // Miller: downward from well above lmax, normalized on j_0 or j_1.
        const int start = lmax + 20 + static_cast<int>(std::sqrt(40.0 * lmax));
        W fp1 = 0.0L, f = 1e-300L;
        for (int l = start; l > 0; --l) {
            const W fm1 = W(2 * l + 1) / xl * f - fp1;
            fp1 = f;
            f = fm1;
            if (l - 1 <= lmax) j[static_cast<std::size_t>(l) - 1] = f;
            if (std::abs(f) > 1e250L) {
                f *= 1e-250L;
                fp1 *= 1e-250L;
                for (int t = l - 1; t <= lmax; ++t) j[static_cast<std::size_t>(t)] *= 1e-250L;
            }
        }
        const W scale = std::abs(j0) >= std::abs(j1) ? j0 / j[0] : j1 / j[1];
        for (auto& v : j) v *= scale;
    }
    for (std::size_t l = 0; l <= L; ++l) out[l] = static_cast<double>(j[l]);
    return out;
}

/// (j_l(x), j_l'(x)).
inline std::pair<double, double> sph_bessel(int l, double x) {
    const auto j = sph_bessel_array(l + 1, x);
    const auto L = static_cast<std::size_t>(l);
    if (l == 0) return {j[0], -j[1]};
    return {j[L], (l * j[L - 1] - (l + 1.0) * j[L + 1]) / (2.0 * l + 1.0)};
}

/// Riccati-Bessel chi_l(x) = x j_l(x) and its first derivative.
inline std::pair<double, double> riccati_bessel(int l, double x) {
    const auto [jl, djl] = sph_bessel(l, x);
    return {x * jl, jl + x * djl};
}

enum class QuadratureRule { trapezoid, gauss_legendre_panels };

struct QuadratureSpec {
    int oversample = 16;
    QuadratureRule rule = QuadratureRule::gauss_legendre_panels;
};

namespace detail {

// 8-point Gauss-Legendre rule on [-1, 1]
inline constexpr std::array<double, 4> gl8_x = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                                0.9602898564975363};
inline constexpr std::array<double, 4> gl8_w = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                                0.1012285362903763};

} // namespace detail

/// sqrt(2/pi) * int_0^r_max chi_l(k r) psi(r) dr with node spacing
/// working_dr / oversample.
template <class F>
auto sbt_quadrature(F&& psi, int l, double k, double r_max, double working_dr, QuadratureSpec spec = {}) {
    using R = std::decay_t<decltype(psi(1.0))>;
    if (spec.oversample < 8)
        throw ConfigError("sbt_quadrature: oversample " + std::to_string(spec.oversample) +
                          " below the oracle minimum of 8");
    if (!(r_max > 0.0) || !(working_dr > 0.0)) throw ConfigError("sbt_quadrature: r_max and working_dr must be positive");
    const auto cells = static_cast<long>(std::ceil(r_max / working_dr - 1e-9)) * spec.oversample;
    const double h = r_max / static_cast<double>(cells);
    auto integrand = [&](double r) { return riccati_bessel(l, k * r).first * psi(r); };
    R acc{};
    if (spec.rule == QuadratureRule::trapezoid) {
        acc = 0.5 * (integrand(0.0) + integrand(r_max));
        for (long i = 1; i < cells; ++i) acc += integrand(static_cast<double>(i) * h);
        acc *= h;
    } else {
        // panels of eight nodes: one panel per eight fine cells
        const long panels = (cells + 7) / 8;
        const double H = r_max / static_cast<double>(panels);
        for (long p = 0; p < panels; ++p) {
            const double mid = (static_cast<double>(p) + 0.5) * H;
            R part{};
            for (std::size_t q = 0; q < 4; ++q) {
                const double d = 0.5 * H * detail::gl8_x[q];
                part += detail::gl8_w[q] * (integrand(mid - d) + integrand(mid + d));
            }
            acc += 0.5 * H * part;
        }
    }
    return acc * std::sqrt(2.0 / std::numbers::pi);
}

/// A_l = sqrt(2 / Gamma(l + 3/2)), the unit-norm constant of r^(l+1) e^(-r^2/2).
inline double gaussian_orbital_norm(int l) { return std::sqrt(2.0 / std::tgamma(l + 1.5)); }

inline double gaussian_orbital(int l, double r) {
    if (l < 0) throw DomainError("gaussian_orbital: negative degree");
    return gaussian_orbital_norm(l) * std::pow(r, l + 1) * std::exp(-0.5 * r * r);
}

/// The orbital is its own spherical Bessel transform.
inline double gaussian_orbital_transform(int l, double k) { return gaussian_orbital(l, k); }

inline double hydrogen_exact_energy(int n) {
    if (n < 1) throw DomainError("hydrogen_exact_energy: principal quantum number must be >= 1");
    return -0.5 / (static_cast<double>(n) * n);
}

enum class Gauge { coordinate, velocity };

/// Unit-frequency isotropic oscillator (U = r^2/2, unit charge) driven along
/// z by A(t) = -A0 sin(w t), qE(t) = w A0 cos(w t), starting from its ground
/// state at t = 0.
class DrivenOscillator {
public:
    struct State {
        double t = 0.0;
        double zeta = 0.0;   // classical displacement
        double dzeta = 0.0;  // classical velocity
        double action = 0.0; // int (dzeta^2/2 - zeta^2/2) dt
        double a2 = 0.0;     // int A^2/2 dt
    };

    DrivenOscillator(double amplitude, double omega, double max_step = 1e-4)
        : a0_(amplitude), w_(omega), h_(max_step) {
        if (!(max_step > 0.0) || max_step > 1e-4) throw ConfigError("DrivenOscillator: step must lie in (0, 1e-4]");
    }

    double amplitude() const { return a0_; }
    double omega() const { return w_; }
    double vector_potential(double t) const { return -a0_ * std::sin(w_ * t); }
    double force(double t) const { return w_ * a0_ * std::cos(w_ * t); }

    /// Classical trajectory and phases at time t >= 0 by classical RK4.
    State state(double t) const { return advance(State{}, t); }

    /// Continues the integration from s up to t >= s.t.
    State advance(const State& s, double t) const {
        if (t < s.t) throw DomainError("DrivenOscillator: cannot integrate backwards in time");
        const double span = t - s.t;
        const long steps = span > 0.0 ? static_cast<long>(std::ceil(span / h_)) : 0;
        const double h = steps > 0 ? span / static_cast<double>(steps) : 0.0;
        std::array<double, 4> y = {s.zeta, s.dzeta, s.action, s.a2};
        for (long n = 0; n < steps; ++n) {
            const double tt = s.t + static_cast<double>(n) * h;
            const auto k1 = rhs(tt, y);
            const auto k2 = rhs(tt + 0.5 * h, axpy(y, 0.5 * h, k1));
            const auto k3 = rhs(tt + 0.5 * h, axpy(y, 0.5 * h, k2));
            const auto k4 = rhs(tt + h, axpy(y, h, k3));
            for (std::size_t i = 0; i < 4; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        return State{t, y[0], y[1], y[2], y[3]};
    }

    /// Exact wave function at (x, y, z).
    std::complex<double> psi(const State& s, Gauge gauge, double x, double y, double z) const {
        const double dz = z - s.zeta;
        const double amp = std::pow(std::numbers::pi, -0.75) * std::exp(-0.5 * (x * x + y * y + dz * dz));
        double phase = s.dzeta * z - (1.5 * s.t + s.action);
        if (gauge == Gauge::velocity) phase += vector_potential(s.t) * z + s.a2;
        return std::polar(amp, phase);
    }

private:
    std::array<double, 4> rhs(double t, const std::array<double, 4>& y) const {
        const double a = vector_potential(t);
        return {y[1], force(t) - y[0], 0.5 * (y[1] * y[1] - y[0] * y[0]), 0.5 * a * a};
    }
    static std::array<double, 4> axpy(const std::array<double, 4>& y, double h, const std::array<double, 4>& k) {
        return {y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]};
    }

    double a0_, w_, h_;
};

} // namespace sphbt::reference

#endif
