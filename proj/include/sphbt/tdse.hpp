#ifndef SPHBT_TDSE_HPP
#define SPHBT_TDSE_HPP

// Split-operator propagation on the 3D DVR in real and imaginary time, pulse
// and potential models, and observables.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "sphbt/dvr3d.hpp"
#include "sphbt/errors.hpp"

namespace sphbt {

// ---------------------------------------------------------------- pulses

struct XuvPulse {
    double amplitude = 0.25;
    double frequency = 1.6;  // |E0| + 0.5 once the ground state is known
    double fwhm = 10.0;
    Vec3 polarization{0.0, 0.0, 1.0};
};

struct IrPulse {
    double amplitude = 0.05;
    double frequency = 0.062832;
    double duration = 200.0;
    double delay = 0.0;
    Vec3 polarization{0.0, 0.0, 1.0};
};

struct PulseSpec {
    enum class Kind { none, oscillator, streak };
    Kind kind = Kind::none;
    // oscillator drive: A(t) = -A0 sin(omega t)
    double drive_amplitude = 0.25;
    double drive_frequency = 1.0;
    Vec3 drive_polarization{0.0, 0.0, 1.0};
    XuvPulse xuv;
    IrPulse ir;

    static PulseSpec oscillator(double A0, double omega) {
        PulseSpec p;
        p.kind = Kind::oscillator;
        p.drive_amplitude = A0;
        p.drive_frequency = omega;
        return p;
    }
    static PulseSpec streak(const XuvPulse& xuv, const IrPulse& ir) {
        PulseSpec p;
        p.kind = Kind::streak;
        p.xuv = xuv;
        p.ir = ir;
        return p;
    }
};

struct FieldValue {
    Vec3 A{};
    Vec3 qE{};  // -dA/dt
};

namespace detail {

inline void check_unit(const Vec3& n, const char* what) {
    const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    if (std::abs(len - 1.0) > 1e-12) throw ConfigError(std::string(what) + ": polarization must be a unit vector");
}

inline void add_scaled(Vec3& v, const Vec3& n, double s) {
    for (int d = 0; d < 3; ++d) v[static_cast<std::size_t>(d)] += s * n[static_cast<std::size_t>(d)];
}

} // namespace detail

inline void validate(const PulseSpec& p) {
    if (p.kind == PulseSpec::Kind::oscillator) detail::check_unit(p.drive_polarization, "oscillator pulse");
    if (p.kind == PulseSpec::Kind::streak) {
        detail::check_unit(p.xuv.polarization, "xuv pulse");
        detail::check_unit(p.ir.polarization, "ir pulse");
        if (!(p.ir.duration > 0.0)) throw ConfigError("ir pulse: duration must be positive");
        if (!(p.xuv.fwhm > 0.0)) throw ConfigError("xuv pulse: fwhm must be positive");
    }
}

inline FieldValue field_at(const PulseSpec& p, double t) {
    FieldValue f;
    switch (p.kind) {
    case PulseSpec::Kind::none:
        break;
    case PulseSpec::Kind::oscillator: {
        const double w = p.drive_frequency, a = p.drive_amplitude;
        detail::add_scaled(f.A, p.drive_polarization, -a * std::sin(w * t));
        detail::add_scaled(f.qE, p.drive_polarization, w * a * std::cos(w * t));
        break;
    }
    case PulseSpec::Kind::streak: {
        const auto& x = p.xuv;
        const double g = std::exp(-2.0 * std::numbers::ln2 * t * t / (x.fwhm * x.fwhm));
        const double c = std::cos(x.frequency * t), s = std::sin(x.frequency * t);
        detail::add_scaled(f.A, x.polarization, -x.amplitude * g * c);
        const double dA = -x.amplitude * g * (-4.0 * std::numbers::ln2 * t / (x.fwhm * x.fwhm) * c - x.frequency * s);
        detail::add_scaled(f.qE, x.polarization, -dA);
        const auto& ir = p.ir;
        const double u = t - ir.delay;
        if (std::abs(u) < 0.5 * ir.duration) {
            const double ph = std::numbers::pi * u / ir.duration;
            const double env = std::cos(ph) * std::cos(ph);
            const double ci = std::cos(ir.frequency * u), si = std::sin(ir.frequency * u);
            detail::add_scaled(f.A, ir.polarization, -ir.amplitude * env * ci);
            const double denv = -std::numbers::pi / ir.duration * std::sin(2.0 * ph);
            const double dAi = -ir.amplitude * (denv * ci - env * ir.frequency * si);
            detail::add_scaled(f.qE, ir.polarization, -dAi);
        }
        break;
    }
    }
    return f;
}

// ---------------------------------------------------------------- potentials

enum class PotentialKind { none, oscillator, coulomb, effective, two_center_coulomb, two_center_effective };

struct PotentialSpec {
    PotentialKind kind = PotentialKind::none;
    double charge = 1.0;                // Z
    Vec3 center{0.0, 0.0, 0.0};         // single-center kinds
    double separation = 2.0;            // two-center kinds: nuclei at +-R/2 along axis
    Vec3 axis{0.0, 0.0, 1.0};
};

namespace detail {

inline double distance(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double node_distance(const Dvr3d& dvr, long i, int j, int k, const Vec3& center) {
    const double R = distance(dvr.position(i, j, k), center);
    if (R < 1e-10)
        throw ConfigError("potential: a nucleus coincides with grid node (i=" + std::to_string(i + 1) + ", j=" +
                          std::to_string(j + 1) + ", k=" + std::to_string(k + 1) + "); shift the grid");
    return R;
}

} // namespace detail

inline std::vector<double> oscillator_potential(const Dvr3d& dvr) {
    const auto& sh = dvr.shape();
    std::vector<double> u(sh.size());
    for (int j = 0; j < sh.n_theta; ++j)
        for (int k = 0; k < sh.n_phi; ++k)
            for (long i = 0; i < sh.n_r; ++i) u[sh.index(i, j, k)] = 0.5 * std::pow(dvr.radial().node(i + 1), 2);
    return u;
}

inline std::vector<double> coulomb_potential(const Dvr3d& dvr, double Z, const Vec3& center) {
    const auto& sh = dvr.shape();
    std::vector<double> u(sh.size());
    for (int j = 0; j < sh.n_theta; ++j)
        for (int k = 0; k < sh.n_phi; ++k)
            for (long i = 0; i < sh.n_r; ++i)
                u[sh.index(i, j, k)] = -Z / detail::node_distance(dvr, i, j, k, center);
    return u;
}

/// Soft-core potential u_Z for a nucleus at `center`: near the nucleus it
/// makes exp(-Z|r - a|) an exact eigenfunction of the discrete Hamiltonian
/// with energy -Z^2/2; far away it is -Z/|r - a|, blended by f = exp(-Z R).
/// Where f < mask_cutoff the potential is exactly -Z/|r - a|.
inline constexpr double mask_cutoff = 1e-8;

inline std::vector<double> effective_potential(const Dvr3d& dvr, double Z, const Vec3& center,
                                               Momenta momenta = Momenta::corrected) {
    if (!(Z > 0.0)) throw ConfigError("effective_potential: charge must be positive");
    const auto& sh = dvr.shape();
    const std::size_t n = sh.size();
    std::vector<double> R(n), phi(n);
    for (int j = 0; j < sh.n_theta; ++j)
        for (int k = 0; k < sh.n_phi; ++k)
            for (long i = 0; i < sh.n_r; ++i) {
                const auto s = sh.index(i, j, k);
                R[s] = detail::node_distance(dvr, i, j, k, center);
                phi[s] = std::exp(-Z * R[s]) * dvr.node_weight(i, j);
            }
    // (K - E) phi through the spectral transforms
    const double E = -0.5 * Z * Z;
    const auto& kin = dvr.kinetic(momenta);
    std::vector<cplx> c(phi.begin(), phi.end());
    dvr.to_spectral<cplx>(c, c);
    for (std::size_t s = 0; s < n; ++s) c[s] *= kin[s] - E;
    dvr.from_spectral<cplx>(c, c);
    std::vector<double> u(n);
    for (int j = 0; j < sh.n_theta; ++j)
        for (int k = 0; k < sh.n_phi; ++k)
            for (long i = 0; i < sh.n_r; ++i) {
                const auto s = sh.index(i, j, k);
                const double f = std::exp(-Z * R[s]);
                const double far = -Z / R[s];
                // below this the quotient is transform roundoff divided by a
                // tiny orbital; f times it would still reach ~1e-7
                if (f < mask_cutoff) {
                    u[s] = far;
                    continue;
                }
                if (phi[s] == 0.0)
                    throw NumericError("effective_potential: reference orbital vanishes at node (i=" +
                                       std::to_string(i + 1) + ", j=" + std::to_string(j + 1) + ", k=" +
                                       std::to_string(k + 1) + ")");
                const double tilde = -c[s].real() / phi[s];
                u[s] = f * tilde + (1.0 - f) * far;
            }
    return u;
}

inline std::vector<double> build_potential(const Dvr3d& dvr, const PotentialSpec& p,
                                           Momenta momenta = Momenta::corrected) {
    auto add = [](std::vector<double> a, const std::vector<double>& b) {
        for (std::size_t s = 0; s < a.size(); ++s) a[s] += b[s];
        return a;
    };
    const Vec3 h{0.5 * p.separation * p.axis[0], 0.5 * p.separation * p.axis[1], 0.5 * p.separation * p.axis[2]};
    const Vec3 mh{-h[0], -h[1], -h[2]};
    if ((p.kind == PotentialKind::two_center_coulomb || p.kind == PotentialKind::two_center_effective)) {
        if (!(p.separation > 0.0)) throw ConfigError("potential: separation must be positive");
        detail::check_unit(p.axis, "potential axis");
    }
    switch (p.kind) {
    case PotentialKind::none: return std::vector<double>(dvr.size(), 0.0);
    case PotentialKind::oscillator: return oscillator_potential(dvr);
    case PotentialKind::coulomb: return coulomb_potential(dvr, p.charge, p.center);
    case PotentialKind::effective: return effective_potential(dvr, p.charge, p.center, momenta);
    case PotentialKind::two_center_coulomb:
        return add(coulomb_potential(dvr, p.charge, h), coulomb_potential(dvr, p.charge, mh));
    case PotentialKind::two_center_effective:
        return add(effective_potential(dvr, p.charge, h, momenta), effective_potential(dvr, p.charge, mh, momenta));
    }
    return {};
}

// ---------------------------------------------------------------- observables

inline double norm(const SphericalField& f) { return std::sqrt(squared_norm<cplx>(f.values)); }

inline cplx overlap(const SphericalField& a, const SphericalField& b) {
    if (!(a.shape == b.shape)) throw DomainError("overlap: field shapes differ");
    cplx s{};
    for (std::size_t i = 0; i < a.values.size(); ++i) s += std::conj(a.values[i]) * b.values[i];
    return s;
}

/// delta = |1 - <ref|psi>|.
inline double overlap_error(const SphericalField& reference, const SphericalField& psi) {
    return std::abs(1.0 - overlap(reference, psi));
}

namespace detail {

/// Psi(r_i, eta, phi) for every radial node from the channel expansion.
inline std::vector<cplx> evaluate_direction(const Dvr3d& dvr, const std::vector<cplx>& channels, double eta,
                                            double phi) {
    const auto& sh = dvr.shape();
    const auto& ab = dvr.angular();
    const auto N = static_cast<std::size_t>(sh.n_r);
    std::vector<cplx> out(N);
    for (int q = 0; q < sh.n_phi; ++q) {
        const cplx e = std::polar(1.0, ab.m(q) * phi);
        for (int c = 0; c < sh.n_theta; ++c) {
            const double v = ab.channel_function(q, c, eta);
            if (v == 0.0) continue;
            const cplx* a = &channels[(static_cast<std::size_t>(q) * static_cast<std::size_t>(sh.n_theta) +
                                       static_cast<std::size_t>(c)) * N];
            for (std::size_t i = 0; i < N; ++i) out[i] += a[i] * (v * e);
        }
    }
    const double dr = dvr.radial().step;
    for (std::size_t i = 0; i < N; ++i)
        out[i] /= std::sqrt(2.0 * std::numbers::pi) * dvr.radial().node(static_cast<long>(i) + 1) * std::sqrt(dr);
    return out;
}

inline std::vector<cplx> angular_channels(const Dvr3d& dvr, const SphericalField& f) {
    std::vector<cplx> a(f.values.size());
    angular_transform<cplx>(dvr.angular(), f.values, a, static_cast<std::size_t>(dvr.shape().n_r), true);
    return a;
}

} // namespace detail

struct DensitySample {
    double r = 0.0;
    double density = 0.0;
};

/// P = |Psi|^2 along a ray given by (eta, phi); eta = 1 is the +z axis.
inline std::vector<DensitySample> density_ray(const Dvr3d& dvr, const SphericalField& f, double eta = 1.0,
                                              double phi = 0.0) {
    const auto a = detail::angular_channels(dvr, f);
    const auto v = detail::evaluate_direction(dvr, a, eta, phi);
    std::vector<DensitySample> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = {dvr.radial().node(static_cast<long>(i) + 1), std::norm(v[i])};
    return out;
}

struct PlaneSample {
    double x = 0.0;
    double z = 0.0;
    double density = 0.0;
};

/// P on the y = 0 plane at the polar nodes, for phi = 0 (x > 0) and phi = pi
/// (x < 0).
inline std::vector<PlaneSample> density_plane(const Dvr3d& dvr, const SphericalField& f) {
    const auto a = detail::angular_channels(dvr, f);
    const auto& sh = dvr.shape();
    std::vector<PlaneSample> out;
    out.reserve(static_cast<std::size_t>(2 * sh.n_theta) * static_cast<std::size_t>(sh.n_r));
    for (double phi : {0.0, std::numbers::pi}) {
        const double sx = phi == 0.0 ? 1.0 : -1.0;
        for (int j = 0; j < sh.n_theta; ++j) {
            const double ct = dvr.angular().eta(j), st = std::sqrt(1.0 - ct * ct);
            const auto v = detail::evaluate_direction(dvr, a, ct, phi);
            for (long i = 0; i < sh.n_r; ++i) {
                const double r = dvr.radial().node(i + 1);
                out.push_back({sx * r * st, r * ct, std::norm(v[static_cast<std::size_t>(i)])});
            }
        }
    }
    return out;
}

/// Fraction of the squared norm in the outermost radial shells.
inline double boundary_fraction(const SphericalField& f, long shells) {
    const auto& sh = f.shape;
    double edge = 0.0, total = 0.0;
    for (int j = 0; j < sh.n_theta; ++j)
        for (int k = 0; k < sh.n_phi; ++k)
            for (long i = 0; i < sh.n_r; ++i) {
                const double p = std::norm(f.values[sh.index(i, j, k)]);
                total += p;
                if (i >= sh.n_r - shells) edge += p;
            }
    return total > 0.0 ? edge / total : 0.0;
}

// ---------------------------------------------------------------- propagation

namespace detail {

/// c^2 + s^2 - 1 without rounding error in the sign.
inline long double modulus_excess(double c, double s) {
    const double a = c * c, b = s * s;
    const double ea = std::fma(c, c, -a), eb = std::fma(s, s, -b);
    return (static_cast<long double>(a) - 1.0L + static_cast<long double>(b)) + (static_cast<long double>(ea) + eb);
}

} // namespace detail

/// e^{i theta} with its modulus rounded down to at most 1. A factor applied on
/// every step with modulus 1 + 1e-16 would otherwise grow the norm steadily.
inline cplx unit_phase(double theta) {
    double c = std::cos(theta), s = std::sin(theta);
    while (detail::modulus_excess(c, s) > 0.0L) {
        if (std::abs(c) >= std::abs(s))
            c = std::nextafter(c, 0.0);
        else
            s = std::nextafter(s, 0.0);
    }
    return {c, s};
}

/// One symmetric split step
/// exp(-iU/2) (BY)^T exp(-iK/2) Y~ exp(i tau A.P) Y~^T exp(-iK/2) BY exp(-iU/2),
/// with U and A taken at t + tau/2. Not shareable across threads (workspace).
class SplitOperator {
public:
    SplitOperator(const Dvr3d& dvr, HamiltonianSpec spec, double tau)
        : dvr_(dvr), spec_(std::move(spec)), tau_(tau) {
        if (!(tau > 0.0)) throw DomainError("split step: tau must be positive");
        validate(dvr_, spec_);
        const auto& kin = dvr_.kinetic(spec_.momenta);
        eK_.resize(kin.size());
        for (std::size_t s = 0; s < kin.size(); ++s) eK_[s] = unit_phase(-kin[s] * tau_ / 2.0);
        if (!spec_.electric_force) eU_ = potential_factors(potential_at(dvr_, spec_, 0.0));
        work_.resize(dvr_.size());
    }

    double tau() const { return tau_; }
    const Dvr3d& dvr() const { return dvr_; }

    void step(std::span<cplx> psi, double t) const {
        const double th = t + 0.5 * tau_;
        const std::vector<cplx> eU_t = spec_.electric_force ? potential_factors(potential_at(dvr_, spec_, th))
                                                            : std::vector<cplx>{};
        const auto& eU = spec_.electric_force ? eU_t : eU_;
        const std::size_t n = psi.size();
        for (std::size_t s = 0; s < n; ++s) psi[s] *= eU[s];
        dvr_.to_spectral<cplx>(psi, psi);
        for (std::size_t s = 0; s < n; ++s) psi[s] *= eK_[s];
        if (spec_.vector_potential) {
            const auto ap = momentum_coupling(dvr_, spec_.vector_potential(th));
            dvr_.to_momentum_nodes(psi, work_);
            for (std::size_t s = 0; s < n; ++s) work_[s] *= unit_phase(tau_ * ap[s]);
            dvr_.from_momentum_nodes(work_, psi);
        }
        for (std::size_t s = 0; s < n; ++s) psi[s] *= eK_[s];
        dvr_.from_spectral<cplx>(psi, psi);
        for (std::size_t s = 0; s < n; ++s) psi[s] *= eU[s];
    }

private:
    std::vector<cplx> potential_factors(const std::vector<double>& u) const {
        std::vector<cplx> e(u.size());
        for (std::size_t s = 0; s < u.size(); ++s) e[s] = unit_phase(-u[s] * tau_ / 2.0);
        return e;
    }

    const Dvr3d& dvr_;
    HamiltonianSpec spec_;
    double tau_;
    std::vector<cplx> eK_, eU_;
    mutable std::vector<cplx> work_;
};

inline SphericalField split_step(const SphericalField& state, double t, double tau, const HamiltonianSpec& spec,
                                 const Dvr3d& dvr) {
    if (!(state.shape == dvr.shape())) throw DomainError("split_step: field shape does not match the DVR");
    SplitOperator op(dvr, spec, tau);
    SphericalField out = state;
    op.step(out.values, t);
    for (const auto& v : out.values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericError("split_step: non-finite state after step 1");
    return out;
}

struct PropagationSample {
    double t = 0.0;
    double norm = 0.0;
    std::optional<double> delta;
    std::optional<double> energy;
};

struct PropagationReport {
    std::vector<PropagationSample> samples;
    SphericalField final_state;
    long steps = 0;
    double tau = 0.0;
    std::vector<std::string> warnings;
};

struct PropagationOptions {
    long observe_every = 0;  // 0: only the first and last step
    std::function<SphericalField(double)> reference;  // exact solution, for delta(t)
    bool record_energy = false;
    std::vector<std::function<void(double, const SphericalField&)>> observers;
    double boundary_threshold = 1e-8;
    long boundary_shells = 0;  // 0: 2% of the radial grid, at least one shell
};

inline PropagationReport propagate(const SphericalField& initial, double t0, double t_fin, double tau,
                                   const HamiltonianSpec& spec, const Dvr3d& dvr,
                                   const PropagationOptions& opt = {}) {
    if (!(t0 < t_fin)) throw DomainError("propagate: need t0 < t_fin");
    if (!(tau > 0.0)) throw DomainError("propagate: tau must be positive");
    if (!(initial.shape == dvr.shape())) throw DomainError("propagate: field shape does not match the DVR");
    const long steps = std::max<long>(1, static_cast<long>(std::ceil((t_fin - t0) / tau - 1e-9)));
    const double h = (t_fin - t0) / static_cast<double>(steps);
    SplitOperator op(dvr, spec, h);
    const long shells = opt.boundary_shells > 0 ? opt.boundary_shells : std::max<long>(1, dvr.shape().n_r / 50);

    PropagationReport rep;
    rep.steps = steps;
    rep.tau = h;
    rep.final_state = initial;
    auto& psi = rep.final_state;
    bool warned = false;
    auto observe = [&](double t) {
        PropagationSample s;
        s.t = t;
        s.norm = norm(psi);
        if (opt.reference) s.delta = overlap_error(opt.reference(t), psi);
        if (opt.record_energy) s.energy = overlap(psi, apply_hamiltonian(spec, dvr, psi, t)).real() / (s.norm * s.norm);
        rep.samples.push_back(s);
        for (const auto& f : opt.observers) f(t, psi);
        const double edge = boundary_fraction(psi, shells);
        if (!warned && edge > opt.boundary_threshold) {
            warned = true;
            rep.warnings.push_back("density near the outer boundary reached " + std::to_string(edge) +
                                   " of the norm at t = " + std::to_string(t));
        }
    };
    observe(t0);
    for (long k = 1; k <= steps; ++k) {
        const double t = t0 + static_cast<double>(k - 1) * h;
        op.step(psi.values, t);
        if (!std::isfinite(squared_norm<cplx>(psi.values)))
            throw NumericError("propagate: non-finite state after step " + std::to_string(k));
        const double tk = t0 + static_cast<double>(k) * h;
        if (k == steps || (opt.observe_every > 0 && k % opt.observe_every == 0)) observe(k == steps ? t_fin : tk);
    }
    return rep;
}

// ---------------------------------------------------------------- imaginary time

struct ImaginaryTimeOptions {
    double tau = 0.0;                   // 0: dr^2 / 5
    double tol = 1e-10;                 // energy change per unit imaginary time
    long check_every = 50;
    long max_steps = 5'000'000;
    std::vector<int> degrees;           // allowed l; empty: all
    std::vector<int> azimuthal;         // allowed m; empty: all
    std::vector<SphericalField> trial;  // initial guesses; missing ones are generated
    std::uint64_t seed = 20240601;      // for the generated guesses
    std::function<void(int, long, double)> progress;  // (state, step, energy)
};

struct Eigenstate {
    double energy = 0.0;    // -ln(lambda) / tau, lambda the decay per step
    double rayleigh = 0.0;  // <psi|H|psi>
    long steps = 0;
    std::vector<double> history;  // energy at each check
    SphericalField state;
};

namespace detail {

template <class T>
class ImaginaryStep {
public:
    ImaginaryStep(const Dvr3d& dvr, const HamiltonianSpec& spec, double tau, std::vector<double> mask)
        : dvr_(dvr), mask_(std::move(mask)) {
        const auto u = potential_at(dvr, spec, 0.0);
        eU_.resize(u.size());
        for (std::size_t s = 0; s < u.size(); ++s) eU_[s] = std::exp(-0.5 * tau * u[s]);
        const auto& kin = dvr.kinetic(spec.momenta);
        eK_.resize(kin.size());
        for (std::size_t s = 0; s < kin.size(); ++s) eK_[s] = std::exp(-tau * kin[s]) * mask_[s];
    }
    void apply(std::span<const T> in, std::span<T> out) const {
        const std::size_t n = in.size();
        for (std::size_t s = 0; s < n; ++s) out[s] = in[s] * eU_[s];
        dvr_.to_spectral<T>(std::span<const T>(out.data(), n), out);
        for (std::size_t s = 0; s < n; ++s) out[s] *= eK_[s];
        dvr_.from_spectral<T>(std::span<const T>(out.data(), n), out);
        for (std::size_t s = 0; s < n; ++s) out[s] *= eU_[s];
    }
    /// Zeroes the channels outside the filter.
    void project(std::span<T> v) const {
        dvr_.to_spectral<T>(std::span<const T>(v.data(), v.size()), v);
        for (std::size_t s = 0; s < v.size(); ++s) v[s] *= mask_[s];
        dvr_.from_spectral<T>(std::span<const T>(v.data(), v.size()), v);
    }

private:
    const Dvr3d& dvr_;
    std::vector<double> mask_;
    std::vector<double> eU_, eK_;
};

template <class T>
T inner(std::span<const T> a, std::span<const T> b) {
    T s{};
    if constexpr (std::is_floating_point_v<T>) {
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    }
    return s;
}

template <class T>
void orthonormalize(std::span<T> v, const std::vector<std::vector<T>>& lower) {
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& w : lower) {
            const T d = inner<T>(w, std::span<const T>(v.data(), v.size()));
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * w[i];
        }
    const double nrm = std::sqrt(squared_norm<T>(std::span<const T>(v.data(), v.size())));
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericError("imaginary_time_solve: state vanished");
    for (auto& e : v) e /= nrm;
}

template <class T>
std::vector<Eigenstate> imaginary_time_impl(const HamiltonianSpec& spec, const Dvr3d& dvr, int n_states,
                                            const ImaginaryTimeOptions& opt, double tau) {
    const auto& sh = dvr.shape();
    const std::size_t n = sh.size(), N = static_cast<std::size_t>(sh.n_r);
    std::vector<double> mask(n, 1.0);
    for (std::size_t ch = 0; ch < dvr.channel_count(); ++ch) {
        const int l = dvr.channel_degree(ch);
        const int m = dvr.angular().m(static_cast<int>(ch / static_cast<std::size_t>(sh.n_theta)));
        bool ok = opt.degrees.empty() || std::find(opt.degrees.begin(), opt.degrees.end(), l) != opt.degrees.end();
        ok = ok && (opt.azimuthal.empty() ||
                    std::find(opt.azimuthal.begin(), opt.azimuthal.end(), m) != opt.azimuthal.end());
        if (!ok) std::fill(mask.begin() + static_cast<long>(ch * N), mask.begin() + static_cast<long>((ch + 1) * N), 0.0);
    }
    if (std::all_of(mask.begin(), mask.end(), [](double v) { return v == 0.0; }))
        throw ConfigError("imaginary_time_solve: the channel filter excludes every channel");
    ImaginaryStep<T> S(dvr, spec, tau, mask);

    std::vector<std::vector<T>> found;
    std::vector<Eigenstate> out;
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss;
    std::vector<T> next(n);
    for (int st = 0; st < n_states; ++st) {
        std::vector<T> v(n);
        if (static_cast<std::size_t>(st) < opt.trial.size()) {
            const auto& tr = opt.trial[static_cast<std::size_t>(st)];
            if (!(tr.shape == sh)) throw DomainError("imaginary_time_solve: trial state shape does not match the DVR");
            for (std::size_t s = 0; s < n; ++s) {
                if constexpr (std::is_floating_point_v<T>)
                    v[s] = tr.values[s].real();
                else
                    v[s] = tr.values[s];
            }
        } else {
            // smooth random guess: low-momentum spectral content
            const auto& kin = dvr.kinetic(spec.momenta);
            for (std::size_t s = 0; s < n; ++s) v[s] = T(gauss(rng) * std::exp(-kin[s]));
            dvr.from_spectral<T>(std::span<const T>(v.data(), n), v);
        }
        S.project(v);
        orthonormalize<T>(v, found);
        Eigenstate es;
        double prev = std::numeric_limits<double>::infinity();
        double energy = prev, change = prev;
        long step = 0;
        for (;;) {
            S.apply(v, next);
            ++step;
            const double lambda = std::real(inner<T>(v, next));
            if (!(lambda > 0.0)) throw NumericError("imaginary_time_solve: non-positive decay factor");
            energy = -std::log(lambda) / tau;
            std::swap(v, next);
            orthonormalize<T>(v, found);
            if (step % opt.check_every == 0) {
                es.history.push_back(energy);
                if (opt.progress) opt.progress(st, step, energy);
                change = std::abs(energy - prev) / (static_cast<double>(opt.check_every) * tau);
                if (change < opt.tol) break;
                prev = energy;
            }
            if (step >= opt.max_steps)
                throw ConvergenceError("imaginary_time_solve: state " + std::to_string(st) + " not converged after " +
                                           std::to_string(step) + " steps",
                                       change);
        }
        es.energy = energy;
        es.steps = step;
        es.state.shape = sh;
        es.state.values.resize(n);
        for (std::size_t s = 0; s < n; ++s) es.state.values[s] = cplx(v[s]);
        es.rayleigh = overlap(es.state, apply_hamiltonian(spec, dvr, es.state, 0.0)).real();
        found.push_back(v);
        out.push_back(std::move(es));
    }
    return out;
}

} // namespace detail

/// Lowest n_states eigenstates within the channel filter by imaginary-time
/// relaxation; each state is orthogonalized against the lower ones on every
/// step. The Hamiltonian must be time independent.
inline std::vector<Eigenstate> imaginary_time_solve(const HamiltonianSpec& spec, const Dvr3d& dvr, int n_states,
                                                    const ImaginaryTimeOptions& opt = {}) {
    if (n_states < 1) throw DomainError("imaginary_time_solve: n_states must be >= 1");
    if (spec.vector_potential || spec.electric_force)
        throw DomainError("imaginary_time_solve: the Hamiltonian must not depend on time");
    if (opt.check_every < 1) throw DomainError("imaginary_time_solve: check_every must be >= 1");
    validate(dvr, spec);
    const double dr = dvr.radial().step;
    const double tau = opt.tau > 0.0 ? opt.tau : dr * dr / 5.0;
    if (dvr.shape().n_phi == 1) return detail::imaginary_time_impl<double>(spec, dvr, n_states, opt, tau);
    return detail::imaginary_time_impl<cplx>(spec, dvr, n_states, opt, tau);
}

} // namespace sphbt

#endif
