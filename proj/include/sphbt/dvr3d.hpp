#ifndef SPHBT_DVR3D_HPP
#define SPHBT_DVR3D_HPP

// Three-dimensional DVR: field samples psi_ijk = Psi(r_i, theta_j, phi_k)
// r_i sqrt(dr deta_j dphi) with layout [j][k][i], and spectral coefficients
// c with layout [q][c][u], where (q, c) is an angular channel (see
// AngularBasis) and u = 0..N-1 indexes the unified momentum k~ = (u + 1) dk.
//
// Per channel of degree l the radial DSBT produces modes n = p_l..N_l. Mode
// n >= 1 goes to u = n - 1; the n = 0 mode of odd l goes to u = N - 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "sphbt/angular.hpp"
#include "sphbt/errors.hpp"
#include "sphbt/parallel.hpp"
#include "sphbt/radial_transform.hpp"

namespace sphbt {

using Vec3 = std::array<double, 3>;

enum class Momenta { plain, corrected };

inline const char* to_string(Momenta m) { return m == Momenta::plain ? "plain" : "corrected"; }

struct FieldShape {
    long n_r = 0;
    int n_theta = 0;
    int n_phi = 0;
    std::size_t size() const {
        return static_cast<std::size_t>(n_r) * static_cast<std::size_t>(n_theta) * static_cast<std::size_t>(n_phi);
    }
    std::size_t index(long i, int j, int k) const {
        return (static_cast<std::size_t>(j) * static_cast<std::size_t>(n_phi) + static_cast<std::size_t>(k)) *
                   static_cast<std::size_t>(n_r) +
               static_cast<std::size_t>(i);
    }
    bool operator==(const FieldShape&) const = default;
};

struct SphericalField {
    FieldShape shape;
    std::vector<cplx> values;
};

struct SpectralField {
    FieldShape shape;
    std::vector<cplx> values;
};

template <class T>
double squared_norm(std::span<const T> v) {
    double s = 0.0;
    for (const auto& e : v) s += std::norm(e);
    return s;
}

class Dvr3d {
public:
    using PlanMap = std::map<int, std::shared_ptr<const RadialTransformPlan>>;

    /// Builds plans for every degree the angular basis needs.
    Dvr3d(const RadialGrid& grid, int n_theta, int n_phi, int max_degree = default_max_degree)
        : Dvr3d(grid, AngularBasis(n_theta, n_phi), make_plans(grid, AngularBasis(n_theta, n_phi), max_degree)) {}

    Dvr3d(const RadialGrid& grid, AngularBasis basis, PlanMap plans)
        : grid_(grid), basis_(std::move(basis)), plans_(std::move(plans)) {
        shape_ = {grid.count, basis_.n_theta(), basis_.n_phi()};
        for (int q = 0; q < basis_.n_phi(); ++q)
            for (int c = 0; c < basis_.n_theta(); ++c) {
                const int l = basis_.degree(q, c);
                const auto it = plans_.find(l);
                if (it == plans_.end() || !it->second)
                    throw ConfigError("Dvr3d: no radial plan for degree " + std::to_string(l));
                if (it->second->radial().count != grid.count || it->second->radial().step != grid.step)
                    throw ConfigError("Dvr3d: radial plan for degree " + std::to_string(l) + " uses another grid");
            }
    }

    static PlanMap make_plans(const RadialGrid& grid, const AngularBasis& basis, int max_degree) {
        PlanMap plans;
        for (int l = 0; l <= basis.max_degree(); ++l)
            plans.emplace(l, std::make_shared<const RadialTransformPlan>(make_plan(l, grid, max_degree)));
        return plans;
    }

    const RadialGrid& radial() const { return grid_; }
    const AngularBasis& angular() const { return basis_; }
    const FieldShape& shape() const { return shape_; }
    std::size_t size() const { return shape_.size(); }
    const RadialTransformPlan& plan(int l) const { return *plans_.at(l); }
    std::size_t channel_count() const {
        return static_cast<std::size_t>(basis_.n_theta()) * static_cast<std::size_t>(basis_.n_phi());
    }
    int channel_degree(std::size_t ch) const {
        return basis_.degree(static_cast<int>(ch / static_cast<std::size_t>(basis_.n_theta())),
                             static_cast<int>(ch % static_cast<std::size_t>(basis_.n_theta())));
    }

    /// Unified index of plan slot s for degree l.
    long unified(int l, long s) const {
        const long n = s + (l % 2 == 0 ? 1 : 0);
        return n == 0 ? grid_.count - 1 : n - 1;
    }
    double momentum_step() const { return std::numbers::pi / grid_.extent(); }
    /// k~_u = (u + 1) dk.
    double momentum(long u) const { return static_cast<double>(u + 1) * momentum_step(); }

    /// r_i sqrt(dr deta_j dphi): the factor between Psi and psi_ijk.
    double node_weight(long i, int j) const {
        return grid_.node(i + 1) * std::sqrt(grid_.step * basis_.eta_weight(j) * basis_.phi_step());
    }
    Vec3 position(long i, int j, int k) const {
        const double r = grid_.node(i + 1), ct = basis_.eta(j), st = std::sqrt(1.0 - ct * ct);
        const double ph = basis_.phi(k);
        return {r * st * std::cos(ph), r * st * std::sin(ph), r * ct};
    }
    /// Unit vector of the angular node (j, k).
    Vec3 direction(int j, int k) const {
        const double ct = basis_.eta(j), st = std::sqrt(1.0 - ct * ct), ph = basis_.phi(k);
        return {st * std::cos(ph), st * std::sin(ph), ct};
    }

    /// Samples Psi(x, y, z) into the DVR representation.
    template <class F>
    SphericalField sample(F&& psi) const {
        SphericalField f{shape_, std::vector<cplx>(size())};
        for (int j = 0; j < shape_.n_theta; ++j)
            for (int k = 0; k < shape_.n_phi; ++k)
                for (long i = 0; i < shape_.n_r; ++i) {
                    const auto x = position(i, j, k);
                    f.values[shape_.index(i, j, k)] = cplx(psi(x[0], x[1], x[2])) * node_weight(i, j);
                }
        return f;
    }

    /// k^2/2 per spectral entry. Completion modes (n < n_0l) get k~_N^2/2.
    const std::vector<double>& kinetic(Momenta which) const {
        std::lock_guard lock(cache_->mutex);
        auto& cache = which == Momenta::plain ? cache_->plain : cache_->corrected;
        if (cache.empty()) {
            const long N = grid_.count;
            const double top = momentum(N - 1);
            cache.assign(size(), 0.0);
            std::map<int, std::vector<double>> corrected;
            for (std::size_t ch = 0; ch < channel_count(); ++ch) {
                const int l = channel_degree(ch);
                const auto& pl = plan(l);
                const auto& mg = pl.momentum();
                const std::vector<double>* kc = nullptr;
                if (which == Momenta::corrected) {
                    auto it = corrected.find(l);
                    if (it == corrected.end()) it = corrected.emplace(l, corrected_momenta(pl)).first;
                    kc = &it->second;
                }
                for (long s = 0; s < N; ++s) {
                    const long n = mg.mode(s);
                    double k = top;
                    if (n >= mg.first_regular) k = kc ? (*kc)[static_cast<std::size_t>(s)] : mg.k(n);
                    cache[ch * static_cast<std::size_t>(N) + static_cast<std::size_t>(unified(l, s))] = 0.5 * k * k;
                }
            }
        }
        return cache;
    }

    /// c = B Y psi.
    template <class T>
    void to_spectral(std::span<const T> in, std::span<T> out) const {
        angular_transform<T>(basis_, in, out, static_cast<std::size_t>(grid_.count), true);
        radial_stage<T>(out, Direction::forward);
    }
    /// psi = Y^T B^T c.
    template <class T>
    void from_spectral(std::span<const T> in, std::span<T> out) const {
        if (in.data() != out.data()) std::copy(in.begin(), in.end(), out.begin());
        radial_stage<T>(out, Direction::inverse);
        angular_transform<T>(basis_, std::span<const T>(out.data(), out.size()), out,
                             static_cast<std::size_t>(grid_.count), false);
    }
    /// Spectral coefficients to the momentum DVR [j][k][u] (modified adjoint).
    void to_momentum_nodes(std::span<const cplx> in, std::span<cplx> out) const {
        angular_transform<cplx>(basis_, in, out, static_cast<std::size_t>(grid_.count), false, AngularVariant::modified);
    }
    void from_momentum_nodes(std::span<const cplx> in, std::span<cplx> out) const {
        angular_transform<cplx>(basis_, in, out, static_cast<std::size_t>(grid_.count), true, AngularVariant::modified);
    }

private:
    template <class T>
    void radial_stage(std::span<T> data, Direction dir) const {
        const auto N = static_cast<std::size_t>(grid_.count);
        if (data.size() != size())
            throw DomainError("Dvr3d: expected " + std::to_string(size()) + " values, got " + std::to_string(data.size()));
        parallel_for(channel_count(), [&](std::size_t ch) {
            const int l = channel_degree(ch);
            std::span<T> v = data.subspan(ch * N, N);
            if (l % 2 == 0) {
                plan(l).template dsbt<T>(std::span<const T>(v.data(), N), v, dir);
                return;
            }
            // odd l: slot 0 (n = 0) sits at the top of the unified grid
            if (dir == Direction::forward) {
                plan(l).template dsbt<T>(std::span<const T>(v.data(), N), v, dir);
                std::rotate(v.begin(), v.begin() + 1, v.end());
            } else {
                std::rotate(v.begin(), v.end() - 1, v.end());
                plan(l).template dsbt<T>(std::span<const T>(v.data(), N), v, dir);
            }
        });
    }

    RadialGrid grid_;
    AngularBasis basis_;
    PlanMap plans_;
    FieldShape shape_;
    struct KineticCache {
        std::mutex mutex;
        std::vector<double> plain, corrected;
    };
    std::shared_ptr<KineticCache> cache_ = std::make_shared<KineticCache>();
};

inline SpectralField spectral_transform(const Dvr3d& dvr, const SphericalField& f) {
    if (!(f.shape == dvr.shape())) throw DomainError("spectral_transform: field shape does not match the DVR");
    SpectralField c{f.shape, std::vector<cplx>(f.values.size())};
    dvr.to_spectral<cplx>(f.values, c.values);
    return c;
}

inline SphericalField spectral_transform(const Dvr3d& dvr, const SpectralField& c) {
    if (!(c.shape == dvr.shape())) throw DomainError("spectral_transform: field shape does not match the DVR");
    SphericalField f{c.shape, std::vector<cplx>(c.values.size())};
    dvr.from_spectral<cplx>(c.values, f.values);
    return f;
}

/// H = Y^T B^T [K - Y~ (A.P) Y~^T] B Y + U - qE.r, with A(t) and qE(t)
/// optional. U is sampled on the nodes in field layout.
struct HamiltonianSpec {
    Momenta momenta = Momenta::plain;
    std::vector<double> potential;
    std::function<Vec3(double)> vector_potential;
    std::function<Vec3(double)> electric_force;
};

inline void validate(const Dvr3d& dvr, const HamiltonianSpec& spec) {
    if (spec.potential.empty()) return;
    const auto& sh = dvr.shape();
    if (spec.potential.size() != sh.size())
        throw DomainError("HamiltonianSpec: potential has " + std::to_string(spec.potential.size()) +
                          " samples, the grid has " + std::to_string(sh.size()));
    for (int j = 0; j < sh.n_theta; ++j)
        for (int k = 0; k < sh.n_phi; ++k)
            for (long i = 0; i < sh.n_r; ++i)
                if (!std::isfinite(spec.potential[sh.index(i, j, k)]))
                    throw NumericError("HamiltonianSpec: potential is not finite at node (i=" + std::to_string(i + 1) +
                                       ", j=" + std::to_string(j + 1) + ", k=" + std::to_string(k + 1) + ")");
}

/// U(t) - qE(t).r on the nodes.
inline std::vector<double> potential_at(const Dvr3d& dvr, const HamiltonianSpec& spec, double t) {
    std::vector<double> u = spec.potential.empty() ? std::vector<double>(dvr.size(), 0.0) : spec.potential;
    if (spec.electric_force) {
        const Vec3 f = spec.electric_force(t);
        const auto& sh = dvr.shape();
        for (int j = 0; j < sh.n_theta; ++j)
            for (int k = 0; k < sh.n_phi; ++k)
                for (long i = 0; i < sh.n_r; ++i) {
                    const Vec3 x = dvr.position(i, j, k);
                    u[sh.index(i, j, k)] -= f[0] * x[0] + f[1] * x[1] + f[2] * x[2];
                }
    }
    return u;
}

/// k~_u (A . n_jk) on the momentum DVR, layout [j][k][u].
inline std::vector<double> momentum_coupling(const Dvr3d& dvr, const Vec3& A) {
    const auto& sh = dvr.shape();
    std::vector<double> out(sh.size());
    for (int j = 0; j < sh.n_theta; ++j)
        for (int k = 0; k < sh.n_phi; ++k) {
            const Vec3 n = dvr.direction(j, k);
            const double an = A[0] * n[0] + A[1] * n[1] + A[2] * n[2];
            for (long u = 0; u < sh.n_r; ++u) out[sh.index(u, j, k)] = dvr.momentum(u) * an;
        }
    return out;
}

inline SphericalField apply_hamiltonian(const HamiltonianSpec& spec, const Dvr3d& dvr, const SphericalField& psi,
                                        double t) {
    if (!(psi.shape == dvr.shape())) throw DomainError("apply_hamiltonian: field shape does not match the DVR");
    validate(dvr, spec);
    const std::size_t n = dvr.size();
    std::vector<cplx> c(n);
    dvr.to_spectral<cplx>(psi.values, c);
    const auto& kin = dvr.kinetic(spec.momenta);
    std::vector<cplx> hc(n);
    for (std::size_t s = 0; s < n; ++s) hc[s] = kin[s] * c[s];
    if (spec.vector_potential) {
        const auto ap = momentum_coupling(dvr, spec.vector_potential(t));
        std::vector<cplx> z(n);
        dvr.to_momentum_nodes(c, z);
        for (std::size_t s = 0; s < n; ++s) z[s] *= ap[s];
        dvr.from_momentum_nodes(z, z);
        for (std::size_t s = 0; s < n; ++s) hc[s] -= z[s];
    }
    SphericalField out{psi.shape, std::vector<cplx>(n)};
    dvr.from_spectral<cplx>(hc, out.values);
    const auto u = potential_at(dvr, spec, t);
    for (std::size_t s = 0; s < n; ++s) out.values[s] += u[s] * psi.values[s];
    return out;
}

} // namespace sphbt

#endif
