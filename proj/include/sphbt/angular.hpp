#ifndef SPHBT_ANGULAR_HPP
#define SPHBT_ANGULAR_HPP

// Angular grid and transforms. Polar angle: N_theta Gauss-Legendre nodes
// eta_j = cos(theta_j). Azimuth: N_phi uniform nodes phi_k = 2 pi k / N_phi.
//
// Each azimuthal channel m owns a square block of N_theta polar channels,
// l = |m| .. |m| + N_theta - 1, orthonormalized on the quadrature. For m = 0
// the block is exactly the normalized Legendre table.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "sphbt/errors.hpp"

namespace sphbt {

struct GaussLegendre {
    std::vector<double> nodes;    // ascending
    std::vector<double> weights;
};

namespace detail {

// Nodes and weights in long double, rounded once at the end.
inline std::pair<std::vector<long double>, std::vector<long double>> gauss_legendre_wide(int n) {
    std::vector<long double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    auto legendre = [n](long double t, long double& p1, long double& p0) {
        p0 = 1.0L;
        p1 = t;
        for (int k = 2; k <= n; ++k) {
            const long double p2 = ((2.0L * k - 1.0L) * t * p1 - (k - 1.0L) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        if (n == 0) p1 = 1.0L;
    };
    for (int i = 0; i < (n + 1) / 2; ++i) {
        long double t = std::cos(std::numbers::pi_v<long double> * (i + 0.75L) / (n + 0.5L));
        long double p1 = 0, p0 = 0;
        for (int it = 0; it < 100; ++it) {
            legendre(t, p1, p0);
            const long double dp = n * (t * p1 - p0) / (t * t - 1.0L);
            const long double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-19L) break;
        }
        if (n % 2 == 1 && i == n / 2) t = 0.0L;
        legendre(t, p1, p0);
        const long double dp = n * (t * p1 - p0) / (t * t - 1.0L);
        const auto lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(n - 1 - i);
        x[lo] = -t;
        x[hi] = t;
        w[lo] = w[hi] = 2.0L / ((1.0L - t * t) * dp * dp);
    }
    return {x, w};
}

template <class R>
std::vector<R> assoc_legendre_impl(int lmax, int m, R x) {
    if (m < 0 || lmax < m) throw DomainError("assoc_legendre: need 0 <= m <= lmax");
    std::vector<R> out(static_cast<std::size_t>(lmax - m + 1));
    // P^m_m = sqrt((2m+1)/2 * (2m-1)!! / (2m)!!) (1 - x^2)^(m/2)
    R pmm = std::sqrt(R(0.5));
    const R s = std::sqrt(std::max(R(0), R(1) - x * x));
    for (int k = 1; k <= m; ++k) pmm *= std::sqrt(R(2 * k + 1) / R(2 * k)) * s;
    out[0] = pmm;
    if (lmax == m) return out;
    out[1] = x * std::sqrt(R(2 * m + 3)) * pmm;
    for (int l = m + 2; l <= lmax; ++l) {
        const R a = std::sqrt(R(4 * l * l - 1) / R(l * l - m * m));
        const R b = std::sqrt(R((l - 1) * (l - 1) - m * m) / R(4 * (l - 1) * (l - 1) - 1));
        const auto i = static_cast<std::size_t>(l - m);
        out[i] = a * (x * out[i - 1] - b * out[i - 2]);
    }
    return out;
}

} // namespace detail

inline GaussLegendre gauss_legendre(int n) {
    if (n < 1) throw DomainError("gauss_legendre: need at least one node, got " + std::to_string(n));
    const auto [x, w] = detail::gauss_legendre_wide(n);
    return {std::vector<double>(x.begin(), x.end()), std::vector<double>(w.begin(), w.end())};
}

/// Normalized associated Legendre functions P^m_l(x), l = m..lmax, with
/// int_{-1}^{1} (P^m_l)^2 dx = 1 and no Condon-Shortley phase.
inline std::vector<double> assoc_legendre(int lmax, int m, double x) {
    return detail::assoc_legendre_impl<double>(lmax, m, x);
}

enum class AngularVariant { plain, modified };

class AngularBasis {
public:
    AngularBasis(int n_theta, int n_phi) : n_theta_(n_theta), n_phi_(n_phi) {
        if (n_theta < 1) throw DomainError("AngularBasis: n_theta must be >= 1, got " + std::to_string(n_theta));
        if (n_phi < 1) throw DomainError("AngularBasis: n_phi must be >= 1, got " + std::to_string(n_phi));
        const auto [xw, ww] = detail::gauss_legendre_wide(n_theta);
        eta_.assign(xw.begin(), xw.end());
        weight_.assign(ww.begin(), ww.end());
        for (int q = 0; q < n_phi; ++q) m_.push_back(2 * q < n_phi ? q : q - n_phi);
        const auto Nt = static_cast<std::size_t>(n_theta);
        block_.resize(static_cast<std::size_t>(n_phi));
        mix_.resize(static_cast<std::size_t>(n_phi));
        for (int q = 0; q < n_phi; ++q) {
            const int am = std::abs(m_[static_cast<std::size_t>(q)]);
            // built in long double and rounded once, so the stored block is
            // orthogonal up to unbiased rounding
            std::vector<long double> B(Nt * Nt, 0.0L), L(Nt * Nt, 0.0L);
            for (std::size_t j = 0; j < Nt; ++j) {
                const auto P = detail::assoc_legendre_impl<long double>(am + n_theta - 1, am, xw[j]);
                for (std::size_t c = 0; c < Nt; ++c) B[c * Nt + j] = P[c] * std::sqrt(ww[j]);
            }
            for (std::size_t c = 0; c < Nt; ++c) L[c * Nt + c] = 1.0L;
            // Gram-Schmidt, twice, tracking the lower-triangular mixing matrix
            for (int pass = 0; pass < (am == 0 ? 0 : 2); ++pass) {
                for (std::size_t c = 0; c < Nt; ++c) {
                    for (std::size_t d = 0; d < c; ++d) {
                        long double dot = 0.0L;
                        for (std::size_t j = 0; j < Nt; ++j) dot += B[c * Nt + j] * B[d * Nt + j];
                        for (std::size_t j = 0; j < Nt; ++j) B[c * Nt + j] -= dot * B[d * Nt + j];
                        for (std::size_t e = 0; e <= d; ++e) L[c * Nt + e] -= dot * L[d * Nt + e];
                    }
                    long double nrm = 0.0L;
                    for (std::size_t j = 0; j < Nt; ++j) nrm += B[c * Nt + j] * B[c * Nt + j];
                    nrm = std::sqrt(nrm);
                    if (!(nrm > 1e-12L))
                        throw NumericError("AngularBasis: degenerate polar block for m = " + std::to_string(m_[static_cast<std::size_t>(q)]));
                    for (std::size_t j = 0; j < Nt; ++j) B[c * Nt + j] /= nrm;
                    for (std::size_t e = 0; e <= c; ++e) L[c * Nt + e] /= nrm;
                }
            }
            block_[static_cast<std::size_t>(q)].assign(B.begin(), B.end());
            mix_[static_cast<std::size_t>(q)].assign(L.begin(), L.end());
        }
    }

    int n_theta() const { return n_theta_; }
    int n_phi() const { return n_phi_; }
    double eta(int j) const { return eta_[static_cast<std::size_t>(j)]; }
    double eta_weight(int j) const { return weight_[static_cast<std::size_t>(j)]; }
    double phi_step() const { return 2.0 * std::numbers::pi / n_phi_; }
    double phi(int k) const { return phi_step() * k; }
    const std::vector<double>& etas() const { return eta_; }
    const std::vector<double>& eta_weights() const { return weight_; }

    /// Azimuthal number of channel block q (DFT ordering).
    int m(int q) const { return m_[static_cast<std::size_t>(q)]; }
    /// Degree l of polar channel c in block q.
    int degree(int q, int c) const { return std::abs(m(q)) + c; }
    int max_degree() const { return n_theta_ - 1 + n_phi_ / 2; }
    /// Row-major N_theta x N_theta orthogonal matrix of block q: row c, column j.
    std::span<const double> block(int q) const { return block_[static_cast<std::size_t>(q)]; }

    /// Polar function of channel (q, c) at an arbitrary eta; equals
    /// block(q)[c][j] / sqrt(w_j) on the nodes.
    double channel_function(int q, int c, double x) const {
        const int am = std::abs(m(q));
        const auto P = assoc_legendre(am + n_theta_ - 1, am, x);
        const auto Nt = static_cast<std::size_t>(n_theta_);
        const auto& L = mix_[static_cast<std::size_t>(q)];
        double v = 0.0;
        for (std::size_t e = 0; e <= static_cast<std::size_t>(c); ++e) v += L[static_cast<std::size_t>(c) * Nt + e] * P[e];
        return v;
    }

    /// Phase of channel degree l in the modified variant: i^l.
    static std::complex<double> phase(int l) {
        switch (l % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
        }
    }

private:
    int n_theta_, n_phi_;
    std::vector<double> eta_, weight_;
    std::vector<int> m_;
    std::vector<std::vector<double>> block_;
    std::vector<std::vector<double>> mix_;
};

/// Angular transform of a field with layout [j][k][i] (i fastest, stride
/// `inner`) into channels with layout [q][c][i]. Forward applies the unitary
/// azimuthal DFT and then the polar blocks; the modified variant multiplies
/// channel degree l by i^l. Inverse is the adjoint. Real element types need
/// N_phi = 1 and the plain variant.
template <class T>
void angular_transform(const AngularBasis& basis, std::span<const T> in, std::span<T> out, std::size_t inner,
                       bool forward, AngularVariant variant = AngularVariant::plain) {
    const auto Nt = static_cast<std::size_t>(basis.n_theta()), Np = static_cast<std::size_t>(basis.n_phi());
    const std::size_t total = Nt * Np * inner;
    if (in.size() != total || out.size() != total)
        throw DomainError("angular_transform: expected " + std::to_string(total) + " values, got " +
                          std::to_string(in.size()) + " in and " + std::to_string(out.size()) + " out");
    constexpr bool is_complex = !std::is_floating_point_v<T>;
    if constexpr (!is_complex) {
        if (Np != 1 || variant == AngularVariant::modified)
            throw DomainError("angular_transform: real data needs n_phi = 1 and the plain variant");
    }
    std::vector<T> tmp(total);
    if (forward) {
        // azimuth: [j][k][i] -> [q][j][i]
        if (Np == 1) {
            std::copy(in.begin(), in.end(), tmp.begin());
        } else if constexpr (is_complex) {
            const double s = 1.0 / std::sqrt(static_cast<double>(Np));
            for (std::size_t q = 0; q < Np; ++q) {
                std::vector<T> tw(Np);
                for (std::size_t k = 0; k < Np; ++k)
                    tw[k] = std::polar(s, -basis.m(static_cast<int>(q)) * basis.phi(static_cast<int>(k)));
                for (std::size_t j = 0; j < Nt; ++j) {
                    T* dst = &tmp[(q * Nt + j) * inner];
                    std::fill(dst, dst + inner, T{});
                    for (std::size_t k = 0; k < Np; ++k) {
                        const T* src = &in[(j * Np + k) * inner];
                        for (std::size_t i = 0; i < inner; ++i) dst[i] += tw[k] * src[i];
                    }
                }
            }
        }
        for (std::size_t q = 0; q < Np; ++q) {
            const auto B = basis.block(static_cast<int>(q));
            for (std::size_t c = 0; c < Nt; ++c) {
                T* dst = &out[(q * Nt + c) * inner];
                std::fill(dst, dst + inner, T{});
                for (std::size_t j = 0; j < Nt; ++j) {
                    const double b = B[c * Nt + j];
                    const T* src = &tmp[(q * Nt + j) * inner];
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += b * src[i];
                }
                if constexpr (is_complex) {
                    if (variant == AngularVariant::modified) {
                        const T ph = AngularBasis::phase(basis.degree(static_cast<int>(q), static_cast<int>(c)));
                        for (std::size_t i = 0; i < inner; ++i) dst[i] *= ph;
                    }
                }
            }
        }
    } else {
        for (std::size_t q = 0; q < Np; ++q) {
            const auto B = basis.block(static_cast<int>(q));
            for (std::size_t j = 0; j < Nt; ++j) {
                T* dst = &tmp[(q * Nt + j) * inner];
                std::fill(dst, dst + inner, T{});
                for (std::size_t c = 0; c < Nt; ++c) {
                    T b = B[c * Nt + j];
                    if constexpr (is_complex) {
                        if (variant == AngularVariant::modified)
                            b *= std::conj(AngularBasis::phase(basis.degree(static_cast<int>(q), static_cast<int>(c))));
                    }
                    const T* src = &in[(q * Nt + c) * inner];
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += b * src[i];
                }
            }
        }
        if (Np == 1) {
            std::copy(tmp.begin(), tmp.end(), out.begin());
        } else if constexpr (is_complex) {
            const double s = 1.0 / std::sqrt(static_cast<double>(Np));
            for (std::size_t k = 0; k < Np; ++k) {
                std::vector<T> tw(Np);
                for (std::size_t q = 0; q < Np; ++q)
                    tw[q] = std::polar(s, basis.m(static_cast<int>(q)) * basis.phi(static_cast<int>(k)));
                for (std::size_t j = 0; j < Nt; ++j) {
                    T* dst = &out[(j * Np + k) * inner];
                    std::fill(dst, dst + inner, T{});
                    for (std::size_t q = 0; q < Np; ++q) {
                        const T* src = &tmp[(q * Nt + j) * inner];
                        for (std::size_t i = 0; i < inner; ++i) dst[i] += tw[q] * src[i];
                    }
                }
            }
        }
    }
}

} // namespace sphbt

#endif
