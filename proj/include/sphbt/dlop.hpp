#ifndef SPHBT_DLOP_HPP
#define SPHBT_DLOP_HPP

// Discrete Legendre orthogonal polynomials P_l(i, N) on the integer nodes
// i = 0..N, their scaled backward differences P'_l(i, N) and the power
// expansion coefficients of P'_l(n - m, 2n) in m used by the fast
// Fourier-to-Bessel transform.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sphbt/errors.hpp"

namespace sphbt::dlop {

enum class Strategy {
    /// exact_coefficient up to exact_coefficient_limit, recurrence beyond.
    automatic,
    /// Three-term recurrence in the degree, evaluated in double precision.
    degree_recurrence,
    /// Shifted-Legendre coefficients and falling factorials in exact
    /// rational arithmetic, rounded once at the end.
    exact_coefficient,
};

inline constexpr int exact_coefficient_limit = 20;

/// x (x-1) ... (x-j+1)
inline double falling_factorial(double x, int j) {
    double r = 1.0;
    for (int t = 0; t < j; ++t) r *= x - t;
    return r;
}

/// Coefficient of x^j in P_l(1 - 2x): (-1)^j C(l, j) C(l+j, j).
inline mpz_class shifted_legendre_coeff(int l, int j) {
    mpz_class a, b;
    mpz_bin_uiui(a.get_mpz_t(), static_cast<unsigned long>(l), static_cast<unsigned long>(j));
    mpz_bin_uiui(b.get_mpz_t(), static_cast<unsigned long>(l + j), static_cast<unsigned long>(j));
    mpz_class c = a * b;
    return (j % 2 == 0) ? c : mpz_class(-c);
}

namespace detail {

inline void check_extent(int l, long N, const char* op) {
    if (N <= 0)
        throw DomainError(std::string(op) + ": grid extent must be positive, got " + std::to_string(N));
    if (l < 0 || l > N)
        throw DomainError(std::string(op) + ": degree " + std::to_string(l) +
                          " outside [0, " + std::to_string(N) + "]");
}

/// Hahn-polynomial recurrence (alpha = beta = 0) for all degrees 0..lmax at
/// a single abscissa x. out must hold lmax + 1 values.
inline void recurrence_all(int lmax, double x, long N, std::span<double> out) {
    if (x == 0.0) {
        std::fill(out.begin(), out.begin() + lmax + 1, 1.0);
        return;
    }
    out[0] = 1.0;
    if (lmax == 0) return;
    const double Nd = static_cast<double>(N);
    out[1] = 1.0 - 2.0 * x / Nd;
    for (int n = 1; n < lmax; ++n) {
        const double a = (n + 1.0) * (Nd - n) / (2.0 * (2 * n + 1));
        const double c = n * (n + Nd + 1.0) / (2.0 * (2 * n + 1));
        out[n + 1] = ((a + c - x) * out[n] - c * out[n - 1]) / a;
    }
}

inline double recurrence_value(int l, double x, long N) {
    if (l == 0 || x == 0.0) return 1.0;
    double pm1 = 1.0;
    double p = 1.0 - 2.0 * x / static_cast<double>(N);
    const double Nd = static_cast<double>(N);
    for (int n = 1; n < l; ++n) {
        const double a = (n + 1.0) * (Nd - n) / (2.0 * (2 * n + 1));
        const double c = n * (n + Nd + 1.0) / (2.0 * (2 * n + 1));
        const double next = ((a + c - x) * p - c * pm1) / a;
        pm1 = p;
        p = next;
    }
    return p;
}

/// P_l(i, N) as an exact rational number.
inline mpq_class exact_value(int l, long i, long N) {
    // common denominator N^(l falling); tail[j] = prod_{t=j}^{l-1} (N - t)
    std::vector<mpz_class> tail(static_cast<std::size_t>(l) + 1);
    tail[static_cast<std::size_t>(l)] = 1;
    for (int t = l - 1; t >= 0; --t) tail[static_cast<std::size_t>(t)] = tail[static_cast<std::size_t>(t) + 1] * (N - t);
    mpz_class num = 0;
    mpz_class ff = 1;  // i^(j falling)
    for (int j = 0; j <= l; ++j) {
        num += shifted_legendre_coeff(l, j) * ff * tail[static_cast<std::size_t>(j)];
        ff *= (i - j);
    }
    mpq_class q(num, tail[0]);
    q.canonicalize();
    return q;
}

/// The recurrence keeps ~1e-12 relative accuracy while l^2 <= 8 N; the
/// automatic strategy switches back to exact arithmetic beyond that.
inline bool use_exact(int l, long N, Strategy s) {
    if (s == Strategy::exact_coefficient) return true;
    if (s == Strategy::degree_recurrence) return false;
    return l <= exact_coefficient_limit || static_cast<double>(l) * l > 8.0 * static_cast<double>(N);
}

inline double raw_value(int l, long i, long N, Strategy s) {
    if (use_exact(l, N, s)) return exact_value(l, i, N).get_d();
    return recurrence_value(l, static_cast<double>(i), N);
}

} // namespace detail

/// P_l(i, N). Accepts i in [-1, N]; values for i > N/2 are obtained by the
/// reflection P_l(N - i, N) = (-1)^l P_l(i, N), so parity holds exactly.
inline double dlop_eval(int l, long i, long N, Strategy s = Strategy::automatic) {
    detail::check_extent(l, N, "dlop_eval");
    if (i < -1 || i > N)
        throw DomainError("dlop_eval: index " + std::to_string(i) + " outside [-1, " + std::to_string(N) + "]");
    if (i >= 0 && 2 * i > N) {
        const double v = detail::raw_value(l, N - i, N, s);
        return (l % 2 == 0) ? v : -v;
    }
    return detail::raw_value(l, i, N, s);
}

/// Sum_i P_l(i, N)^2 = (N+l+1)^((l+1) falling) / ((2l+1) N^(l falling)).
inline double dlop_norm(int l, long N) {
    detail::check_extent(l, N, "dlop_norm");
    const double Nd = static_cast<double>(N);
    double r = (Nd + 1.0) / (2.0 * l + 1.0);
    for (int t = 0; t < l; ++t) r *= (Nd + l + 1.0 - t) / (Nd - t);
    return r;
}

/// 2 / (1 + P_l(-1, N-1)) * [P_l(i, N-1) - P_l(i-1, N-1)], the discrete
/// analogue of d/di P_l(1 - 2i/N). Zero for l = 0.
inline double ddlop_eval(int l, long i, long N, Strategy s = Strategy::automatic) {
    if (l < 0) throw DomainError("ddlop_eval: negative degree");
    if (N <= 0) throw DomainError("ddlop_eval: grid extent must be positive");
    if (i < 0 || i > N)
        throw DomainError("ddlop_eval: index " + std::to_string(i) + " outside [0, " + std::to_string(N) + "]");
    if (l == 0) return 0.0;
    if (l > N - 1)
        throw DomainError("ddlop_eval: degree " + std::to_string(l) + " exceeds N-1 = " + std::to_string(N - 1));
    if (2 * i > N) {
        const double v = ddlop_eval(l, N - i, N, s);
        return (l % 2 == 1) ? v : -v;
    }
    const long M = N - 1;
    if (detail::use_exact(l, M, s)) {
        const mpq_class pm1 = detail::exact_value(l, -1, M);
        mpq_class d = detail::exact_value(l, i, M) - detail::exact_value(l, i - 1, M);
        mpq_class r = 2 * d / (1 + pm1);
        r.canonicalize();
        return r.get_d();
    }
    const double pm1 = detail::recurrence_value(l, -1.0, M);
    const double d = detail::recurrence_value(l, static_cast<double>(i), M) -
                     detail::recurrence_value(l, static_cast<double>(i - 1), M);
    return 2.0 / (1.0 + pm1) * d;
}

/// Power-expansion coefficients of one fast-transform row:
///   P'_l(n - m, 2n) = - sum_nu xi[nu] (m / scale)^nu,  nu = 0..l-1.
struct DdlopCoeffs {
    int degree = 0;
    long row = 0;
    long scale = 1;
    std::vector<double> xi;
    /// The same coefficients rounded to extended precision.
    std::vector<long double> xi_wide;

    /// -sum_nu xi[nu] (m / scale)^nu (Horner).
    double reconstruct(double m) const {
        const double x = m / static_cast<double>(scale);
        double acc = 0.0;
        for (auto it = xi.rbegin(); it != xi.rend(); ++it) acc = acc * x + *it;
        return -acc;
    }
};

inline long first_regular_row(int l) { return (l + 2) / 2; }

namespace detail {

/// Integer polynomial Q(m) and integer E with P'_l(n - m, 2n) = 2 Q(m) / E,
/// both exact.
inline void ddlop_row_exact(int l, long n, std::vector<mpz_class>& q, mpz_class& e) {
    const long M = 2 * n - 1;
    const auto L = static_cast<std::size_t>(l);
    std::vector<mpz_class> tail(L + 1);
    tail[L] = 1;
    for (int t = l - 1; t >= 0; --t) tail[static_cast<std::size_t>(t)] = tail[static_cast<std::size_t>(t) + 1] * (M - t);

    // 1 + P_l(-1, M) = e / M^(l falling)
    e = tail[0];
    mpz_class jfact = 1;
    for (int j = 0; j <= l; ++j) {
        if (j > 0) jfact *= j;
        mpz_class a, b;
        mpz_bin_uiui(a.get_mpz_t(), L, static_cast<unsigned long>(j));
        mpz_bin_uiui(b.get_mpz_t(), L + static_cast<unsigned long>(j), static_cast<unsigned long>(j));
        e += a * b * jfact * tail[static_cast<std::size_t>(j)];
    }

    // backward difference of i^(j falling) is j (i-1)^((j-1) falling);
    // with i = n - m the latter is prod_{t=0}^{j-2} (n - 1 - t - m).
    q.assign(L, mpz_class(0));
    std::vector<mpz_class> poly{mpz_class(1)};
    for (int j = 1; j <= l; ++j) {
        const mpz_class w = shifted_legendre_coeff(l, j) * j * tail[static_cast<std::size_t>(j)];
        for (std::size_t k = 0; k < poly.size(); ++k) q[k] += w * poly[k];
        if (j == l) break;
        const long a = n - 1 - (j - 1);
        std::vector<mpz_class> next(poly.size() + 1, mpz_class(0));
        for (std::size_t k = 0; k < poly.size(); ++k) {
            next[k] += poly[k] * a;
            next[k + 1] -= poly[k];
        }
        poly.swap(next);
    }
}

} // namespace detail

/// Exact expansion coefficients of row n, rounded once. With scale S > 1 the
/// returned values are xi[nu] * S^nu, i.e. the coefficients for powers of
/// (m / S).
inline DdlopCoeffs ddlop_power_coeffs(int l, long n, long scale = 1) {
    if (l < 0) throw DomainError("ddlop_power_coeffs: negative degree");
    if (scale < 1) throw DomainError("ddlop_power_coeffs: scale must be positive");
    const long n0 = first_regular_row(l);
    if (n < n0)
        throw DomainError("ddlop_power_coeffs: row " + std::to_string(n) + " below first regular row " +
                          std::to_string(n0) + " for degree " + std::to_string(l));
    DdlopCoeffs out;
    out.degree = l;
    out.row = n;
    out.scale = scale;
    if (l == 0) return out;
    std::vector<mpz_class> q;
    mpz_class e;
    detail::ddlop_row_exact(l, n, q, e);
    out.xi.resize(static_cast<std::size_t>(l));
    out.xi_wide.resize(static_cast<std::size_t>(l));
    mpz_class sp = 1;
    for (int nu = 0; nu < l; ++nu) {
        const auto k = static_cast<std::size_t>(nu);
        if (q[k] == 0) {
            out.xi[k] = 0.0;
            out.xi_wide[k] = 0.0L;
        } else {
            mpq_class v(-2 * q[k] * sp, e);
            v.canonicalize();
            const double hi = v.get_d();
            const mpq_class rest = v - mpq_class(hi);
            out.xi[k] = hi;
            out.xi_wide[k] = static_cast<long double>(hi) + static_cast<long double>(rest.get_d());
        }
        sp *= scale;
    }
    return out;
}

/// DLOP family of one grid extent with a fixed evaluation strategy.
class DlopBasis {
public:
    DlopBasis(int max_degree, long grid_extent, Strategy strategy = Strategy::automatic)
        : max_degree_(max_degree), extent_(grid_extent), strategy_(strategy) {
        detail::check_extent(max_degree, grid_extent, "DlopBasis");
    }

    int max_degree() const { return max_degree_; }
    long grid_extent() const { return extent_; }
    Strategy strategy() const { return strategy_; }

    double value(int l, long i) const {
        check_degree(l);
        return dlop_eval(l, i, extent_, strategy_);
    }
    double norm(int l) const {
        check_degree(l);
        return dlop_norm(l, extent_);
    }
    double derivative(int l, long i) const {
        check_degree(l);
        return ddlop_eval(l, i, extent_, strategy_);
    }

    /// Row-major table [l][i] of P_l(i, N) for l = 0..max_degree, i = 0..N,
    /// with parity reflection; degrees the strategy assigns to exact
    /// arithmetic are evaluated exactly.
    std::vector<double> table() const {
        const auto cols = static_cast<std::size_t>(extent_ + 1);
        std::vector<double> t(static_cast<std::size_t>(max_degree_ + 1) * cols);
        std::vector<double> col(static_cast<std::size_t>(max_degree_) + 1);
        for (long i = 0; 2 * i <= extent_; ++i) {
            detail::recurrence_all(max_degree_, static_cast<double>(i), extent_, col);
            for (int l = 0; l <= max_degree_; ++l) {
                const double v = detail::use_exact(l, extent_, strategy_) ? detail::exact_value(l, i, extent_).get_d()
                                                                          : col[static_cast<std::size_t>(l)];
                t[static_cast<std::size_t>(l) * cols + static_cast<std::size_t>(i)] = v;
                t[static_cast<std::size_t>(l) * cols + static_cast<std::size_t>(extent_ - i)] = (l % 2 == 0) ? v : -v;
            }
        }
        return t;
    }

private:
    void check_degree(int l) const {
        if (l < 0 || l > max_degree_)
            throw DomainError("DlopBasis: degree " + std::to_string(l) + " above max_degree " +
                              std::to_string(max_degree_));
    }

    int max_degree_;
    long extent_;
    Strategy strategy_;
};

} // namespace sphbt::dlop

#endif
