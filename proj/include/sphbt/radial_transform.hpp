#ifndef SPHBT_RADIAL_TRANSFORM_HPP
#define SPHBT_RADIAL_TRANSFORM_HPP

// Orthogonal discrete spherical Bessel transform of one angular degree l on a
// uniform radial grid: b = T F psi, with F an orthonormal sine (even l) or
// cosine (odd l) transform and T the Fourier-to-Bessel matrix.
//
// Vectors are slot indexed: slot s = 0..N-1 holds the mode n = s + p_l, where
// p_l = 1 for even l and 0 for odd l.

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sphbt/dlop.hpp"
#include "sphbt/errors.hpp"
#include "sphbt/fourier.hpp"
#include "sphbt/reference.hpp"

namespace sphbt {

using cplx = std::complex<double>;

/// r_i = (i - 1/2) dr, i = 1..N.
struct RadialGrid {
    double step = 0.0;
    long count = 0;

    RadialGrid(double dr, long n) : step(dr), count(n) {
        if (!(dr > 0.0) || !std::isfinite(dr)) throw DomainError("RadialGrid: step must be positive and finite");
        if (n < 2) throw DomainError("RadialGrid: at least two points required, got " + std::to_string(n));
    }

    /// Grid with N = r_max / dr points; r_max must be a multiple of dr.
    static RadialGrid from_extent(double dr, double r_max) {
        if (!(dr > 0.0)) throw DomainError("RadialGrid: step must be positive");
        const double q = r_max / dr;
        const long n = std::lround(q);
        if (std::abs(q - static_cast<double>(n)) > 1e-9 * std::max(1.0, q))
            throw DomainError("RadialGrid: r_max " + std::to_string(r_max) + " is not a multiple of dr " +
                              std::to_string(dr));
        return RadialGrid(dr, n);
    }

    double extent() const { return step * static_cast<double>(count); }
    double node(long i) const { return (static_cast<double>(i) - 0.5) * step; }

    std::vector<double> nodes() const {
        std::vector<double> r(static_cast<std::size_t>(count));
        for (long i = 1; i <= count; ++i) r[static_cast<std::size_t>(i - 1)] = node(i);
        return r;
    }
};

struct MomentumGrid {
    int degree = 0;
    double step = 0.0;         // dk = pi / r_max
    int parity_offset = 0;     // p_l
    long count = 0;            // N
    long upper = 0;            // N_l = N + p_l - 1
    long first_regular = 0;    // n_0l = ceil((l + 1) / 2)

    MomentumGrid(int l, const RadialGrid& g)
        : degree(l),
          step(std::numbers::pi / g.extent()),
          parity_offset(l % 2 == 0 ? 1 : 0),
          count(g.count),
          upper(g.count + (l % 2 == 0 ? 1 : 0) - 1),
          first_regular(dlop::first_regular_row(l)) {}

    double k(long n) const { return static_cast<double>(n) * step; }
    double weight(long n) const { return n == 0 ? 0.5 * step : step; }
    long slot(long n) const { return n - parity_offset; }
    long mode(long slot) const { return slot + parity_offset; }
};

enum class Direction { forward, inverse };
enum class Representation { coordinate, fourier, bessel };

inline const char* to_string(Representation r) {
    switch (r) {
    case Representation::coordinate: return "coordinate";
    case Representation::fourier: return "fourier";
    case Representation::bessel: return "bessel";
    }
    return "?";
}

struct RadialVector {
    Representation representation = Representation::coordinate;
    std::vector<cplx> values;
};

inline constexpr int default_max_degree = 64;

namespace detail {

/// Accumulation type of the fast recurrences: x87 extended precision keeps
/// the monomial sums accurate enough for round trips at the 1e-13 level up
/// to l = 16.
template <class T>
struct wide {
    using type = long double;
};
template <class T>
struct wide<std::complex<T>> {
    using type = std::complex<long double>;
};
template <class T>
using wide_t = typename wide<T>::type;

template <class T>
struct Kahan {
    T sum{};
    T c{};
    void add(T v) {
        const T y = v - c;
        const T t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

} // namespace detail

/// q = P_l(-1, 2n-1) - 1 > 0 as a sum of positive terms. A regular row has
/// P'_l(0, 2n) = -2q / (2 + q), alpha_n = (2 + q) / (2 sqrt(1 + q)) and
/// diagonal element alpha_n (1 + P'_l(0, 2n) / 2) = 1 / sqrt(1 + q).
inline double regular_row_q(int l, long n) {
    const double M = 2.0 * static_cast<double>(n) - 1.0;
    double term = 1.0, q = 0.0;
    for (int j = 1; j <= l; ++j) {
        term *= (l - j + 1.0) * (l + j) / (j * (M - j + 1.0));
        q += term;
    }
    return q;
}

class RadialTransformPlan;
RadialTransformPlan make_plan(int l, const RadialGrid& grid, int max_degree);

class RadialTransformPlan {
public:
    int degree() const { return l_; }
    const RadialGrid& radial() const { return radial_; }
    const MomentumGrid& momentum() const { return momentum_; }
    long size() const { return radial_.count; }
    FourierKind fourier_kind() const { return stage_->kind(); }
    /// (-1)^ceil(l/2), so that b_n approximates c_l(k_n) sqrt(w_n).
    double fourier_sign() const { return sign_; }

    /// alpha_n by slot.
    const std::vector<double>& alphas() const { return alpha_; }
    long extra_row_count() const { return extra_rows_; }
    /// Completion row of mode n = p_l + r, r < extra_row_count().
    std::span<const double> extra_row(long r) const {
        return {extra_.data() + static_cast<std::size_t>(r * radial_.count), static_cast<std::size_t>(radial_.count)};
    }
    /// Expansion coefficients of rows n_0l..N_l, in powers of m / N_l.
    const std::vector<dlop::DdlopCoeffs>& xi_table() const { return xi_table_; }

    template <class T>
    void fourier(std::span<const T> in, std::span<T> out, Direction dir) const {
        if (dir == Direction::forward)
            stage_->forward(in, out, sign_);
        else
            stage_->inverse(in, out, sign_);
    }

    /// b = T f (forward) or f = T^T b (inverse) in O(l N) operations.
    template <class T>
    void ftb(std::span<const T> in, std::span<T> out, Direction dir) const {
        check_len(in.size(), out.size());
        if (l_ == 0) {
            if (in.data() != out.data()) std::copy(in.begin(), in.end(), out.begin());
            return;
        }
        std::vector<T> copy;
        if (in.data() == out.data()) {
            copy.assign(in.begin(), in.end());
            in = std::span<const T>(copy);
        }
        if (dir == Direction::forward)
            ftb_forward(in, out);
        else
            ftb_inverse(in, out);
    }

    template <class T>
    void dsbt(std::span<const T> in, std::span<T> out, Direction dir) const {
        check_len(in.size(), out.size());
        if (dir == Direction::forward) {
            fourier<T>(in, out, Direction::forward);
            ftb<T>(std::span<const T>(out.data(), out.size()), out, Direction::forward);
        } else {
            ftb<T>(in, out, Direction::inverse);
            fourier<T>(std::span<const T>(out.data(), out.size()), out, Direction::inverse);
        }
    }

    /// Row-major N x N matrix T built directly from DDLOP values and row
    /// norms, independent of the fast-path tables.
    std::vector<double> dense_ftb() const {
        const long N = radial_.count, p = momentum_.parity_offset, n0 = momentum_.first_regular;
        const auto Nu = static_cast<std::size_t>(N);
        std::vector<double> T(Nu * Nu, 0.0);
        if (l_ == 0) {
            for (std::size_t i = 0; i < Nu; ++i) T[i * Nu + i] = 1.0;
            return T;
        }
        for (long r = 0; r < extra_rows_; ++r) std::copy_n(extra_row(r).data(), Nu, T.data() + r * N);
        for (long n = std::max(n0, p); n <= momentum_.upper; ++n) {
            double* row = T.data() + (n - p) * N;
            // recurrence where it is reliable, exact arithmetic for short rows of high degree
            const auto strategy = static_cast<double>(l_) * l_ > 8.0 * (2.0 * n - 1.0) ? dlop::Strategy::exact_coefficient
                                                                                    : dlop::Strategy::degree_recurrence;
            for (long m = p; m <= n; ++m) {
                const double theta = (m == n) ? 0.5 : 1.0;
                row[m - p] = theta * dlop::ddlop_eval(l_, n - m, 2 * n, strategy) * root_weight(m);
            }
            row[n - p] = 2.0 / (2.0 + regular_row_q(l_, n));
            double ss = 0.0;
            for (long m = p; m <= n; ++m) ss += row[m - p] * row[m - p];
            const double inv = 1.0 / std::sqrt(ss);
            for (long m = p; m <= n; ++m) row[m - p] *= inv;
        }
        return T;
    }

private:
    friend RadialTransformPlan make_plan(int l, const RadialGrid& grid, int max_degree);

    RadialTransformPlan(int l, const RadialGrid& g) : l_(l), radial_(g), momentum_(l, g) {}

    /// sqrt(w_m / dk)
    static double root_weight(long m) { return m == 0 ? std::numbers::sqrt2 / 2.0 : 1.0; }

    void check_len(std::size_t a, std::size_t b) const {
        if (a != static_cast<std::size_t>(radial_.count) || b != static_cast<std::size_t>(radial_.count))
            throw DomainError("radial transform: vector length " + std::to_string(a) + " does not match grid size " +
                              std::to_string(radial_.count));
    }

    // powers (m / N_l)^nu for the nonzero nu of this degree
    void powers(long m, std::vector<long double>& pw) const {
        const long double x = static_cast<long double>(m) / static_cast<long double>(momentum_.upper);
        long double v = (nu_min_ == 0) ? 1.0L : x;
        const long double x2 = x * x;
        for (auto& e : pw) {
            e = v;
            v *= x2;
        }
    }

    template <class T>
    void ftb_forward(std::span<const T> f, std::span<T> b) const {
        const long N = radial_.count, p = momentum_.parity_offset, n0 = momentum_.first_regular;
        const long S = momentum_.upper;
        const auto K = static_cast<std::size_t>(nterms_);
        for (long r = 0; r < extra_rows_; ++r) {
            const auto row = extra_row(r);
            T acc{};
            for (long m = 0; m < N; ++m) acc += row[static_cast<std::size_t>(m)] * f[static_cast<std::size_t>(m)];
            b[static_cast<std::size_t>(r)] = acc;
        }
        using W = detail::wide_t<T>;
        std::vector<detail::Kahan<W>> run(K);
        std::vector<long double> pw(K);
        if (p == 0 && nu_min_ == 0) run[0].add(static_cast<W>(f[0]) * static_cast<long double>(root_weight(0)));
        for (long n = std::max<long>(1, p); n <= S; ++n) {
            powers(n, pw);
            const W fn = static_cast<W>(f[static_cast<std::size_t>(n - p)]);
            if (n >= n0) {
                const long double* xi = xi_compact_.data() + static_cast<std::size_t>(n - n0) * K;
                // the m = n term is folded into the closed-form diagonal
                W dot{};
                for (std::size_t k = 0; k < K; ++k) dot += xi[k] * run[k].sum;
                const auto s = static_cast<std::size_t>(n - p);
                b[s] = static_cast<T>(static_cast<long double>(diag_[s]) * fn -
                                      static_cast<long double>(alpha_[s]) * dot);
            }
            for (std::size_t k = 0; k < K; ++k) run[k].add(pw[k] * fn);
        }
    }

    template <class T>
    void ftb_inverse(std::span<const T> b, std::span<T> f) const {
        const long N = radial_.count, p = momentum_.parity_offset, n0 = momentum_.first_regular;
        const long S = momentum_.upper;
        const auto K = static_cast<std::size_t>(nterms_);
        std::fill(f.begin(), f.end(), T{});
        for (long r = 0; r < extra_rows_; ++r) {
            const auto row = extra_row(r);
            const T br = b[static_cast<std::size_t>(r)];
            for (long m = 0; m < N; ++m) f[static_cast<std::size_t>(m)] += row[static_cast<std::size_t>(m)] * br;
        }
        using W = detail::wide_t<T>;
        std::vector<detail::Kahan<W>> run(K);
        std::vector<long double> pw(K);
        std::vector<W> part(K);
        for (long m = S; m >= p; --m) {
            powers(m, pw);
            W direct{};
            if (m >= n0) {
                const long double* xi = xi_compact_.data() + static_cast<std::size_t>(m - n0) * K;
                const auto s = static_cast<std::size_t>(m - p);
                const W bm = static_cast<W>(b[s]);
                const W a = static_cast<long double>(alpha_[s]) * bm;
                direct = static_cast<long double>(diag_[s]) * bm;
                for (std::size_t k = 0; k < K; ++k) part[k] = xi[k] * a;
            } else {
                std::fill(part.begin(), part.end(), W{});
            }
            W sum{};
            for (std::size_t k = 0; k < K; ++k) sum += pw[k] * run[k].sum;
            f[static_cast<std::size_t>(m - p)] +=
                static_cast<T>(direct - static_cast<long double>(root_weight(m)) * sum);
            if (m >= n0)
                for (std::size_t k = 0; k < K; ++k) run[k].add(part[k]);
        }
    }

    int l_;
    RadialGrid radial_;
    MomentumGrid momentum_;
    std::shared_ptr<const FourierStage> stage_;
    double sign_ = 1.0;
    std::vector<double> alpha_;
    std::vector<double> diag_;
    long extra_rows_ = 0;
    std::vector<double> extra_;
    std::vector<dlop::DdlopCoeffs> xi_table_;
    int nu_min_ = 0;
    int nterms_ = 0;
    std::vector<long double> xi_compact_;
};

inline double regular_row_alpha(int l, long n) {
    const double q = regular_row_q(l, n);
    return (2.0 + q) / (2.0 * std::sqrt(1.0 + q));
}

inline RadialTransformPlan make_plan(int l, const RadialGrid& grid, int max_degree = default_max_degree) {
    if (l < 0) throw DomainError("make_plan: negative degree");
    if (l > max_degree)
        throw DomainError("make_plan: degree " + std::to_string(l) + " above the cap " + std::to_string(max_degree));
    RadialTransformPlan plan(l, grid);
    const MomentumGrid& mg = plan.momentum_;
    const long N = grid.count, p = mg.parity_offset, n0 = mg.first_regular, S = mg.upper;
    if (N < n0 + 1)
        throw DomainError("make_plan: grid of " + std::to_string(N) + " points too small for degree " +
                          std::to_string(l));
    plan.stage_ = shared_fourier_stage(N, l % 2 == 0 ? FourierKind::sine : FourierKind::cosine);
    plan.sign_ = ((l + 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    plan.alpha_.assign(static_cast<std::size_t>(N), 1.0);
    plan.diag_.assign(static_cast<std::size_t>(N), 1.0);
    if (l == 0) return plan;

    // completion rows: alpha_n P_{2n-p}(N_l - m, 2 N_l) sqrt(w_m / dk)
    plan.extra_rows_ = std::max<long>(0, n0 - p);
    plan.extra_.assign(static_cast<std::size_t>(plan.extra_rows_ * N), 0.0);
    if (plan.extra_rows_ > 0) {
        const int lmax = static_cast<int>(2 * (n0 - 1) - p);
        std::vector<double> col(static_cast<std::size_t>(lmax) + 1);
        for (long m = p; m <= S; ++m) {
            // S - m lies in the lower half of [0, 2S], where the recurrence is used unreflected
            dlop::detail::recurrence_all(lmax, static_cast<double>(S - m), 2 * S, col);
            for (long r = 0; r < plan.extra_rows_; ++r) {
                const int ln = static_cast<int>(2 * (p + r) - p);
                const double v = col[static_cast<std::size_t>(ln)];
                plan.extra_[static_cast<std::size_t>(r * N + (m - p))] =
                    std::sqrt(2.0 / dlop::dlop_norm(ln, 2 * S)) * v * RadialTransformPlan::root_weight(m);
            }
        }
        for (long r = 0; r < plan.extra_rows_; ++r) plan.alpha_[static_cast<std::size_t>(r)] =
            std::sqrt(2.0 / dlop::dlop_norm(static_cast<int>(2 * (p + r) - p), 2 * S));
    }

    plan.nu_min_ = (l - 1) % 2;
    plan.nterms_ = (l + 1) / 2;
    const auto K = static_cast<std::size_t>(plan.nterms_);
    plan.xi_table_.reserve(static_cast<std::size_t>(S - n0 + 1));
    plan.xi_compact_.resize(static_cast<std::size_t>(S - n0 + 1) * K);
    for (long n = n0; n <= S; ++n) {
        const double q = regular_row_q(l, n);
        plan.alpha_[static_cast<std::size_t>(n - p)] = (2.0 + q) / (2.0 * std::sqrt(1.0 + q));
        plan.diag_[static_cast<std::size_t>(n - p)] = 1.0 / std::sqrt(1.0 + q);
        auto c = dlop::ddlop_power_coeffs(l, n, S);
        for (std::size_t k = 0; k < K; ++k)
            plan.xi_compact_[static_cast<std::size_t>(n - n0) * K + k] =
                c.xi_wide[static_cast<std::size_t>(plan.nu_min_) + 2 * k];
        plan.xi_table_.push_back(std::move(c));
    }
    return plan;
}

namespace detail {

inline void expect(const RadialVector& x, Representation r, const char* op) {
    if (x.representation != r)
        throw DomainError(std::string(op) + ": expected " + to_string(r) + " representation, got " +
                          to_string(x.representation));
}

} // namespace detail

inline RadialVector fourier_apply(const RadialTransformPlan& plan, const RadialVector& x, Direction dir) {
    const bool fwd = dir == Direction::forward;
    detail::expect(x, fwd ? Representation::coordinate : Representation::fourier, "fourier_apply");
    RadialVector y{fwd ? Representation::fourier : Representation::coordinate,
                   std::vector<cplx>(x.values.size())};
    plan.fourier<cplx>(x.values, y.values, dir);
    return y;
}

inline RadialVector ftb_apply_fast(const RadialTransformPlan& plan, const RadialVector& x, Direction dir) {
    const bool fwd = dir == Direction::forward;
    detail::expect(x, fwd ? Representation::fourier : Representation::bessel, "ftb_apply_fast");
    RadialVector y{fwd ? Representation::bessel : Representation::fourier, std::vector<cplx>(x.values.size())};
    plan.ftb<cplx>(x.values, y.values, dir);
    return y;
}

inline RadialVector dsbt_apply(const RadialTransformPlan& plan, const RadialVector& x, Direction dir) {
    const bool fwd = dir == Direction::forward;
    detail::expect(x, fwd ? Representation::coordinate : Representation::bessel, "dsbt_apply");
    RadialVector y{fwd ? Representation::bessel : Representation::coordinate, std::vector<cplx>(x.values.size())};
    plan.dsbt<cplx>(x.values, y.values, dir);
    return y;
}

/// First-order estimate of the corrected momentum of mode n.
inline double corrected_momentum_seed(const RadialTransformPlan& plan, long n) {
    const auto& mg = plan.momentum();
    const double kn = mg.k(n);
    if (n < mg.first_regular || kn == 0.0) return kn;
    const int l = plan.degree();
    return kn - l * (l + 1.0) * mg.step * mg.step / (2.0 * std::numbers::pi * std::numbers::pi * kn);
}

/// Momenta k_nl by slot. Regular modes n >= n_0l take the (n - n_0l + 1)-th
/// positive root of chi_l(k r_max) (even l) or chi_l'(k r_max) (odd l);
/// completion modes keep n dk.
inline std::vector<double> corrected_momenta(const RadialTransformPlan& plan) {
    const auto& mg = plan.momentum();
    const int l = plan.degree();
    const double rmax = plan.radial().extent();
    const long N = mg.count, p = mg.parity_offset, n0 = mg.first_regular;
    std::vector<double> k(static_cast<std::size_t>(N));
    for (long s = 0; s < N; ++s) k[static_cast<std::size_t>(s)] = mg.k(mg.mode(s));
    if (l == 0) return k;

    const bool even = l % 2 == 0;
    auto g = [&](double x) {
        const auto [chi, dchi] = reference::riccati_bessel(l, x);
        return even ? chi : dchi;
    };
    auto dg = [&](double x) {
        const auto [chi, dchi] = reference::riccati_bessel(l, x);
        return even ? dchi : (l * (l + 1.0) / (x * x) - 1.0) * chi;
    };
    const double h = std::numbers::pi / 16.0;
    double a = std::max(1e-3, 0.5 * l);
    double ga = g(a);
    for (long n = n0; n <= mg.upper; ++n) {
        double b = a + h, gb = g(b);
        int guard = 0;
        while (ga * gb > 0.0) {
            a = b;
            ga = gb;
            b = a + h;
            gb = g(b);
            if (++guard > 1000)
                throw NumericError("corrected_momenta: no root bracketed for mode n = " + std::to_string(n));
        }
        // safeguarded Newton on [lo, hi]
        double lo = a, hi = b, glo = ga;
        double x = 0.5 * (lo + hi);
        for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
            const double gx = g(x);
            if (gx == 0.0) {
                lo = hi = x;
                break;
            }
            if ((gx > 0.0) == (glo > 0.0)) {
                lo = x;
                glo = gx;
            } else {
                hi = x;
            }
            const double d = dg(x);
            double xn = (d != 0.0) ? x - gx / d : 0.5 * (lo + hi);
            if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
            if (xn == x) break;
            x = xn;
        }
        const double res = g(x);
        if (!(std::abs(res) < 1e-10))
            throw NumericError("corrected_momenta: root residual " + std::to_string(res) + " for mode n = " +
                               std::to_string(n));
        k[static_cast<std::size_t>(n - p)] = x / rmax;
        a = x + h / 4.0;
        ga = g(a);
    }
    return k;
}

/// Samples chi~_nl(r_i) of the function synthesized from the unit Bessel
/// coefficient of mode n, normalized like chi_l(k_n r).
inline std::vector<double> basis_function(const RadialTransformPlan& plan, long n) {
    const auto& mg = plan.momentum();
    if (n < mg.parity_offset || n > mg.upper)
        throw DomainError("basis_function: mode " + std::to_string(n) + " outside [" +
                          std::to_string(mg.parity_offset) + ", " + std::to_string(mg.upper) + "]");
    std::vector<double> v(static_cast<std::size_t>(mg.count), 0.0);
    v[static_cast<std::size_t>(mg.slot(n))] = 1.0;
    plan.dsbt<double>(std::span<const double>(v), std::span<double>(v), Direction::inverse);
    const double scale = std::sqrt(plan.radial().extent() / 2.0) * std::sqrt(mg.step / mg.weight(n)) /
                         std::sqrt(plan.radial().step);
    for (auto& e : v) e *= scale;
    return v;
}

} // namespace sphbt

#endif
