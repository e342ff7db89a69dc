#ifndef SPHBT_TESTS_SUPPORT_HPP
#define SPHBT_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <span>
#include <vector>

namespace sphbt::testing {

inline double dot4(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const std::size_t m = n - n % 4;
    for (std::size_t i = 0; i < m; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (std::size_t j = m; j < n; ++j) s0 += a[j] * b[j];
    return (s0 + s1) + (s2 + s3);
}

/// max |T T^T - I| of a row-major n x n matrix.
inline double gram_error(const std::vector<double>& T, std::size_t n) {
    // rows are zero beyond their last nonzero column; exploit that for speed
    std::vector<std::size_t> len(n, 0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = n; c > 0; --c)
            if (T[r * n + c - 1] != 0.0) {
                len[r] = c;
                break;
            }
    double worst = 0.0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
            const double g = dot4(&T[a * n], &T[b * n], std::min(len[a], len[b]));
            worst = std::max(worst, std::abs(g - (a == b ? 1.0 : 0.0)));
        }
    return worst;
}

template <class T>
std::vector<T> dense_apply(const std::vector<double>& M, std::size_t n, const std::vector<T>& x, bool transpose) {
    std::vector<T> y(n, T{});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            if (transpose)
                y[c] += M[r * n + c] * x[r];
            else
                y[r] += M[r * n + c] * x[c];
        }
    return y;
}

inline std::vector<std::complex<double>> random_complex(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<std::complex<double>> v(n);
    for (auto& e : v) e = {d(rng), d(rng)};
    return v;
}

template <class T>
double norm2(const std::vector<T>& v) {
    double s = 0.0;
    for (const auto& e : v) s += std::norm(e);
    return std::sqrt(s);
}

template <class T>
double max_diff(const std::vector<T>& a, const std::vector<T>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace sphbt::testing

#endif
