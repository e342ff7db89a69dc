#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sphbt/dlop.hpp"

using namespace sphbt;
using namespace sphbt::dlop;

namespace {

// P_l(1 - 2x), the continuous limit, and its derivative in x
double legendre_shifted_derivative(int l, double x) {
    const double t = 1.0 - 2.0 * x;
    if (l == 0) return 0.0;
    double p0 = 1.0, p1 = t;
    for (int n = 1; n < l; ++n) {
        const double p2 = ((2.0 * n + 1.0) * t * p1 - n * p0) / (n + 1.0);
        p0 = p1;
        p1 = p2;
    }
    // dP_l/dt = l (t P_l - P_{l-1}) / (t^2 - 1), away from the endpoints
    return -2.0 * l * (t * p1 - p0) / (t * t - 1.0);
}

double evaluate_poly(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

} // namespace

TEST(DlopEval, SpecExamples) {
    EXPECT_EQ(dlop_eval(0, 7, 10), 1.0);
    EXPECT_DOUBLE_EQ(dlop_eval(1, 3, 4), -0.5);
    EXPECT_DOUBLE_EQ(dlop_eval(2, 1, 4), -0.5);
    EXPECT_DOUBLE_EQ(dlop_eval(2, 1, 4, Strategy::degree_recurrence), -0.5);
}

TEST(DlopEval, UnitAtOrigin) {
    for (int l = 0; l <= 40; ++l) {
        EXPECT_EQ(dlop_eval(l, 0, 100, Strategy::exact_coefficient), 1.0);
        EXPECT_EQ(dlop_eval(l, 0, 100, Strategy::degree_recurrence), 1.0);
    }
}

TEST(DlopEval, StrategiesAgree) {
    for (int l : {1, 5, 12, 20, 31}) {
        for (long N : {40L, 97L, 500L}) {
            for (long i = -1; i <= N; i += 7) {
                const double a = dlop_eval(l, i, N, Strategy::exact_coefficient);
                const double b = dlop_eval(l, i, N, Strategy::degree_recurrence);
                EXPECT_NEAR(a, b, 1e-11 * std::max(1.0, std::abs(a))) << l << " " << i << " " << N;
            }
        }
    }
}

TEST(DlopEval, ParityExactAndRecurrence) {
    for (int l = 0; l <= 30; ++l) {
        const long N = 61;
        for (long i = 0; i <= N; ++i) {
            const double sgn = l % 2 == 0 ? 1.0 : -1.0;
            EXPECT_EQ(dlop_eval(l, N - i, N, Strategy::exact_coefficient),
                      sgn * dlop_eval(l, i, N, Strategy::exact_coefficient));
            EXPECT_NEAR(dlop_eval(l, N - i, N, Strategy::degree_recurrence),
                        sgn * dlop_eval(l, i, N, Strategy::degree_recurrence), 1e-12);
        }
    }
}

TEST(DlopEval, DomainErrors) {
    EXPECT_THROW(dlop_eval(5, 0, 4), DomainError);
    EXPECT_THROW(dlop_eval(0, 0, 0), DomainError);
    EXPECT_THROW(dlop_eval(1, -2, 4), DomainError);
    EXPECT_THROW(dlop_eval(1, 5, 4), DomainError);
    EXPECT_THROW(dlop_norm(5, 4), DomainError);
}

TEST(DlopNorm, SpecExamples) {
    EXPECT_DOUBLE_EQ(dlop_norm(0, 4), 5.0);
    EXPECT_DOUBLE_EQ(dlop_norm(1, 4), 2.5);
    double brute = 0.0;
    for (long i = 0; i <= 8; ++i) brute += std::pow(dlop_eval(2, i, 8, Strategy::exact_coefficient), 2);
    EXPECT_NEAR(dlop_norm(2, 8), brute, 1e-12 * brute);
}

TEST(DlopNorm, MatchesDirectSum) {
    for (int l : {0, 3, 10, 25, 50}) {
        for (long N : {50L, 333L, 1024L}) {
            DlopBasis basis(l, N);
            const auto t = basis.table();
            double s = 0.0;
            for (long i = 0; i <= N; ++i) s += std::pow(t[static_cast<std::size_t>(l * (N + 1) + i)], 2);
            EXPECT_NEAR(s, dlop_norm(l, N), 1e-12 * s) << l << " " << N;
        }
    }
}

TEST(DlopBasisTable, Orthogonality) {
    for (long N : {64L, 1000L, 4096L}) {
        const int lmax = 64;
        DlopBasis basis(lmax, N);
        const auto t = basis.table();
        const auto cols = static_cast<std::size_t>(N + 1);
        double worst = 0.0;
        for (int a = 0; a <= lmax; ++a) {
            for (int b = 0; b <= a; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < cols; ++i)
                    s += t[static_cast<std::size_t>(a) * cols + i] * t[static_cast<std::size_t>(b) * cols + i];
                const double target = a == b ? dlop_norm(a, N) : 0.0;
                worst = std::max(worst, std::abs(s - target) / dlop_norm(a, N));
            }
        }
        EXPECT_LT(worst, 1e-10) << "N = " << N;
    }
}

TEST(DlopBasisTable, MatchesPointwiseValues) {
    DlopBasis basis(12, 77, Strategy::exact_coefficient);
    const auto t = basis.table();
    for (int l = 0; l <= 12; ++l)
        for (long i = 0; i <= 77; ++i)
            EXPECT_NEAR(t[static_cast<std::size_t>(l * 78 + i)], basis.value(l, i), 1e-12);
    EXPECT_THROW(basis.value(13, 0), DomainError);
}

TEST(DlopProperties, MomentAnnihilationExact) {
    for (int l = 1; l <= 8; ++l) {
        for (long N : {10L, 23L, 64L}) {
            for (int s = 0; s < l; ++s) {
                mpq_class sum = 0;
                for (long i = 0; i <= N; ++i) {
                    mpz_class pw = 1;
                    for (int e = 0; e < s; ++e) pw *= i;
                    sum += detail::exact_value(l, i, N) * pw;
                }
                EXPECT_EQ(sum, 0) << l << " " << N << " " << s;
            }
        }
    }
}

TEST(DlopProperties, MomentAnnihilationFloating) {
    for (int l : {9, 16, 24, 32}) {
        const long N = 400;
        DlopBasis basis(l, N, Strategy::degree_recurrence);
        const auto t = basis.table();
        for (int s = 0; s < l; ++s) {
            double sum = 0.0, mag = 0.0;
            for (long i = 0; i <= N; ++i) {
                const double x = static_cast<double>(i) / N;
                const double v = t[static_cast<std::size_t>(l) * (N + 1) + static_cast<std::size_t>(i)] * std::pow(x, s);
                sum += v;
                mag += std::abs(v);
            }
            EXPECT_LT(std::abs(sum), 1e-9 * mag) << l << " " << s;
        }
    }
}

TEST(Ddlop, SpecExamples) {
    EXPECT_EQ(ddlop_eval(0, 3, 10), 0.0);
    EXPECT_NEAR(ddlop_eval(1, 5, 10), -0.2, 1e-15);
    EXPECT_NEAR(ddlop_eval(1, 5, 10, Strategy::degree_recurrence), -0.2, 1e-15);
    EXPECT_THROW(ddlop_eval(10, 3, 10), DomainError);
    EXPECT_THROW(ddlop_eval(2, 11, 10), DomainError);
}

TEST(Ddlop, Parity) {
    for (int l = 1; l <= 20; ++l) {
        const long N = 50;
        for (long i = 0; i <= N; ++i) {
            const double sgn = (l - 1) % 2 == 0 ? 1.0 : -1.0;
            EXPECT_EQ(ddlop_eval(l, i, N), sgn * ddlop_eval(l, N - i, N));
        }
    }
}

TEST(Ddlop, ConvergesToDerivativeAtThirdOrder) {
    // |P'_l(i, N) - d/di P_l(1 - 2i/N)| at i = N/4
    for (int l : {2, 3, 4}) {
        std::vector<double> err;
        for (long N : {64L, 128L, 256L}) {
            const long i = N / 4;
            const double ref = legendre_shifted_derivative(l, static_cast<double>(i) / N) / N;
            err.push_back(std::abs(ddlop_eval(l, i, N) - ref));
        }
        const double slope1 = std::log2(err[0] / err[1]);
        const double slope2 = std::log2(err[1] / err[2]);
        EXPECT_GT(slope1, 2.7) << l;
        EXPECT_GT(slope2, 2.7) << l;
    }
}

TEST(DdlopCoeffsTest, SpecExamples) {
    const auto c = ddlop_power_coeffs(1, 4);
    ASSERT_EQ(c.xi.size(), 1u);
    EXPECT_DOUBLE_EQ(c.xi[0], 0.25);
    EXPECT_TRUE(ddlop_power_coeffs(0, 1).xi.empty());
    EXPECT_THROW(ddlop_power_coeffs(5, 2), DomainError);

    const auto c3 = ddlop_power_coeffs(3, 8);
    for (long m = 0; m <= 8; ++m) {
        const double ref = ddlop_eval(3, 8 - m, 16, Strategy::exact_coefficient);
        EXPECT_NEAR(c3.reconstruct(static_cast<double>(m)), ref, 1e-9 * std::max(1.0, std::abs(ref)));
    }
}

TEST(DdlopCoeffsTest, ReconstructionAndSparsity) {
    for (int l = 1; l <= 24; ++l) {
        for (long n : {dlop::first_regular_row(l), dlop::first_regular_row(l) + 3, 40L, 300L}) {
            if (n < first_regular_row(l)) continue;
            const auto c = ddlop_power_coeffs(l, n);
            const auto cs = ddlop_power_coeffs(l, n, n);
            int nonzero = 0;
            for (int nu = 0; nu < l; ++nu) {
                if (c.xi[static_cast<std::size_t>(nu)] != 0.0) ++nonzero;
                if ((nu - (l - 1)) % 2 != 0) {
                    EXPECT_EQ(c.xi[static_cast<std::size_t>(nu)], 0.0);
                }
            }
            EXPECT_EQ(nonzero, (l + 1) / 2) << l << " " << n;
            double scale = 0.0;
            for (long m = 0; m <= n; ++m) scale = std::max(scale, std::abs(ddlop_eval(l, n - m, 2 * n)));
            for (long m = 0; m <= n; ++m) {
                const double ref = ddlop_eval(l, n - m, 2 * n);
                EXPECT_NEAR(cs.reconstruct(static_cast<double>(m)), ref, 1e-9 * scale) << l << " " << n << " " << m;
            }
        }
    }
}

TEST(DlopProperties, WeightedSumIdentityRandom) {
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<int> ldist(1, 24);
    std::uniform_int_distribution<long> ndist(30, 400);
    std::uniform_real_distribution<double> cdist(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int l = ldist(rng);
        const long N = ndist(rng);
        std::uniform_int_distribution<int> ddist(0, l - 1);
        std::vector<double> c(static_cast<std::size_t>(ddist(rng)) + 1);
        for (auto& e : c) e = cdist(rng);
        auto p = [&](long i) { return evaluate_poly(c, static_cast<double>(i) / N); };
        double lhs = 0.0, pmax = 0.0;
        for (long i = 0; i <= N; ++i) {
            const double w = (i == 0 || i == N) ? 0.5 : 1.0;
            lhs += ddlop_eval(l, i, N, Strategy::degree_recurrence) * p(i) * w;
            pmax = std::max(pmax, std::abs(p(i)));
        }
        const double rhs = (l % 2 == 0 ? 1.0 : -1.0) * p(N) - p(0);
        EXPECT_NEAR(lhs, rhs, 1e-9 * pmax) << l << " " << N;
    }
}
