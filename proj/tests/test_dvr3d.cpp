#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "sphbt/dvr3d.hpp"
#include "sphbt/reference.hpp"
#include "sphbt/tdse.hpp"
#include "support.hpp"

using namespace sphbt;
using sphbt::testing::random_complex;

namespace {

std::vector<cplx> unit_random(std::size_t n, unsigned seed) {
    auto v = random_complex(n, seed);
    const double s = std::sqrt(squared_norm<cplx>(v));
    for (auto& e : v) e /= s;
    return v;
}

// Legendre P_l(x) by the three-term recurrence, unnormalized
double legendre(int l, double x) {
    double p0 = 1.0, p1 = x;
    if (l == 0) return p0;
    for (int n = 1; n < l; ++n) {
        const double p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

} // namespace

TEST(GaussLegendre, TwoPointRule) {
    const auto g = gauss_legendre(2);
    ASSERT_EQ(g.nodes.size(), 2u);
    EXPECT_NEAR(g.nodes[0], -1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(g.nodes[1], 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(g.weights[0], 1.0, 1e-15);
    EXPECT_NEAR(g.weights[1], 1.0, 1e-15);
}

TEST(GaussLegendre, ExactOnMonomials) {
    for (int n : {1, 2, 3, 7, 16, 33}) {
        const auto g = gauss_legendre(n);
        for (int p = 0; p <= 2 * n - 1; ++p) {
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                s += g.weights[static_cast<std::size_t>(j)] * std::pow(g.nodes[static_cast<std::size_t>(j)], p);
            const double exact = p % 2 == 1 ? 0.0 : 2.0 / (p + 1.0);
            EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " p=" << p;
        }
    }
}

TEST(GaussLegendre, WeightsSumToTwo) {
    for (int n : {1, 5, 16, 64}) {
        const auto g = gauss_legendre(n);
        EXPECT_NEAR(std::accumulate(g.weights.begin(), g.weights.end(), 0.0), 2.0, 1e-14) << n;
    }
    EXPECT_THROW(gauss_legendre(0), DomainError);
}

TEST(AssocLegendre, MatchesLegendreForZeroOrder) {
    for (double x : {-0.9, -0.3, 0.0, 0.41, 0.77}) {
        const auto P = assoc_legendre(10, 0, x);
        for (int l = 0; l <= 10; ++l)
            EXPECT_NEAR(P[static_cast<std::size_t>(l)], std::sqrt((2.0 * l + 1.0) / 2.0) * legendre(l, x), 1e-13);
    }
}

TEST(AssocLegendre, OrthonormalOnQuadrature) {
    const int Nt = 16;
    const auto g = gauss_legendre(Nt);
    for (int m = 0; m < 6; ++m) {
        std::vector<std::vector<double>> P;
        for (int j = 0; j < Nt; ++j) P.push_back(assoc_legendre(Nt - 1, m, g.nodes[static_cast<std::size_t>(j)]));
        for (int a = m; a < Nt; ++a)
            for (int b = m; b < Nt; ++b) {
                double s = 0.0;
                for (int j = 0; j < Nt; ++j)
                    s += P[static_cast<std::size_t>(j)][static_cast<std::size_t>(a - m)] *
                         P[static_cast<std::size_t>(j)][static_cast<std::size_t>(b - m)] *
                         g.weights[static_cast<std::size_t>(j)];
                EXPECT_NEAR(s, a == b ? 1.0 : 0.0, 1e-12) << "m=" << m << " " << a << "," << b;
            }
    }
}

TEST(AngularBasis, OscillatorConfigurationBuilds) {
    const AngularBasis ab(16, 1);
    EXPECT_EQ(ab.n_theta(), 16);
    EXPECT_EQ(ab.n_phi(), 1);
    EXPECT_EQ(ab.max_degree(), 15);
    EXPECT_THROW(AngularBasis(0, 1), DomainError);
    EXPECT_THROW(AngularBasis(4, 0), DomainError);
}

TEST(AngularBasis, AzimuthalOrdering) {
    const AngularBasis ab(3, 5);
    EXPECT_EQ(ab.m(0), 0);
    EXPECT_EQ(ab.m(1), 1);
    EXPECT_EQ(ab.m(2), 2);
    EXPECT_EQ(ab.m(3), -2);
    EXPECT_EQ(ab.m(4), -1);
    EXPECT_EQ(ab.degree(3, 1), 3);
}

TEST(AngularBasis, BlocksAreOrthogonal) {
    for (int nphi : {1, 4, 5})
        for (int nt : {1, 6, 12}) {
            const AngularBasis ab(nt, nphi);
            for (int q = 0; q < nphi; ++q) {
                const auto B = ab.block(q);
                std::vector<double> M(B.begin(), B.end());
                EXPECT_LT(sphbt::testing::gram_error(M, static_cast<std::size_t>(nt)), 1e-13)
                    << "nt=" << nt << " nphi=" << nphi << " q=" << q;
            }
        }
}

TEST(AngularBasis, ChannelFunctionOnNodes) {
    const AngularBasis ab(7, 4);
    for (int q = 0; q < 4; ++q)
        for (int c = 0; c < 7; ++c)
            for (int j = 0; j < 7; ++j) {
                const double expect = ab.block(q)[static_cast<std::size_t>(c * 7 + j)] / std::sqrt(ab.eta_weight(j));
                EXPECT_NEAR(ab.channel_function(q, c, ab.eta(j)), expect, 1e-11) << q << " " << c << " " << j;
            }
}

TEST(AngularTransform, RoundTripAndNorm) {
    const AngularBasis ab(6, 5);
    const std::size_t inner = 7, n = 6 * 5 * inner;
    const auto x = unit_random(n, 11);
    for (auto variant : {AngularVariant::plain, AngularVariant::modified}) {
        std::vector<cplx> y(n), z(n);
        angular_transform<cplx>(ab, x, y, inner, true, variant);
        EXPECT_NEAR(squared_norm<cplx>(y), 1.0, 1e-13);
        angular_transform<cplx>(ab, y, z, inner, false, variant);
        EXPECT_LT(sphbt::testing::max_diff(x, z), 1e-13);
    }
}

TEST(AngularTransform, InPlace) {
    const AngularBasis ab(4, 3);
    const std::size_t inner = 5, n = 4 * 3 * inner;
    const auto x = unit_random(n, 3);
    std::vector<cplx> ref(n), y = x;
    angular_transform<cplx>(ab, x, ref, inner, true);
    angular_transform<cplx>(ab, y, y, inner, true);
    EXPECT_EQ(sphbt::testing::max_diff(ref, y), 0.0);
}

TEST(AngularTransform, ModifiedDiffersByPhase) {
    const AngularBasis ab(5, 4);
    const std::size_t inner = 3, n = 5 * 4 * inner;
    const auto x = unit_random(n, 5);
    std::vector<cplx> plain(n), mod(n);
    angular_transform<cplx>(ab, x, plain, inner, true, AngularVariant::plain);
    angular_transform<cplx>(ab, x, mod, inner, true, AngularVariant::modified);
    const std::array<cplx, 4> powers{cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    for (int q = 0; q < 4; ++q)
        for (int c = 0; c < 5; ++c) {
            const cplx ph = powers[static_cast<std::size_t>(ab.degree(q, c) % 4)];
            for (std::size_t i = 0; i < inner; ++i) {
                const std::size_t s = (static_cast<std::size_t>(q) * 5 + static_cast<std::size_t>(c)) * inner + i;
                EXPECT_EQ(mod[s], ph * plain[s]);
            }
        }
}

TEST(AngularTransform, IsotropicDataHasOneChannel) {
    const AngularBasis ab(8, 6);
    const std::size_t inner = 4, n = 8 * 6 * inner;
    std::vector<cplx> x(n);
    for (int j = 0; j < 8; ++j)
        for (int k = 0; k < 6; ++k)
            for (std::size_t i = 0; i < inner; ++i)
                x[(static_cast<std::size_t>(j) * 6 + static_cast<std::size_t>(k)) * inner + i] =
                    cplx(1.0 + static_cast<double>(i), 0.5) * std::sqrt(ab.eta_weight(j) * ab.phi_step());
    std::vector<cplx> y(n);
    angular_transform<cplx>(ab, x, y, inner, true);
    for (std::size_t s = 0; s < n; ++s) {
        if (s < inner)
            EXPECT_NEAR(std::abs(y[s]), std::abs(cplx(1.0 + static_cast<double>(s), 0.5)) * std::sqrt(4.0 * std::numbers::pi),
                        1e-12);
        else
            EXPECT_LT(std::abs(y[s]), 1e-13) << s;
    }
}

TEST(AngularTransform, RejectsBadInput) {
    const AngularBasis ab(4, 2);
    std::vector<cplx> x(10), y(10);
    EXPECT_THROW(angular_transform<cplx>(ab, x, y, 3, true), DomainError);
    std::vector<double> a(24), b(24);
    EXPECT_THROW(angular_transform<double>(ab, a, b, 3, true), DomainError);
}

TEST(Dvr3d, UnifiedIndexIsABijection) {
    const Dvr3d dvr(RadialGrid(0.2, 40), 6, 1);
    for (int l = 0; l < 6; ++l) {
        std::set<long> seen;
        for (long s = 0; s < 40; ++s) seen.insert(dvr.unified(l, s));
        EXPECT_EQ(seen.size(), 40u);
        EXPECT_EQ(*seen.begin(), 0);
        EXPECT_EQ(*seen.rbegin(), 39);
    }
    // odd l: mode n = 0 sits in the top slot
    EXPECT_EQ(dvr.unified(1, 0), 39);
    EXPECT_EQ(dvr.unified(1, 1), 0);
    EXPECT_EQ(dvr.unified(2, 0), 0);
}

TEST(Dvr3d, SpectralRoundTripAndNorm) {
    const Dvr3d dvr(RadialGrid(0.25, 96), 8, 6);
    SphericalField f{dvr.shape(), unit_random(dvr.size(), 21)};
    const auto c = spectral_transform(dvr, f);
    EXPECT_NEAR(squared_norm<cplx>(c.values), 1.0, 1e-12);
    const auto back = spectral_transform(dvr, c);
    EXPECT_LT(sphbt::testing::max_diff(f.values, back.values), 1e-11);
}

TEST(Dvr3d, RealAndComplexPathsAgree) {
    const Dvr3d dvr(RadialGrid(0.2, 64), 5, 1);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<double> re(dvr.size());
    for (auto& e : re) e = g(rng);
    std::vector<cplx> cx(re.begin(), re.end());
    std::vector<double> a(dvr.size());
    std::vector<cplx> b(dvr.size());
    dvr.to_spectral<double>(re, a);
    dvr.to_spectral<cplx>(cx, b);
    for (std::size_t s = 0; s < a.size(); ++s) EXPECT_NEAR(std::abs(b[s] - a[s]), 0.0, 1e-12);
}

TEST(Dvr3d, MissingPlanIsAConfigurationError) {
    const RadialGrid grid(0.2, 32);
    const AngularBasis ab(4, 1);
    auto plans = Dvr3d::make_plans(grid, ab, default_max_degree);
    plans.erase(2);
    EXPECT_THROW(Dvr3d(grid, ab, plans), ConfigError);
    auto other = Dvr3d::make_plans(RadialGrid(0.2, 40), ab, default_max_degree);
    EXPECT_THROW(Dvr3d(grid, ab, other), ConfigError);
}

TEST(Dvr3d, PlaneWaveMatchesRayleighExpansion) {
    // e^{i k z} = sum_l i^l (2l + 1) j_l(k r) P_l(cos theta)
    const Dvr3d dvr(RadialGrid(0.1, 64), 24, 1);
    const long n = 3;
    const double k = dvr.momentum(n - 1);
    const auto f = dvr.sample([&](double, double, double z) { return std::polar(1.0, k * z); });
    const auto a = detail::angular_channels(dvr, f);
    const std::array<cplx, 4> powers{cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    for (int l = 0; l <= 5; ++l)
        for (long i = 0; i < 64; ++i) {
            const double r = dvr.radial().node(i + 1);
            const cplx expect = powers[static_cast<std::size_t>(l % 4)] * r * std::sqrt(0.1 * 2.0 * std::numbers::pi) *
                                std::sqrt((2.0 * l + 1.0) / 2.0) * 2.0 * reference::sph_bessel(l, k * r).first;
            EXPECT_LT(std::abs(a[static_cast<std::size_t>(l) * 64 + static_cast<std::size_t>(i)] - expect), 1e-11)
                << "l=" << l << " i=" << i;
        }
    const auto c = spectral_transform(dvr, f);
    for (int l = 0; l <= 3; ++l) {
        double total = 0.0, peak = 0.0;
        long at = -1;
        for (long u = 0; u < 64; ++u) {
            const double p = std::norm(c.values[static_cast<std::size_t>(l) * 64 + static_cast<std::size_t>(u)]);
            total += p;
            if (p > peak) {
                peak = p;
                at = u;
            }
        }
        EXPECT_EQ(at, n - 1) << "l=" << l;
        EXPECT_GT(peak / total, l == 0 ? 1.0 - 1e-10 : 0.9) << "l=" << l;
    }
}

TEST(Dvr3d, KineticTablesShareOrdering) {
    const Dvr3d dvr(RadialGrid(0.2, 80), 6, 1);
    const auto& plain = dvr.kinetic(Momenta::plain);
    const auto& corr = dvr.kinetic(Momenta::corrected);
    ASSERT_EQ(plain.size(), corr.size());
    for (std::size_t ch = 0; ch < dvr.channel_count(); ++ch) {
        const double* p = &plain[ch * 80];
        const double* q = &corr[ch * 80];
        // strict order in the plain table is kept; ties may split
        for (long x = 0; x < 80; ++x)
            for (long y = 0; y < 80; ++y)
                if (p[x] < p[y]) {
                    EXPECT_LE(q[x], q[y]) << "channel " << ch << " slots " << x << ", " << y;
                }
        if (dvr.channel_degree(ch) == 0) {
            for (long u = 0; u < 80; ++u) EXPECT_EQ(p[u], q[u]);
        }
    }
}

TEST(Hamiltonian, FreeSpectralVectorsAreEigenvectors) {
    const Dvr3d dvr(RadialGrid(0.2, 48), 4, 3);
    for (auto mom : {Momenta::plain, Momenta::corrected}) {
        HamiltonianSpec spec;
        spec.momenta = mom;
        const auto& kin = dvr.kinetic(mom);
        for (std::size_t s : {std::size_t{0}, std::size_t{47}, std::size_t{100}, std::size_t{301}, dvr.size() - 1}) {
            SpectralField c{dvr.shape(), std::vector<cplx>(dvr.size())};
            c.values[s] = 1.0;
            const auto psi = spectral_transform(dvr, c);
            const auto h = apply_hamiltonian(spec, dvr, psi, 0.0);
            double err = 0.0;
            for (std::size_t t = 0; t < psi.values.size(); ++t)
                err = std::max(err, std::abs(h.values[t] - kin[s] * psi.values[t]));
            EXPECT_LT(err, 1e-11 * std::max(1.0, kin[s])) << "slot " << s;
        }
    }
}

TEST(Hamiltonian, HermitianWithVectorPotential) {
    const Dvr3d dvr(RadialGrid(0.2, 64), 6, 4);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    HamiltonianSpec spec;
    spec.momenta = Momenta::corrected;
    spec.potential.resize(dvr.size());
    for (auto& v : spec.potential) v = u(rng);
    spec.vector_potential = [](double t) { return Vec3{0.1 + t, -0.2, 0.3}; };
    spec.electric_force = [](double) { return Vec3{0.05, 0.0, -0.1}; };
    for (unsigned seed = 0; seed < 3; ++seed) {
        SphericalField a{dvr.shape(), unit_random(dvr.size(), 100 + seed)};
        SphericalField b{dvr.shape(), unit_random(dvr.size(), 200 + seed)};
        const cplx ab = overlap(a, apply_hamiltonian(spec, dvr, b, 0.3));
        const cplx ba = overlap(b, apply_hamiltonian(spec, dvr, a, 0.3));
        EXPECT_LT(std::abs(ab - std::conj(ba)), 1e-11) << seed;
    }
}

TEST(Hamiltonian, NonFinitePotentialNamesTheNode) {
    const Dvr3d dvr(RadialGrid(0.2, 16), 3, 2);
    HamiltonianSpec spec;
    spec.potential.assign(dvr.size(), 0.0);
    spec.potential[dvr.shape().index(4, 2, 1)] = std::numeric_limits<double>::infinity();
    SphericalField f{dvr.shape(), std::vector<cplx>(dvr.size(), 1.0)};
    try {
        (void)apply_hamiltonian(spec, dvr, f, 0.0);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("(i=5, j=3, k=2)"), std::string::npos) << e.what();
    }
}

TEST(Hamiltonian, SerialAndThreadedAgree) {
    const Dvr3d dvr(RadialGrid(0.2, 64), 6, 4);
    SphericalField f{dvr.shape(), unit_random(dvr.size(), 9)};
    HamiltonianSpec spec;
    spec.vector_potential = [](double) { return Vec3{0.0, 0.1, 0.2}; };
    const int before = thread_count();
    set_thread_count(1);
    const auto a = apply_hamiltonian(spec, dvr, f, 0.0);
    set_thread_count(4);
    const auto b = apply_hamiltonian(spec, dvr, f, 0.0);
    set_thread_count(before);
    EXPECT_EQ(a.values, b.values);
}
