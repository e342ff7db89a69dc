#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sphbt/cli.hpp"
#include "sphbt/dlop.hpp"
#include "sphbt/radial_transform.hpp"
#include "support.hpp"

using namespace sphbt;
using namespace sphbt::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

cli::json params(const std::string& sub, const std::vector<std::string>& overrides) {
    return cli::parse_config(sub, std::nullopt, overrides).params;
}

Outcome orthogonality() {
    double gram = 0.0, trip = 0.0;
    for (int l = 0; l <= 16; ++l)
        for (long N : {64L, 256L, 1024L}) {
            const auto plan = make_plan(l, RadialGrid(0.1, N));
            gram = std::max(gram, gram_error(plan.dense_ftb(), static_cast<std::size_t>(N)));
            const auto x = random_complex(static_cast<std::size_t>(N), static_cast<unsigned>(7 * l + N));
            std::vector<cplx> b(x.size()), back(x.size());
            plan.dsbt<cplx>(x, b, Direction::forward);
            plan.dsbt<cplx>(b, back, Direction::inverse);
            trip = std::max(trip, max_diff(back, x) / norm2(x));
        }
    return {gram < 1e-11 && trip < 1e-12, "max|TT^T - I| = " + num(gram) + ", round trip " + num(trip)};
}

Outcome fast_dense() {
    double worst = 0.0;
    for (int l = 0; l <= 16; ++l)
        for (long N : {64L, 1000L, 4096L}) {
            const auto plan = make_plan(l, RadialGrid(0.1, N));
            const auto T = plan.dense_ftb();
            const auto x = random_complex(static_cast<std::size_t>(N), static_cast<unsigned>(3 * l + N));
            std::vector<cplx> y(x.size());
            plan.ftb<cplx>(x, y, Direction::forward);
            worst = std::max(worst, max_diff(y, dense_apply(T, x.size(), x, false)) / norm2(x));
            plan.ftb<cplx>(x, y, Direction::inverse);
            worst = std::max(worst, max_diff(y, dense_apply(T, x.size(), x, true)) / norm2(x));
        }
    return {worst < 1e-10, "max |fast - dense| / |x| = " + num(worst)};
}

Outcome identities() {
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> ldist(1, 24);
    std::uniform_int_distribution<long> ndist(30, 400);
    std::uniform_real_distribution<double> cdist(-1.0, 1.0);
    double moment = 0.0, weighted = 0.0, parity = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const int l = ldist(rng);
        const long N = ndist(rng);
        // moment annihilation: sum_i P_l(i, N) (i/N)^s = 0 for s < l
        const int s = std::uniform_int_distribution<int>(0, l - 1)(rng);
        double sum = 0.0, mag = 0.0;
        for (long i = 0; i <= N; ++i) {
            const double v = dlop::dlop_eval(l, i, N, dlop::Strategy::degree_recurrence) *
                             std::pow(static_cast<double>(i) / N, s);
            sum += v;
            mag += std::abs(v);
        }
        moment = std::max(moment, std::abs(sum) / mag);
        // weighted sum: sum_i P'_l(i, N) p(i) w_i = (-1)^l p(N) - p(0) for deg p < l
        std::vector<double> c(static_cast<std::size_t>(std::uniform_int_distribution<int>(0, l - 1)(rng)) + 1);
        for (auto& e : c) e = cdist(rng);
        auto p = [&](long i) {
            double acc = 0.0;
            for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * (static_cast<double>(i) / N) + *it;
            return acc;
        };
        double lhs = 0.0, pmax = 0.0;
        for (long i = 0; i <= N; ++i) {
            lhs += dlop::ddlop_eval(l, i, N, dlop::Strategy::degree_recurrence) * p(i) * ((i == 0 || i == N) ? 0.5 : 1.0);
            pmax = std::max(pmax, std::abs(p(i)));
        }
        weighted = std::max(weighted, std::abs(lhs - ((l % 2 == 0 ? 1.0 : -1.0) * p(N) - p(0))) / pmax);
        // DDLOP parity: P'_l(N - i, N) = (-1)^(l-1) P'_l(i, N)
        const long i = std::uniform_int_distribution<long>(0, N)(rng);
        const double a = dlop::ddlop_eval(l, i, N, dlop::Strategy::degree_recurrence);
        const double b = dlop::ddlop_eval(l, N - i, N, dlop::Strategy::degree_recurrence);
        const double sgn = (l - 1) % 2 == 0 ? 1.0 : -1.0;
        parity = std::max(parity, std::abs(a - sgn * b) / std::max(1e-300, std::max(std::abs(a), std::abs(b))));
    }
    return {moment < 1e-9 && weighted < 1e-9 && parity < 1e-9,
            "500 instances: moments " + num(moment) + ", weighted sum " + num(weighted) + ", parity " + num(parity)};
}

Outcome convergence() {
    const auto r = cli::transform_convergence(params("transform-convergence", {}));
    double lo = 1e300, hi = 0.0;
    for (const auto& s : r.summary)
        if (!std::isnan(s.ratio)) {
            lo = std::min(lo, s.ratio);
            hi = std::max(hi, s.ratio);
        }
    return {lo >= 3.0 && hi <= 5.0, "error ratio per r_max doubling in [" + num(lo) + ", " + num(hi) + "]"};
}

Outcome performance() {
    const auto r = cli::ftb_bench(params("ftb-bench", {"--sizes", "8192,65536", "--degrees", "8", "--min_time", "1"}));
    const double ratio = r.rows[1].ftb_seconds / r.rows[0].ftb_seconds;
    const double share = r.rows[1].fourier_seconds / r.rows[1].dsbt_seconds;
    return {ratio < 12.0, "l = 8: FtB time(2^16)/time(2^13) = " + num(ratio, 3) + "; Fourier stage " +
                              num(100.0 * share, 3) + "% of the DSBT time at 2^16"};
}

Outcome table(const std::vector<std::string>& overrides, const std::vector<std::pair<std::string, double>>& expected,
              double tol) {
    const auto rows = cli::eigen(params("eigen", overrides));
    if (rows.size() != expected.size()) return {false, "unexpected row count"};
    bool ok = true;
    std::string d;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const bool hit = rows[i].state == expected[i].first && std::abs(rows[i].energy - expected[i].second) <= tol;
        ok = ok && hit;
        d += (i ? ", " : "") + rows[i].state + " " + num(rows[i].energy, 7) + (hit ? "" : " (expected " + num(expected[i].second, 7) + ")");
    }
    return {ok, d};
}

Outcome table1() {
    return table({"--states", "1s,2p", "--angular.ntheta", "2"},
                 {{"1s", -0.505927}, {"2p", -0.125017}, {"1s", -0.501575}, {"2p", -0.125017}, {"1s", -0.500405}, {"2p", -0.125017}},
                 5e-5);
}

Outcome table2() {
    return table({"--preset", "table2", "--states", "1s", "--angular.ntheta", "2", "--grid.dr", "0.2,0.05"},
                 {{"1s", -0.500967}, {"1s", -0.500017}}, 5e-5);
}

Outcome table3() {
    return table({"--preset", "table3"},
                 {{"1sg", -1.066449}, {"2pu", -0.618383}, {"1sg", -1.094991}, {"2pu", -0.659020},
                  {"1sg", -1.101242}, {"2pu", -0.666117}},
                 2e-4);
}

Outcome oscillator() {
    const auto runs = cli::oscillator(params("oscillator", {"--gauge", "velocity", "--observe_every", "10000"}));
    double dlo = 1e300, dhi = 0.0, clo = 1e300, chi = 0.0;
    for (const auto& r : runs) {
        if (!std::isnan(r.ratio)) {
            dlo = std::min(dlo, r.ratio);
            dhi = std::max(dhi, r.ratio);
        }
        if (r.momenta != "corrected") continue;
        for (const auto& q : runs)
            if (q.momenta == "plain" && q.omega == r.omega && q.rmax == r.rmax) {
                clo = std::min(clo, q.delta_final / r.delta_final);
                chi = std::max(chi, q.delta_final / r.delta_final);
            }
    }
    return {dlo >= 3.0 && dhi <= 5.0 && clo >= 3.0 && chi <= 6.0,
            "doubling ratios in [" + num(dlo, 3) + ", " + num(dhi, 3) + "], correction gain in [" + num(clo, 3) + ", " +
                num(chi, 3) + "]"};
}

Outcome streaking() {
    const auto runs = cli::streak(params("streak", {}));
    const auto& r = runs.front();
    const bool ok = r.norm_final >= 1.0 - 1e-6 && r.norm_final <= 1.0 && std::abs(r.peak_radius - 100.0) <= 10.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "norm %.15f, one-photon peak at r = %.2f", r.norm_final, r.peak_radius);
    return {ok, buf};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"transform orthogonality", orthogonality},
        {"fast/dense FtB equivalence", fast_dense},
        {"DLOP identities", identities},
        {"Gaussian orbital convergence", convergence},
        {"FtB performance model", performance},
        {"H bound states, Coulomb", table1},
        {"H bound states, effective potential", table2},
        {"H2+ bound states", table3},
        {"driven oscillator scaling", oscillator},
        {"streaking smoke test", streaking},
    };
    std::set<int> only;
    for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));
    int failures = 0;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        const int id = static_cast<int>(c) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[c].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %s: %s: %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", criteria[c].first.c_str(),
                    o.detail.c_str(), sec);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
