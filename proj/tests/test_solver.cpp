#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <numeric>
#include <random>

#include "aloha/solver.hpp"
#include "oracles.hpp"

using namespace aloha;
using doctest::Approx;

namespace {

double max_residual(const Regime& regime, const std::vector<double>& p, const std::vector<double>& demands) {
    const auto r = throughput(regime, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i] - demands[i]));
    return worst;
}

// -sum_{k>=1} (-1)^{k+1} e_k / k, the closed form of int_0^1 (prod(1 - p x) - 1)/x dx
double g_integral_oracle(const std::vector<double>& p) {
    std::vector<double> e(p.size() + 1, 0.0);
    e[0] = 1.0;
    for (double x : p)
        for (std::size_t k = p.size(); k >= 1; --k) e[k] += x * e[k - 1];
    double s = 0.0;
    for (std::size_t k = 1; k < e.size(); ++k) s += (k % 2 ? -1.0 : 1.0) * e[k] / double(k);
    return s;
}

}  // namespace

TEST_CASE("best response") {
    const Regime sinr{SinrCapture{5.0, 0.01}, CsiKind::None};
    CHECK(*best_response(0, std::vector<double>{0.24}, 0.0, sinr) == 0.0);
    CHECK(std::abs(*best_response(0, std::vector<double>{0.24}, 0.3957, sinr) - 0.52) < 1e-3);

    const Regime perfect_power{PowerCapture{0.0}, CsiKind::None};
    CHECK(*best_response(0, std::vector<double>{0.5}, 0.5, perfect_power) == Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK_FALSE(best_response(0, std::vector<double>{0.5}, 0.8, perfect_power).has_value());
}

TEST_CASE("two-node sinr equilibrium") {
    const Regime regime{SinrCapture{5.0, 0.01}, CsiKind::None};
    const std::vector<double> demands{0.3957, 0.129};
    const auto res = solve_equilibrium(demands, regime);
    REQUIRE(res.status == SolveStatus::Converged);
    const auto& p = *res.preferred();
    CHECK(std::abs(p[0] - 0.52) < 1e-3);
    CHECK(std::abs(p[1] - 0.24) < 1e-3);
    CHECK(res.residuals[0] <= 1e-8);
    CHECK(res.classification[0] == Classification::Preferred);
    CHECK(res.monotone);
    CHECK(theorem1_bound_check(res, 5.0));

    const auto second = find_second_equilibrium(demands, regime, p);
    REQUIRE(second.has_value());
    CHECK(max_residual(regime, *second, demands) < 1e-8);
    CHECK((*second)[0] + (*second)[1] > 1.2);
}

TEST_CASE("zero demands give the silent point") {
    const auto res = solve_equilibrium(std::vector<double>{0.0, 0.0, 0.0}, Regime{SinrCapture{5.0, 0.0}, CsiKind::None});
    REQUIRE(res.status == SolveStatus::Converged);
    CHECK(*res.preferred() == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("perfect power capture: unique point from many starts") {
    const Regime regime{PowerCapture{0.0}, CsiKind::None};
    const std::vector<double> demands{0.3, 0.3, 0.3};
    const auto base = solve_equilibrium(demands, regime);
    REQUIRE(base.status == SolveStatus::Converged);
    CHECK(base.classification[0] == Classification::Unique);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int s = 0; s < 20; ++s) {
        SolverOptions o;
        o.start = std::vector<double>{u(rng), u(rng), u(rng)};
        const auto r = solve_equilibrium(demands, regime, o);
        REQUIRE(r.status == SolveStatus::Converged);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.points[0][i] - base.points[0][i]) < 1e-6);
    }
}

TEST_CASE("infeasible demands") {
    const auto res = solve_equilibrium(std::vector<double>{0.6, 0.6}, Regime{PowerCapture::collision(), CsiKind::None});
    CHECK(res.status == SolveStatus::Infeasible);
    CHECK_FALSE(res.feasible);
    CHECK(res.infeasible_node.has_value());
}

TEST_CASE("homogeneous roots") {
    SUBCASE("collision, two nodes") {
        const auto res = find_homogeneous_equilibria(0.16, 2, Regime{PowerCapture::collision(), CsiKind::None});
        REQUIRE(res.points.size() == 2);
        CHECK(res.points[0][0] == Approx(0.2).epsilon(1e-9));
        CHECK(res.points[1][0] == Approx(0.8).epsilon(1e-9));
        CHECK(res.classification[0] == Classification::Preferred);
        CHECK(res.classification[1] == Classification::Second);
    }
    SUBCASE("sinr b = 1, one root inside the unit interval") {
        const auto res = find_homogeneous_equilibria(0.375, 2, Regime{SinrCapture{1.0, 0.0}, CsiKind::None});
        REQUIRE(res.points.size() == 1);
        CHECK(res.points[0][0] == Approx(0.5).epsilon(1e-9));
        CHECK(res.classification[0] == Classification::Unique);
    }
    SUBCASE("perfect power capture caps equal demands at one half") {
        const auto res = find_homogeneous_equilibria(0.51, 2, Regime{PowerCapture{0.0}, CsiKind::None});
        CHECK(res.status == SolveStatus::Infeasible);
    }
    SUBCASE("exactly one of two roots meets the sum bound") {
        for (double b : {1.0, 2.0, 5.0, 20.0})
            for (std::size_t n : {2u, 3u, 5u}) {
                const Regime regime{SinrCapture{b, 0.0}, CsiKind::None};
                const auto peak = homogeneous_peak(n, regime);
                for (double frac : {0.2, 0.5, 0.9}) {
                    const auto res = find_homogeneous_equilibria(frac * peak.value, n, regime);
                    if (res.points.size() != 2) continue;
                    int inside = 0;
                    for (const auto& p : res.points) inside += n * p[0] <= (b + 1.0) / b + 1e-9;
                    CHECK(inside == 1);
                    CHECK(n * res.points[0][0] <= (b + 1.0) / b + 1e-9);
                }
            }
    }
}

TEST_CASE("sum bound check") {
    EquilibriumResult r;
    r.points = {{0.52, 0.24}};
    r.residuals = {0.0};
    r.classification = {Classification::Preferred};
    r.status = SolveStatus::Converged;
    r.feasible = true;
    CHECK(theorem1_bound_check(r, 5.0));
    r.points = {{0.6, 0.45}};
    CHECK_FALSE(theorem1_bound_check(r, 1e9));  // bound tends to 1
}

TEST_CASE("auxiliary potential") {
    SUBCASE("one node: rho ln p - p") {
        CHECK(auxiliary_g_value(std::vector<double>{0.4}, std::vector<double>{0.3}) ==
              Approx(0.3 * std::log(0.4) - 0.4).epsilon(1e-12));
    }
    SUBCASE("two nodes against the series") {
        const std::vector<double> p{0.5, 0.5};
        const double expected = 0.3 * std::log(0.5) * 2 + g_integral_oracle(p);
        CHECK(std::abs(auxiliary_g_value(p, std::vector<double>{0.3, 0.3}) - expected) < 1e-10);
    }
    SUBCASE("random points against the series") {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> p(1 + trial % 6), d(p.size());
            for (auto& x : p) x = u(rng);
            for (auto& x : d) x = 0.2 * u(rng);
            double expected = g_integral_oracle(p);
            for (std::size_t i = 0; i < p.size(); ++i) expected += d[i] * std::log(p[i]);
            CHECK(std::abs(auxiliary_g_value(p, d) - expected) < 1e-10);
        }
    }
    SUBCASE("log barrier") {
        CHECK(auxiliary_g_value(std::vector<double>{1e-300, 0.5}, std::vector<double>{0.2, 0.2}) < -100.0);
    }
    SUBCASE("gradient in t is demand minus throughput") {
        AuxiliaryG g(std::vector<double>{0.2, 0.1, 0.3});
        const std::vector<double> p{0.3, 0.2, 0.6};
        std::vector<double> t(3);
        for (std::size_t i = 0; i < 3; ++i) t[i] = std::log(p[i]);
        const auto grad = g.gradient_t(t);
        const auto r = power_nocsi_throughput(p, 0.0);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(grad[i] == Approx(g.demands()[i] - r[i]).epsilon(1e-9));
            auto tp = t, tm = t;
            tp[i] += 1e-5;
            tm[i] -= 1e-5;
            CHECK((g.value_t(tp) - g.value_t(tm)) / 2e-5 == Approx(grad[i]).epsilon(1e-5));
        }
    }
}

TEST_CASE("concave program") {
    SUBCASE("boundary demand") {
        const auto res = solve_delta0_concave(std::vector<double>{1.0, 0.0, 0.0});
        REQUIRE(res.status == SolveStatus::Converged);
        CHECK(res.points[0][0] == Approx(1.0).epsilon(1e-9));
        CHECK(res.points[0][1] == 0.0);
        CHECK(res.points[0][2] == 0.0);
    }
    SUBCASE("agrees with best response") {
        const std::vector<double> d{0.4, 0.3};
        const auto a = solve_delta0_concave(d);
        const auto b = solve_equilibrium(d, Regime{PowerCapture{0.0}, CsiKind::None});
        REQUIRE(a.status == SolveStatus::Converged);
        REQUIRE(b.status == SolveStatus::Converged);
        for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(a.points[0][i] - b.points[0][i]) < 1e-6);
        CHECK(a.classification[0] == Classification::Unique);
    }
    SUBCASE("sum of demands above one") {
        CHECK(solve_delta0_concave(std::vector<double>{0.5, 0.5001}).status == SolveStatus::Infeasible);
        CHECK(solve_delta0_concave(std::vector<double>{0.3, 0.3, 0.4001}).status == SolveStatus::Infeasible);
    }
}

TEST_CASE("concavity of the potential") {
    CHECK(hessian_concavity_check(std::vector<double>{0.5}, std::vector<double>{0.3}) == Approx(-0.5).epsilon(1e-5));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p(2 + trial % 5), d(p.size(), 0.1);
        for (auto& x : p) x = u(rng);
        CHECK(hessian_concavity_check(p, d) < 1e-6);

        // second difference along (1, ..., 1) in t
        AuxiliaryG g(d);
        std::vector<double> t(p.size()), tp(p.size()), tm(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            t[i] = std::log(p[i]);
            tp[i] = t[i] + 1e-3;
            tm[i] = t[i] - 1e-3;
        }
        if (*std::max_element(tp.begin(), tp.end()) < 0.0)
            CHECK(g.value_t(tp) - 2.0 * g.value_t(t) + g.value_t(tm) < 0.0);
    }
}

TEST_CASE("property: preferred point meets every demand with minimal probabilities") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + trial % 3;
        const Regime regime{SinrCapture{1.0 + 9.0 * u(rng), 0.05 * u(rng)}, CsiKind::None};
        std::vector<double> p(n);
        for (auto& x : p) x = 0.3 * u(rng) / n;
        const auto demands = throughput(regime, p);
        const auto res = solve_equilibrium(demands, regime);
        REQUIRE(res.status == SolveStatus::Converged);
        CHECK(max_residual(regime, *res.preferred(), demands) <= 1e-8);
        const double sum = std::accumulate(res.preferred()->begin(), res.preferred()->end(), 0.0);
        const double b = std::get<SinrCapture>(regime.model).b;
        CHECK(sum <= (b + 1.0) / b + 1e-9);
        for (std::size_t i = 0; i < n; ++i) CHECK(res.preferred()->at(i) <= p[i] + 1e-7);
    }
}
