#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "aloha/dynamics.hpp"
#include "aloha/solver.hpp"

using namespace aloha;
using doctest::Approx;

namespace {

const std::vector<double> kDemands{0.10, 0.05, 0.01};
const Regime kNoCsi{SinrCapture{5.0, 0.1}, CsiKind::None};
const Regime kPerfect{SinrCapture{5.0, 0.1}, CsiKind::Perfect};

}  // namespace

TEST_CASE("update rule") {
    const std::vector<double> p{0.2, 0.4}, rho{0.1, 0.2};
    SUBCASE("estimates equal to demands leave p alone") {
        CHECK(update_step(p, rho, rho, 0.5) == p);
    }
    SUBCASE("doubled estimates halve p at full step") {
        const auto next = update_step(p, std::vector<double>{0.2, 0.4}, rho, 1.0);
        CHECK(next[0] == Approx(0.1));
        CHECK(next[1] == Approx(0.2));
    }
    SUBCASE("zero estimate saturates") {
        std::vector<bool> sat;
        const auto next = update_step(p, std::vector<double>{0.0, 0.2}, rho, 1.0, &sat);
        CHECK(next[0] == 1.0);
        CHECK(sat == std::vector<bool>{true, false});
    }
    SUBCASE("target is capped at one") {
        const auto next = update_step(std::vector<double>{0.9}, std::vector<double>{0.01}, std::vector<double>{0.5}, 1.0);
        CHECK(next[0] == 1.0);
    }
    CHECK_THROWS_AS(update_step(p, rho, rho, 0.0), std::invalid_argument);
}

TEST_CASE("step size schedules") {
    CHECK(EpsSchedule::harmonic().at(0) == 1.0);
    CHECK(EpsSchedule::harmonic().at(3) == 0.25);
    CHECK(EpsSchedule::constant(0.1).at(1000) == 0.1);
}

TEST_CASE("three-node network with the analytic estimator") {
    const auto trace = run_dynamics(kDemands, kNoCsi);
    REQUIRE(trace.converged);
    CHECK(trace.final_residual <= 1e-6);
    const auto eq = solve_equilibrium(kDemands, kNoCsi);
    REQUIRE(eq.status == SolveStatus::Converged);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(trace.final_p[i] - eq.points[0][i]) < 1e-4);
    CHECK(trace.steps.front().p == kDemands);
    CHECK(trace.steps.front().eps == 1.0);
}

TEST_CASE("perfect csi, analytic estimator") {
    const auto trace = run_dynamics(kDemands, kPerfect);
    REQUIRE(trace.converged);
    CHECK(trace.final_residual <= 1e-6);
    const auto& last = trace.steps.back();
    for (std::size_t i = 0; i < 3; ++i) CHECK(last.threshold[i] == Approx(-std::log(last.p[i])));
}

TEST_CASE("starting at an equilibrium does not move") {
    // a lone node under power capture gets r = p, so p = demand is already a fixed point
    const auto trace = run_dynamics(std::vector<double>{0.3}, Regime{PowerCapture{1.0}, CsiKind::None});
    CHECK(trace.converged);
    CHECK(trace.iterations == 0);
    CHECK(trace.final_p == std::vector<double>{0.3});
}

TEST_CASE("asynchronous updates converge to the same point") {
    DynamicsOptions o;
    o.asynchronous = true;
    const auto a = run_dynamics(kDemands, kNoCsi, o);
    const auto s = run_dynamics(kDemands, kNoCsi);
    REQUIRE(a.converged);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(a.final_p[i] - s.final_p[i]) < 1e-4);
}

TEST_CASE("empirical estimator: seeds agree within their noise") {
    std::vector<std::vector<double>> finals;
    std::vector<std::vector<double>> errors;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        DynamicsOptions o;
        o.estimator = EmpiricalEstimator{100, 100'000, seed};
        o.max_iter = 100'000;
        o.record_every = 10'000;
        const auto t = run_dynamics(kDemands, kPerfect, o);
        CHECK(t.slots_elapsed == 10'000'000);
        finals.push_back(t.final_p);
        errors.push_back(dynamics_standard_error(t));
    }
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b)
            for (std::size_t i = 0; i < 3; ++i) {
                const double se = std::hypot(errors[a][i], errors[b][i]);
                CHECK(std::abs(finals[a][i] - finals[b][i]) < 4.0 * se);
            }
}

TEST_CASE("harmonic steps make p the running mean of the targets") {
    DynamicsOptions o;
    o.estimator = EmpiricalEstimator{100, 0, 9};
    o.max_iter = 400;
    const auto t = run_dynamics(kDemands, kNoCsi, o);
    for (std::size_t i = 0; i < 3; ++i) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 0; k < t.batch_count[i].size(); ++k) {
            sum += t.batch_target_sum[i][k];
            count += t.batch_count[i][k];
        }
        CHECK(count == 400);
        CHECK(t.final_p[i] == Approx(sum / 400.0).epsilon(1e-12));
    }
    o.eps = EpsSchedule::constant(0.1);
    CHECK_THROWS_AS(dynamics_standard_error(run_dynamics(kDemands, kNoCsi, o)), std::invalid_argument);
}

TEST_CASE("windowed estimator runs and stays in range") {
    DynamicsOptions o;
    o.estimator = EmpiricalEstimator{50, 5000, 4};
    o.max_iter = 2000;
    o.eps = EpsSchedule::constant(0.05);
    const auto t = run_dynamics(kDemands, kNoCsi, o);
    for (double p : t.final_p) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("invalid inputs") {
    CHECK_THROWS_AS(run_dynamics(std::vector<double>{}, kNoCsi), std::invalid_argument);
    CHECK_THROWS_AS(run_dynamics(std::vector<double>{0.0, 0.1}, kNoCsi), std::invalid_argument);
}
