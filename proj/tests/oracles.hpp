#pragma once

// Independent reference computations used by the tests. None of these call
// into the analytic module.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "aloha/models.hpp"
#include "aloha/simulator.hpp"

namespace oracle {

// Sum over all transmit subsets S containing i of P(S) * P(i decoded | S).
// `capture(k)` gives the decoding probability when k other nodes transmit.
inline std::vector<double> subset_sum(const std::vector<double>& p, const std::function<double(std::size_t)>& capture) {
    const std::size_t n = p.size();
    std::vector<double> r(n, 0.0);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        double prob = 1.0;
        std::size_t k = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const bool on = mask >> j & 1u;
            prob *= on ? p[j] : 1.0 - p[j];
            k += on;
        }
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1u) r[i] += prob * capture(k - 1);
    }
    return r;
}

// Unit exponential gains: P(x_i > b (N + sum of k others)) = e^{-bN} (1+b)^{-k}.
inline std::vector<double> sinr_nocsi(const std::vector<double>& p, double b, double noise) {
    return subset_sum(p, [&](std::size_t k) { return std::exp(-b * noise) * std::pow(1.0 + b, -double(k)); });
}

// P(x_i > c x_j for k others) = sum_m C(k,m) (-1)^m / (1 + m/c), c = 1 + delta.
inline std::vector<double> power_nocsi(const std::vector<double>& p, double delta) {
    return subset_sum(p, [&](std::size_t k) {
        if (std::isinf(delta)) return k == 0 ? 1.0 : 0.0;
        const double c = 1.0 + delta;
        double s = 0.0, binom = 1.0;
        for (std::size_t m = 0; m <= k; ++m) {
            s += (m % 2 ? -1.0 : 1.0) * binom / (1.0 + double(m) / c);
            binom = binom * double(k - m) / double(m + 1);
        }
        return s;
    });
}

inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

// Two homogeneous perfect-CSI nodes under SINR capture, node 1's throughput by
// direct double integration over the joint gain density.
inline double sinr_csi_two_nodes(double p, double b, double noise) {
    const double t = -std::log(p);
    // node 2 silent: x2 <= t, node 1 transmits and x1 > max(t, bN)
    const double alone = (1.0 - p) * std::exp(-std::max(t, b * noise));
    // both transmit: x2 > t, x1 > max(t, b (x2 + N))
    const double upper = t + 60.0;
    const auto f = [&](double x2) { return std::exp(-x2) * std::exp(-std::max(t, b * (x2 + noise))); };
    const double kink = t / b - noise;
    const double both = kink > t ? simpson(f, t, kink, 20000) + simpson(f, kink, upper, 20000)
                                 : simpson(f, t, upper, 20000);
    return alone + both;
}

struct McResult {
    std::vector<double> rho;
    double slots = 0;
    double sigma(std::size_t i) const { return std::sqrt(rho[i] * (1.0 - rho[i]) / slots); }
};

inline McResult monte_carlo(const aloha::CaptureModel& model, const std::vector<aloha::NodeSpec>& nodes,
                            std::uint64_t slots, std::uint64_t seed) {
    aloha::Scenario s{nodes, model, seed, slots};
    const auto t = aloha::run(s);
    return {t.rho_hat(), double(slots)};
}

}  // namespace oracle
