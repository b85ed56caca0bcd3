#include "aloha/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/core.h>

#include "aloha/quadrature.hpp"

namespace aloha {

namespace {

void check_probabilities(std::span<const double> p) {
    for (double q : p)
        if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument(fmt::format("probability {} outside [0,1]", q));
}

void check_power_size(std::size_t n) {
    if (n > kMaxPowerNodes)
        throw std::invalid_argument(fmt::format("power-capture formulas support at most {} nodes", kMaxPowerNodes));
}

// (1+D)/(k+1+D); tends to 1 as D -> inf.
double guard_coefficient(std::size_t k, double delta) {
    if (std::isinf(delta)) return 1.0;
    return (1.0 + delta) / (static_cast<double>(k) + 1.0 + delta);
}

std::vector<double> others(std::span<const double> p, std::size_t i) {
    std::vector<double> out;
    out.reserve(p.size() - 1);
    for (std::size_t j = 0; j < p.size(); ++j)
        if (j != i) out.push_back(p[j]);
    return out;
}

double sinr_nocsi_node(std::span<const double> p, std::size_t i, double b, double noise_ratio) {
    double r = std::exp(-b * noise_ratio) * p[i];
    const double shrink = b / (1.0 + b);
    for (std::size_t j = 0; j < p.size(); ++j)
        if (j != i) r *= 1.0 - shrink * p[j];
    return r;
}

double sinr_csi_node(std::span<const double> p, std::size_t i, double b, double noise_ratio) {
    if (p[i] == 0.0) return 0.0;  // absent node (infinite threshold)
    const double floor_prob = std::exp(-b * noise_ratio);
    double captured = floor_prob;
    double silent = 1.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (j == i) continue;
        captured *= std::pow(p[j], b + 1.0) / (b + 1.0) + (1.0 - p[j]);
        silent *= 1.0 - p[j];
    }
    return captured + silent * std::min(p[i] - floor_prob, 0.0);
}

double power_nocsi_node(std::span<const double> p, std::size_t i, double delta) {
    if (std::isinf(delta)) {
        double r = p[i];
        for (std::size_t j = 0; j < p.size(); ++j)
            if (j != i) r *= 1.0 - p[j];
        return r;
    }
    const auto e = elementary_symmetric(others(p, i));
    double sum = 0.0;
    double sign = 1.0;
    for (std::size_t k = 0; k < e.size(); ++k, sign = -sign) sum += sign * guard_coefficient(k, delta) * e[k];
    return p[i] * sum;
}

double power_csi_node(std::span<const double> p, std::size_t i, double delta, double abs_tol) {
    if (p[i] == 0.0) return 0.0;
    if (std::isinf(delta)) return power_nocsi_node(p, i, delta);

    std::vector<double> rivals;       // p_j of nodes that ever transmit
    std::vector<double> breakpoints;  // (1+D) T_j
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (j == i || p[j] == 0.0) continue;
        rivals.push_back(p[j]);
        breakpoints.push_back((1.0 + delta) * -std::log(p[j]));
    }
    const double scale = 1.0 / (1.0 + delta);
    auto not_blocked = [&](double x) {
        const double below = 1.0 - std::exp(-x * scale);
        double prod = 1.0;
        for (double q : rivals) prod *= std::max(1.0 - q, below);
        return prod;
    };
    return integrate_exp_weighted(not_blocked, -std::log(p[i]), breakpoints, abs_tol).value;
}

double binomial(std::size_t n, std::size_t k) {
    double c = 1.0;
    for (std::size_t j = 1; j <= k; ++j) c = c * static_cast<double>(n - k + j) / static_cast<double>(j);
    return c;
}

// sum_k (-1)^k C(n-1,k) (1+D)/(k+1+D) p^{k+1+shift}
double power_homog_series(double p, std::size_t n, double delta, double shift) {
    double sum = 0.0;
    double sign = 1.0;
    for (std::size_t k = 0; k < n; ++k, sign = -sign)
        sum += sign * binomial(n - 1, k) * guard_coefficient(k, delta) *
               std::pow(p, static_cast<double>(k + 1) + shift);
    return sum;
}

void check_homog(double p, std::size_t n) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(fmt::format("probability {} outside [0,1]", p));
    if (n == 0) throw std::invalid_argument("node count must be positive");
}

}  // namespace

std::vector<double> elementary_symmetric(std::span<const double> x) {
    std::vector<double> e(x.size() + 1, 0.0);
    e[0] = 1.0;
    for (std::size_t m = 0; m < x.size(); ++m)
        for (std::size_t k = m + 1; k >= 1; --k) e[k] += x[m] * e[k - 1];
    return e;
}

ThroughputVector sinr_nocsi_throughput(std::span<const double> p, double b, double noise_ratio) {
    check_probabilities(p);
    ThroughputVector r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = sinr_nocsi_node(p, i, b, noise_ratio);
    return r;
}

double sinr_nocsi_homog(double p, std::size_t n, double b, double noise_ratio) {
    check_homog(p, n);
    return std::exp(-b * noise_ratio) * p * std::pow(1.0 - b * p / (1.0 + b), static_cast<double>(n - 1));
}

bool sinr_csi_valid(std::span<const double> p, double b, double noise_ratio) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        // The binding set is node i plus the single peer with the smallest threshold.
        double min_peer = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < p.size(); ++j)
            if (j != i && p[j] > 0.0) min_peer = std::min(min_peer, -std::log(p[j]));
        if (std::isinf(min_peer)) continue;
        if (b * (min_peer + noise_ratio) < -std::log(p[i])) return false;
    }
    return true;
}

SinrCsiThroughput sinr_csi_throughput(std::span<const double> p, double b, double noise_ratio) {
    check_probabilities(p);
    SinrCsiThroughput out;
    out.r.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out.r[i] = sinr_csi_node(p, i, b, noise_ratio);
    out.valid = sinr_csi_valid(p, b, noise_ratio);
    return out;
}

double sinr_csi_homog(double p, std::size_t n, double b, double noise_ratio) {
    check_homog(p, n);
    if (b < 1.0) throw std::invalid_argument(fmt::format("homogeneous perfect-CSI SINR form needs b >= 1, got {}", b));
    const double floor_prob = std::exp(-b * noise_ratio);
    const double m = static_cast<double>(n - 1);
    return std::pow((1.0 - p) + std::pow(p, b + 1.0) / (b + 1.0), m) * floor_prob +
           std::pow(1.0 - p, m) * std::min(p - floor_prob, 0.0);
}

ThroughputVector power_nocsi_throughput(std::span<const double> p, double delta) {
    check_probabilities(p);
    check_power_size(p.size());
    ThroughputVector r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = power_nocsi_node(p, i, delta);
    return r;
}

ThroughputVector power_csi_throughput(std::span<const double> p, double delta, double abs_tol) {
    check_probabilities(p);
    check_power_size(p.size());
    ThroughputVector r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = power_csi_node(p, i, delta, abs_tol);
    return r;
}

double power_nocsi_homog(double p, std::size_t n, double delta) {
    check_homog(p, n);
    if (std::isinf(delta)) return p * std::pow(1.0 - p, static_cast<double>(n - 1));
    return power_homog_series(p, n, delta, 0.0);
}

double power_csi_homog(double p, std::size_t n, double delta) {
    check_homog(p, n);
    const double collision = p * std::pow(1.0 - p, static_cast<double>(n - 1));
    if (std::isinf(delta)) return collision;
    return collision * (1.0 - std::pow(p, delta)) + power_homog_series(p, n, delta, delta);
}

double power_integral_identity(std::size_t n, double delta) {
    if (std::isinf(delta)) return 1.0;
    return (1.0 + delta) / (1.0 + delta + static_cast<double>(n));
}

double power_integral_quadrature(std::size_t n, double delta, double abs_tol) {
    const double rate = std::isinf(delta) ? 0.0 : static_cast<double>(n) / (1.0 + delta);
    // (1 - F(x/(1+D)))^n = exp(-n x / (1+D)) for the unit exponential.
    auto survivor_power = [rate](double x) { return std::exp(-rate * x); };
    return integrate_exp_weighted(survivor_power, 0.0, {}, abs_tol).value;
}

ThroughputVector throughput(const Regime& regime, std::span<const double> p) {
    if (const auto* s = std::get_if<SinrCapture>(&regime.model)) {
        if (regime.csi == CsiKind::None) return sinr_nocsi_throughput(p, s->b, s->noise_ratio);
        return sinr_csi_throughput(p, s->b, s->noise_ratio).r;
    }
    const double delta = std::get<PowerCapture>(regime.model).delta;
    if (regime.csi == CsiKind::None) return power_nocsi_throughput(p, delta);
    return power_csi_throughput(p, delta);
}

double node_throughput(const Regime& regime, std::size_t i, std::span<const double> p) {
    if (i >= p.size()) throw std::out_of_range("node index out of range");
    check_probabilities(p);
    if (const auto* s = std::get_if<SinrCapture>(&regime.model)) {
        if (regime.csi == CsiKind::None) return sinr_nocsi_node(p, i, s->b, s->noise_ratio);
        return sinr_csi_node(p, i, s->b, s->noise_ratio);
    }
    check_power_size(p.size());
    const double delta = std::get<PowerCapture>(regime.model).delta;
    if (regime.csi == CsiKind::None) return power_nocsi_node(p, i, delta);
    return power_csi_node(p, i, delta, 1e-10);
}

double homogeneous_throughput(const Regime& regime, double p, std::size_t n) {
    if (const auto* s = std::get_if<SinrCapture>(&regime.model)) {
        if (regime.csi == CsiKind::None) return sinr_nocsi_homog(p, n, s->b, s->noise_ratio);
        return sinr_csi_homog(p, n, s->b, s->noise_ratio);
    }
    const double delta = std::get<PowerCapture>(regime.model).delta;
    if (regime.csi == CsiKind::None) return power_nocsi_homog(p, n, delta);
    return power_csi_homog(p, n, delta);
}

}  // namespace aloha
