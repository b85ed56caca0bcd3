#include "aloha/paradox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "aloha/analytic.hpp"
#include "aloha/simulator.hpp"

namespace aloha {

namespace {

// Simulated homogeneous perfect-CSI throughput of node 0 and its standard error.
std::pair<double, double> simulate_csi_point(const CaptureModel& model, std::size_t n, double p,
                                             const SimFallback& fallback, std::uint64_t salt) {
    Scenario s;
    s.model = model;
    s.slots = fallback.slots_per_point;
    s.seed = fallback.seed + salt;
    for (std::size_t i = 0; i < n; ++i) s.nodes.push_back(NodeSpec::perfect(0.0, p));
    const auto trace = run(s);
    // All nodes are exchangeable; pool them for the estimate.
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += trace.rho_hat(i);
    const double rho = total / static_cast<double>(n);
    const double se = std::sqrt(std::max(rho * (1.0 - rho), 0.0) / (static_cast<double>(s.slots) * n));
    return {rho, se};
}

}  // namespace

std::vector<double> uniform_grid(double start, double stop, std::size_t count) {
    if (count == 0) throw std::invalid_argument("grid needs at least one point");
    if (!(start >= 0.0 && stop <= 1.0 && start <= stop)) throw std::invalid_argument("grid must lie within [0,1]");
    std::vector<double> g(count);
    if (count == 1) {
        g[0] = start;
        return g;
    }
    for (std::size_t k = 0; k < count; ++k)
        g[k] = start + (stop - start) * static_cast<double>(k) / static_cast<double>(count - 1);
    g.back() = stop;
    return g;
}

ParadoxReport compare_homogeneous(const CaptureModel& model, std::size_t n, std::span<const double> grid,
                                  const SimFallback& fallback) {
    validate(model);
    if (n == 0) throw std::invalid_argument("node count must be positive");
    ParadoxReport rep;
    rep.model = model;
    rep.n = n;
    rep.grid.assign(grid.begin(), grid.end());
    const Regime none{model, CsiKind::None};
    const Regime perfect{model, CsiKind::Perfect};

    const auto* sinr = std::get_if<SinrCapture>(&model);
    rep.simulated = sinr && sinr->b < 1.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double p = grid[k];
        const double a = homogeneous_throughput(none, p, n);
        double c = 0.0, se = 0.0;
        if (rep.simulated) {
            std::tie(c, se) = simulate_csi_point(model, n, p, fallback, k);
        } else {
            c = homogeneous_throughput(perfect, p, n);
        }
        rep.rho_nocsi.push_back(a);
        rep.rho_csi.push_back(c);
        rep.gap.push_back(a - c);
        rep.gap_error.push_back(se);
    }

    rep.paradox_present = true;
    for (std::size_t k = 0; k < rep.gap.size(); ++k) {
        // Simulated points allow for sampling noise at four standard errors.
        const double tol = rep.simulated ? 4.0 * rep.gap_error[k] + 1e-12 : rep.tolerance;
        if (rep.gap[k] < -tol) rep.paradox_present = false;
    }
    return rep;
}

double theorem2_margin(double b, std::size_t n, std::span<const double> grid) {
    if (!(b > 0.0)) throw std::invalid_argument("capture ratio must be positive");
    if (n == 0) throw std::invalid_argument("node count must be positive");
    const double m = static_cast<double>(n - 1);
    double worst = std::numeric_limits<double>::infinity();
    for (double p : grid) {
        const double lhs = p * std::pow(1.0 - b / (b + 1.0) * p, m) + std::pow(1.0 - p, static_cast<double>(n));
        const double rhs = std::pow((1.0 - p) + std::pow(p, b + 1.0) / (b + 1.0), m);
        worst = std::min(worst, lhs - rhs);
    }
    return worst;
}

bool verify_theorem2(double b, std::size_t n, std::span<const double> grid) {
    return theorem2_margin(b, n, grid) >= -1e-12;
}

HeterogeneousComparison heterogeneous_case_compare(std::span<const double> p, double b, double noise_ratio,
                                                   const SimFallback& fallback) {
    HeterogeneousComparison cmp;
    const auto nocsi = sinr_nocsi_throughput(p, b, noise_ratio);
    const auto csi = sinr_csi_throughput(p, b, noise_ratio);
    cmp.analytic_valid = csi.valid;
    std::vector<double> csi_r = csi.r;
    if (!csi.valid) {
        cmp.simulated = true;
        Scenario s;
        s.model = SinrCapture{b, noise_ratio};
        s.slots = fallback.slots_per_point;
        s.seed = fallback.seed;
        for (double q : p) s.nodes.push_back(NodeSpec::perfect(0.0, q));
        csi_r = run(s).rho_hat();
    }
    for (std::size_t i = 0; i < p.size(); ++i) cmp.nodes.push_back({p[i], nocsi[i], csi_r[i], nocsi[i] - csi_r[i]});
    return cmp;
}

bool verify_theorem4(std::size_t n, double delta, std::span<const double> grid) {
    for (double p : grid)
        if (power_csi_homog(p, n, delta) > power_nocsi_homog(p, n, delta) + 1e-12) return false;
    return true;
}

double theorem4_identity_error(std::size_t n, double delta, std::span<const double> grid) {
    double worst = 0.0;
    for (double p : grid) {
        const double rho = power_nocsi_homog(p, n, delta);
        const double weight = std::isinf(delta) ? (p == 1.0 ? 1.0 : 0.0) : std::pow(p, delta);
        const double mixed = (1.0 - weight) * p * std::pow(1.0 - p, static_cast<double>(n - 1)) + weight * rho;
        worst = std::max(worst, std::abs(power_csi_homog(p, n, delta) - mixed));
    }
    return worst;
}

}  // namespace aloha
