#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aloha/models.hpp"

namespace aloha {

/// Channel knowledge for which closed-form or quadrature throughput exists.
enum class CsiKind { None, Perfect };

/// A capture model paired with the CSI assumption shared by all nodes.
struct Regime {
    CaptureModel model;
    CsiKind csi = CsiKind::None;

    bool is_sinr() const { return std::holds_alternative<SinrCapture>(model); }
    bool is_power() const { return std::holds_alternative<PowerCapture>(model); }
};

using ThroughputVector = std::vector<double>;

/// Elementary symmetric polynomials e_0..e_n of `x` by the O(n^2) recurrence.
std::vector<double> elementary_symmetric(std::span<const double> x);

// -- SINR capture -----------------------------------------------------------

/// No-CSI throughput: r_i = exp(-b N) p_i prod_{j != i} (1 - b p_j / (1 + b)).
ThroughputVector sinr_nocsi_throughput(std::span<const double> p, double b, double noise_ratio);

double sinr_nocsi_homog(double p, std::size_t n, double b, double noise_ratio);

struct SinrCsiThroughput {
    ThroughputVector r;
    /// True when every transmitting set of two or more nodes satisfies the
    /// threshold condition under which the product form is exact.
    bool valid = true;
};

/// Perfect-CSI throughput under SINR capture with thresholds T_j = -ln p_j:
///   r_i = e^{-bN} prod_{j!=i} (p_j^{b+1}/(b+1) + 1 - p_j)
///         + prod_{j!=i} (1 - p_j) * min(p_i - e^{-bN}, 0).
SinrCsiThroughput sinr_csi_throughput(std::span<const double> p, double b, double noise_ratio);

/// Homogeneous perfect-CSI SINR throughput. Requires b >= 1.
double sinr_csi_homog(double p, std::size_t n, double b, double noise_ratio);

/// Condition b (T_min_other + N) >= T_i for every node that transmits with
/// positive probability and has at least one transmitting peer.
bool sinr_csi_valid(std::span<const double> p, double b, double noise_ratio);

// -- Power capture ----------------------------------------------------------

/// Maximum node count for the heterogeneous power-capture formulas.
inline constexpr std::size_t kMaxPowerNodes = 64;

/// No-CSI throughput:
///   r_i = p_i sum_k (-1)^k (1+D)/(k+1+D) e_k(p_{-i}).
/// At D = inf this is the collision model p_i prod_{j!=i} (1 - p_j).
ThroughputVector power_nocsi_throughput(std::span<const double> p, double delta);

/// Perfect-CSI throughput:
///   r_i = int_{T_i}^inf prod_{j!=i} max(1 - p_j, 1 - e^{-x/(1+D)}) e^{-x} dx
/// by piecewise quadrature with absolute tolerance `abs_tol`.
ThroughputVector power_csi_throughput(std::span<const double> p, double delta, double abs_tol = 1e-10);

double power_nocsi_homog(double p, std::size_t n, double delta);

/// rho' = p(1-p)^{n-1}(1-p^D) + sum_k (-1)^k C(n-1,k) (1+D)/(k+1+D) p^{k+1+D}.
double power_csi_homog(double p, std::size_t n, double delta);

/// Closed form of int_0^inf (1 - F(x/(1+D)))^n f(x) dx = (1+D)/(1+D+n).
double power_integral_identity(std::size_t n, double delta);

/// The same integral by quadrature.
double power_integral_quadrature(std::size_t n, double delta, double abs_tol = 1e-12);

// -- Regime dispatch --------------------------------------------------------

ThroughputVector throughput(const Regime& regime, std::span<const double> p);

/// Throughput of node i only; cheaper than the full vector for quadrature regimes.
double node_throughput(const Regime& regime, std::size_t i, std::span<const double> p);

/// r(p, ..., p) for n identical nodes. Throws std::invalid_argument for
/// perfect-CSI SINR with b < 1, where no closed form is available.
double homogeneous_throughput(const Regime& regime, double p, std::size_t n);

}  // namespace aloha
