#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aloha/models.hpp"

namespace aloha {

/// `count` evenly spaced points from start to stop inclusive.
std::vector<double> uniform_grid(double start = 0.0, double stop = 1.0, std::size_t count = 1001);

/// Settings for the simulated perfect-CSI curve used where no closed form
/// exists (SINR capture with b < 1).
struct SimFallback {
    std::uint64_t slots_per_point = 200'000;
    std::uint64_t seed = 1;
};

/// Homogeneous no-CSI vs perfect-CSI throughput at equal average
/// transmission probability.
struct ParadoxReport {
    CaptureModel model;
    std::size_t n = 0;
    std::vector<double> grid;
    std::vector<double> rho_nocsi;
    std::vector<double> rho_csi;
    std::vector<double> gap;        // rho_nocsi - rho_csi
    std::vector<double> gap_error;  // standard error of gap; zero for closed forms
    bool paradox_present = false;   // gap >= -tolerance everywhere
    bool simulated = false;         // perfect-CSI curve came from the simulator
    double tolerance = 1e-12;
};

ParadoxReport compare_homogeneous(const CaptureModel& model, std::size_t n, std::span<const double> grid,
                                  const SimFallback& fallback = {});

/// p (1 - b p/(b+1))^{n-1} + (1-p)^n >= ((1-p) + p^{b+1}/(b+1))^{n-1} - 1e-12
/// at every grid point.
bool verify_theorem2(double b, std::size_t n, std::span<const double> grid);

/// Smallest LHS - RHS of the inequality above over the grid.
double theorem2_margin(double b, std::size_t n, std::span<const double> grid);

struct NodeGap {
    double p = 0.0;
    double rho_nocsi = 0.0;
    double rho_csi = 0.0;
    double gap = 0.0;
};

struct HeterogeneousComparison {
    std::vector<NodeGap> nodes;
    bool analytic_valid = true;  // perfect-CSI closed form applies
    bool simulated = false;      // perfect-CSI column came from the simulator
};

/// Per-node SINR throughput without and with perfect CSI at the same p.
HeterogeneousComparison heterogeneous_case_compare(std::span<const double> p, double b, double noise_ratio,
                                                   const SimFallback& fallback = {});

/// power_csi_homog <= power_nocsi_homog + 1e-12 at every grid point.
bool verify_theorem4(std::size_t n, double delta, std::span<const double> grid);

/// max over the grid of |rho' - ((1 - p^D) p (1-p)^{n-1} + p^D rho)|.
double theorem4_identity_error(std::size_t n, double delta, std::span<const double> grid);

}  // namespace aloha
