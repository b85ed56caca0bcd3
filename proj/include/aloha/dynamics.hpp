#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "aloha/analytic.hpp"

namespace aloha {

/// Step size eps(m): 1/(1+m) by default, or a constant.
struct EpsSchedule {
    enum class Kind { Harmonic, Constant };
    Kind kind = Kind::Harmonic;
    double value = 1.0;  // used when kind == Constant

    static EpsSchedule harmonic() { return {}; }
    static EpsSchedule constant(double eps) { return {Kind::Constant, eps}; }
    double at(std::size_t m) const;

    bool operator==(const EpsSchedule&) const = default;
};

/// Throughput estimates from the slot simulator over the most recent
/// window_slots slots (rounded up to whole update periods). window_slots = 0
/// counts everything since slot 0, which keeps the start-up transient in the
/// estimate and biases the end point.
struct EmpiricalEstimator {
    std::uint64_t update_every_slots = 100;
    std::uint64_t window_slots = 100'000;
    std::uint64_t seed = 1;
};

/// Exact throughput from the analytic model; deterministic.
struct AnalyticEstimator {};

using Estimator = std::variant<EmpiricalEstimator, AnalyticEstimator>;

struct DynamicsOptions {
    EpsSchedule eps;
    Estimator estimator = AnalyticEstimator{};
    std::size_t max_iter = 1'000'000;
    /// Analytic mode stops once max_i |target_i - p_i| falls below this,
    /// where target_i = min(1, rho_i p_i / rho_hat_i).
    double tolerance = 1e-6;
    /// Round-robin: node i updates on iterations m with m % n == i, using its
    /// own update count in the step-size schedule.
    bool asynchronous = false;
    /// Keep every k-th iteration in the trace (the final one is always kept).
    std::size_t record_every = 1;
};

struct DynamicsStep {
    std::size_t iteration = 0;
    std::vector<double> p;
    std::vector<double> threshold;  // -ln p; meaningful for perfect CSI
    std::vector<double> rho_hat;
    double eps = 0.0;
    std::vector<bool> saturated;  // rho_hat was zero, target forced to 1
};

struct DynamicsTrace {
    std::vector<DynamicsStep> steps;
    bool converged = false;
    bool perfect_csi = false;
    std::size_t iterations = 0;
    std::uint64_t slots_elapsed = 0;  // empirical mode
    std::vector<double> final_p;
    /// max_i |r_i(final_p) - rho_i| under the analytic model.
    double final_residual = 0.0;
    /// Per node: sums and counts of update targets in consecutive batches of
    /// that node's updates.
    std::vector<std::vector<double>> batch_target_sum;
    std::vector<std::vector<std::size_t>> batch_count;
    bool harmonic = true;
};

/// p_i + eps [min(1, rho_i p_i / rho_hat_i) - p_i]; a zero estimate saturates
/// the target at 1 and is reported through `saturated`.
std::vector<double> update_step(std::span<const double> p, std::span<const double> rho_hat,
                                std::span<const double> demands, double eps,
                                std::vector<bool>* saturated = nullptr);

DynamicsTrace run_dynamics(std::span<const double> demands, const Regime& regime,
                           const DynamicsOptions& options = {});

/// Standard error of final_p for a run with harmonic steps. With
/// eps(m) = 1/(1+m) each p_i is exactly the mean of its own update targets,
/// so the error follows from batch means of the target sequence.
std::vector<double> dynamics_standard_error(const DynamicsTrace& trace);

}  // namespace aloha
