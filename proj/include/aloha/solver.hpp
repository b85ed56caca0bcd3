#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "aloha/analytic.hpp"

namespace aloha {

enum class Classification { Preferred, Second, Unique };
enum class SolveStatus { Converged, Infeasible, NonConvergence };

std::string_view to_string(Classification c);
std::string_view to_string(SolveStatus s);

/// Constrained Nash equilibria of the demand-meeting game: every point p has
/// r_i(p) = rho_i with each p_i the smallest probability meeting the demand.
struct EquilibriumResult {
    std::vector<std::vector<double>> points;
    std::vector<double> residuals;  // max_i |r_i(p) - rho_i| per point
    std::vector<Classification> classification;
    bool feasible = false;
    SolveStatus status = SolveStatus::NonConvergence;
    std::size_t iterations = 0;
    /// Best-response iterates never decreased in any coordinate.
    bool monotone = true;
    /// Node whose demand could not be met, when status is Infeasible.
    std::optional<std::size_t> infeasible_node;
    /// Residual of the last iterate (meaningful on NonConvergence).
    double last_residual = 0.0;

    /// First point classified Preferred or Unique.
    const std::vector<double>* preferred() const;
};

/// Smallest p_i in [0,1] with r_i(p_i, p_other) >= demand, by bisection.
/// `p_other` holds the other nodes in index order (node i removed).
/// Returns nullopt when even p_i = 1 falls short.
std::optional<double> best_response(std::size_t i, std::span<const double> p_other, double demand,
                                    const Regime& regime);

struct SolverOptions {
    std::size_t max_iterations = 100'000;
    /// Iterations without residual improvement before giving up.
    std::size_t stall_window = 100;
    double tolerance = 1e-10;
    /// Start of the iteration; defaults to the demands (the minimal feasible start).
    std::optional<std::vector<double>> start;
};

/// Synchronous best-response iteration. From the default start the iterates
/// increase monotonically to the smallest equilibrium.
EquilibriumResult solve_equilibrium(std::span<const double> demands, const Regime& regime,
                                    const SolverOptions& options = {});

/// Damped Newton search for an equilibrium other than `preferred`, started
/// from reflections of it. Best effort: returns nullopt when nothing distinct
/// converges to a genuine equilibrium.
std::optional<std::vector<double>> find_second_equilibrium(std::span<const double> demands, const Regime& regime,
                                                           std::span<const double> preferred);

/// Equilibria (p, ..., p) for n identical nodes: one root on each side of the
/// peak of the homogeneous throughput curve.
EquilibriumResult find_homogeneous_equilibria(double demand, std::size_t n, const Regime& regime);

/// Peak location and value of the homogeneous throughput curve on [0,1].
struct HomogeneousPeak {
    double p = 0.0;
    double value = 0.0;
};
HomogeneousPeak homogeneous_peak(std::size_t n, const Regime& regime);

/// Potential whose interior critical point is the perfect power capture
/// (delta = 0) equilibrium:
///   G(p) = sum_i rho_i ln p_i + int_0^1 (prod_j (1 - p_j x) - 1) / x dx.
/// Coordinates t_i = ln p_i.
class AuxiliaryG {
public:
    explicit AuxiliaryG(std::vector<double> demands);

    const std::vector<double>& demands() const { return demands_; }

    double value(std::span<const double> p) const;
    double value_t(std::span<const double> t) const;
    /// dG/dt_i = rho_i - r_i(p) with r the delta = 0 throughput.
    std::vector<double> gradient_t(std::span<const double> t) const;
    /// Central-difference Hessian in t, row-major.
    std::vector<double> hessian_t(std::span<const double> t, double step = 1e-4) const;

private:
    std::vector<double> demands_;
    mutable std::vector<double> cached_t_;
    mutable double cached_value_ = 0.0;
};

double auxiliary_g_value(std::span<const double> p, std::span<const double> demands);

struct ConcaveOptions {
    std::size_t max_iterations = 200'000;
    double tolerance = 1e-11;
    double start_floor = 1e-6;
};

/// Unique perfect-power-capture equilibrium by maximizing G. Infeasible
/// exactly when sum(rho) > 1.
EquilibriumResult solve_delta0_concave(std::span<const double> demands, const ConcaveOptions& options = {});

/// Largest eigenvalue of the numerical Hessian of G in t at interior p.
double hessian_concavity_check(std::span<const double> p, std::span<const double> demands);

/// True when the preferred point satisfies sum(p) <= (b+1)/b + 1e-9.
bool theorem1_bound_check(const EquilibriumResult& result, double b);

/// Whether `regime` with n nodes is one where the equilibrium is known to be
/// unique (perfect power capture without CSI, or perfect CSI with
/// delta <= 1/(n-1)).
bool uniqueness_known(const Regime& regime, std::size_t n);

}  // namespace aloha
