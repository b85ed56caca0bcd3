#include "aloha/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/core.h>

#include "aloha/quadrature.hpp"

namespace aloha {

namespace {

constexpr double kResidualContract = 1e-8;
constexpr double kGoldenRatio = 0.6180339887498949;

void check_demands(std::span<const double> demands) {
    if (demands.empty()) throw std::invalid_argument("at least one demand is required");
    for (double d : demands)
        if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument(fmt::format("demand {} outside [0,1]", d));
}

double max_residual(const Regime& regime, std::span<const double> p, std::span<const double> demands) {
    const auto r = throughput(regime, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i] - demands[i]));
    return worst;
}

std::vector<double> without(std::span<const double> p, std::size_t i) {
    std::vector<double> out;
    out.reserve(p.size());
    for (std::size_t j = 0; j < p.size(); ++j)
        if (j != i) out.push_back(p[j]);
    return out;
}

// Each p_i must be the smallest probability meeting node i's demand.
bool is_best_response_profile(std::span<const double> p, std::span<const double> demands, const Regime& regime,
                              double tol) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto others = without(p, i);
        const auto br = best_response(i, others, demands[i], regime);
        if (!br || std::abs(*br - p[i]) > tol) return false;
    }
    return true;
}

double bisect_increasing(const auto& f, double target, double lo, double hi) {
    // f(lo) < target <= f(hi); returns the smallest x with f(x) >= target.
    while (hi - lo > 1e-15) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (f(mid) >= target ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace

std::string_view to_string(Classification c) {
    switch (c) {
        case Classification::Preferred: return "preferred";
        case Classification::Second: return "second";
        case Classification::Unique: return "unique";
    }
    return "?";
}

std::string_view to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::NonConvergence: return "nonconvergence";
    }
    return "?";
}

const std::vector<double>* EquilibriumResult::preferred() const {
    for (std::size_t k = 0; k < points.size(); ++k)
        if (classification[k] != Classification::Second) return &points[k];
    return nullptr;
}

bool uniqueness_known(const Regime& regime, std::size_t n) {
    const auto* pc = std::get_if<PowerCapture>(&regime.model);
    if (!pc) return n == 1;
    if (n <= 1) return true;
    if (regime.csi == CsiKind::None) return pc->delta == 0.0;
    return pc->delta <= 1.0 / static_cast<double>(n - 1);
}

std::optional<double> best_response(std::size_t i, std::span<const double> p_other, double demand,
                                    const Regime& regime) {
    if (i > p_other.size()) throw std::out_of_range("best_response: node index out of range");
    if (!(demand >= 0.0 && demand <= 1.0)) throw std::invalid_argument("demand outside [0,1]");
    if (demand == 0.0) return 0.0;

    std::vector<double> profile(p_other.begin(), p_other.end());
    profile.insert(profile.begin() + static_cast<std::ptrdiff_t>(i), 0.0);
    auto own = [&](double x) {
        profile[i] = x;
        return node_throughput(regime, i, profile);
    };
    if (own(1.0) < demand) return std::nullopt;
    if (own(0.0) >= demand) return 0.0;
    return bisect_increasing(own, demand, 0.0, 1.0);
}

EquilibriumResult solve_equilibrium(std::span<const double> demands, const Regime& regime,
                                    const SolverOptions& options) {
    check_demands(demands);
    const std::size_t n = demands.size();
    EquilibriumResult result;

    const bool minimal_start = !options.start.has_value();
    std::vector<double> p = minimal_start ? std::vector<double>(demands.begin(), demands.end()) : *options.start;
    if (p.size() != n) throw std::invalid_argument("start vector length differs from demand count");

    double best = std::numeric_limits<double>::infinity();
    std::size_t since_improvement = 0;
    std::vector<double> next(n);
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto others = without(p, i);
            const auto br = best_response(i, others, demands[i], regime);
            if (!br) {
                // From the minimal start the iterates only grow, so an unmet
                // demand here cannot be met at any equilibrium.
                if (minimal_start) {
                    result.status = SolveStatus::Infeasible;
                    result.infeasible_node = i;
                    result.iterations = it;
                    result.last_residual = max_residual(regime, p, demands);
                    return result;
                }
                next[i] = 1.0;
            } else {
                next[i] = *br;
            }
            if (next[i] < p[i] - 1e-13) result.monotone = false;
        }
        p.swap(next);
        result.iterations = it;

        const double residual = max_residual(regime, p, demands);
        result.last_residual = residual;
        if (residual <= options.tolerance) break;
        if (residual < best * (1.0 - 1e-12)) {
            best = residual;
            since_improvement = 0;
        } else if (++since_improvement >= options.stall_window) {
            break;
        }
    }

    if (result.last_residual > kResidualContract) {
        result.status = SolveStatus::NonConvergence;
        return result;
    }
    result.status = SolveStatus::Converged;
    result.feasible = true;
    result.points.push_back(p);
    result.residuals.push_back(result.last_residual);
    result.classification.push_back(uniqueness_known(regime, n) ? Classification::Unique
                                                                 : Classification::Preferred);
    return result;
}

std::optional<std::vector<double>> find_second_equilibrium(std::span<const double> demands, const Regime& regime,
                                                           std::span<const double> preferred) {
    check_demands(demands);
    const std::size_t n = demands.size();
    if (preferred.size() != n) throw std::invalid_argument("preferred point has the wrong length");

    auto clamp01 = [](double x) { return std::clamp(x, 1e-9, 1.0); };
    std::vector<std::vector<double>> starts;
    {
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = clamp01(1.0 - preferred[i]);
        starts.push_back(s);
        if (const auto* sinr = std::get_if<SinrCapture>(&regime.model)) {
            // Homogeneous two-node roots sum to (b+1)/b; reflect about half of it.
            const double span = (sinr->b + 1.0) / sinr->b;
            for (std::size_t i = 0; i < n; ++i) s[i] = clamp01(span - preferred[i]);
            starts.push_back(s);
        }
        for (std::size_t i = 0; i < n; ++i) s[i] = clamp01(0.5 * (1.0 + preferred[i]));
        starts.push_back(s);
    }

    auto residual_vector = [&](const std::vector<double>& p) {
        const auto r = throughput(regime, p);
        Eigen::VectorXd f(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) f[static_cast<Eigen::Index>(i)] = r[i] - demands[i];
        return f;
    };

    const double pref_sum = std::accumulate(preferred.begin(), preferred.end(), 0.0);
    for (auto p : starts) {
        Eigen::VectorXd f = residual_vector(p);
        for (int it = 0; it < 200 && f.lpNorm<Eigen::Infinity>() > 1e-13; ++it) {
            Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            for (std::size_t j = 0; j < n; ++j) {
                const double h = 1e-7;
                auto up = p, down = p;
                up[j] = std::min(1.0, p[j] + h);
                down[j] = std::max(0.0, p[j] - h);
                jac.col(static_cast<Eigen::Index>(j)) = (residual_vector(up) - residual_vector(down)) / (up[j] - down[j]);
            }
            const Eigen::VectorXd step = jac.fullPivLu().solve(-f);
            if (!step.allFinite()) break;
            double alpha = 1.0;
            bool moved = false;
            while (alpha > 1e-8) {
                auto trial = p;
                for (std::size_t i = 0; i < n; ++i)
                    trial[i] = std::clamp(p[i] + alpha * step[static_cast<Eigen::Index>(i)], 0.0, 1.0);
                const Eigen::VectorXd ft = residual_vector(trial);
                if (ft.lpNorm<Eigen::Infinity>() < (1.0 - 1e-4 * alpha) * f.lpNorm<Eigen::Infinity>()) {
                    p = trial;
                    f = ft;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved) break;
        }
        if (f.lpNorm<Eigen::Infinity>() > kResidualContract) continue;
        double gap = 0.0;
        for (std::size_t i = 0; i < n; ++i) gap = std::max(gap, std::abs(p[i] - preferred[i]));
        const double sum = std::accumulate(p.begin(), p.end(), 0.0);
        if (gap < 1e-6 || sum <= pref_sum) continue;
        if (!is_best_response_profile(p, demands, regime, 1e-7)) continue;
        return p;
    }
    return std::nullopt;
}

HomogeneousPeak homogeneous_peak(std::size_t n, const Regime& regime) {
    auto f = [&](double p) { return homogeneous_throughput(regime, p, n); };
    double a = 0.0, b = 1.0;
    double x1 = b - kGoldenRatio * (b - a), x2 = a + kGoldenRatio * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > 1e-12) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGoldenRatio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGoldenRatio * (b - a);
            f1 = f(x1);
        }
    }
    HomogeneousPeak peak{0.5 * (a + b), f(0.5 * (a + b))};
    // Monotone curves peak at an endpoint.
    for (double edge : {0.0, 1.0}) {
        const double v = f(edge);
        if (v > peak.value) peak = {edge, v};
    }
    return peak;
}

EquilibriumResult find_homogeneous_equilibria(double demand, std::size_t n, const Regime& regime) {
    if (!(demand >= 0.0 && demand <= 1.0)) throw std::invalid_argument("demand outside [0,1]");
    if (n == 0) throw std::invalid_argument("node count must be positive");
    EquilibriumResult result;
    auto f = [&](double p) { return homogeneous_throughput(regime, p, n); };
    const std::vector<double> demands(n, demand);

    auto accept = [&](double q, Classification c) {
        std::vector<double> point(n, q);
        result.points.push_back(point);
        result.residuals.push_back(max_residual(regime, point, demands));
        result.classification.push_back(c);
    };

    if (demand == 0.0) {
        accept(0.0, Classification::Unique);
        result.status = SolveStatus::Converged;
        result.feasible = true;
        return result;
    }

    const auto peak = homogeneous_peak(n, regime);
    if (demand > peak.value) {
        result.status = SolveStatus::Infeasible;
        result.last_residual = demand - peak.value;
        return result;
    }

    std::vector<double> roots;
    if (demand >= peak.value - 1e-12) {
        roots.push_back(peak.p);  // tangent
    } else {
        roots.push_back(bisect_increasing(f, demand, 0.0, peak.p));
        if (f(1.0) < demand) {
            // Descending branch: the last p with f(p) >= demand.
            double lo = peak.p, hi = 1.0;
            while (hi - lo > 1e-15) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                (f(mid) >= demand ? lo : hi) = mid;
            }
            roots.push_back(lo);
        }
    }

    // A root is an equilibrium only if no node could meet the demand with a
    // smaller probability while the others stay put.
    std::vector<double> genuine;
    for (double q : roots) {
        std::vector<double> others(n - 1, q);
        const auto br = best_response(0, others, demand, regime);
        if (br && std::abs(*br - q) <= 1e-9) genuine.push_back(q);
    }

    if (genuine.empty()) {
        result.status = SolveStatus::Infeasible;
        return result;
    }
    if (genuine.size() == 1) {
        accept(genuine[0], Classification::Unique);
    } else {
        accept(genuine[0], Classification::Preferred);
        accept(genuine[1], Classification::Second);
    }
    result.status = SolveStatus::Converged;
    result.feasible = true;
    return result;
}

AuxiliaryG::AuxiliaryG(std::vector<double> demands) : demands_(std::move(demands)) {
    check_demands(demands_);
}

double AuxiliaryG::value(std::span<const double> p) const {
    if (p.size() != demands_.size()) throw std::invalid_argument("AuxiliaryG: dimension mismatch");
    double barrier = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0 && p[i] <= 1.0)) throw std::invalid_argument("AuxiliaryG needs p in (0,1]");
        if (demands_[i] > 0.0) barrier += demands_[i] * std::log(p[i]);
        total += p[i];
    }
    // (prod_j (1 - p_j x) - 1) / x, continuous at 0 with value -sum p_j.
    auto integrand = [&](double x) {
        if (x == 0.0) return -total;
        double log_phi = 0.0;
        for (double q : p) log_phi += std::log1p(-q * x);
        return std::expm1(log_phi) / x;
    };
    return barrier + integrate(integrand, 0.0, 1.0, 1e-12).value;
}

double AuxiliaryG::value_t(std::span<const double> t) const {
    if (cached_t_.size() == t.size() && std::equal(t.begin(), t.end(), cached_t_.begin())) return cached_value_;
    std::vector<double> p(t.size());
    std::transform(t.begin(), t.end(), p.begin(), [](double x) { return std::exp(x); });
    cached_value_ = value(p);
    cached_t_.assign(t.begin(), t.end());
    return cached_value_;
}

std::vector<double> AuxiliaryG::gradient_t(std::span<const double> t) const {
    std::vector<double> p(t.size());
    std::transform(t.begin(), t.end(), p.begin(), [](double x) { return std::exp(x); });
    const auto r = power_nocsi_throughput(p, 0.0);
    std::vector<double> g(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) g[i] = demands_[i] - r[i];
    return g;
}

std::vector<double> AuxiliaryG::hessian_t(std::span<const double> t, double step) const {
    const std::size_t n = t.size();
    std::vector<double> h(n * n);
    std::vector<double> x(t.begin(), t.end());
    auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
        x[i] += di;
        x[j] += dj;
        const double v = value_t(x);
        x[i] -= di;
        x[j] -= dj;
        return v;
    };
    const double g0 = value_t(x);
    for (std::size_t i = 0; i < n; ++i) {
        h[i * n + i] = (at(i, step, i, 0.0) - 2.0 * g0 + at(i, -step, i, 0.0)) / (step * step);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = (at(i, step, j, step) - at(i, step, j, -step) - at(i, -step, j, step) +
                              at(i, -step, j, -step)) /
                             (4.0 * step * step);
            h[i * n + j] = h[j * n + i] = v;
        }
    }
    return h;
}

double auxiliary_g_value(std::span<const double> p, std::span<const double> demands) {
    return AuxiliaryG(std::vector<double>(demands.begin(), demands.end())).value(p);
}

EquilibriumResult solve_delta0_concave(std::span<const double> demands, const ConcaveOptions& options) {
    check_demands(demands);
    const std::size_t n = demands.size();
    const Regime regime{PowerCapture{0.0}, CsiKind::None};
    EquilibriumResult result;

    long double sum = 0.0L;
    for (double d : demands) sum += d;
    if (sum > 1.0L + 1e-14L) {
        result.status = SolveStatus::Infeasible;
        result.last_residual = static_cast<double>(sum - 1.0L);
        return result;
    }

    // Zero demand forces p_i = 0; solve over the remaining nodes.
    std::vector<std::size_t> active;
    std::vector<double> active_demands;
    for (std::size_t i = 0; i < n; ++i)
        if (demands[i] > 0.0) {
            active.push_back(i);
            active_demands.push_back(demands[i]);
        }

    std::vector<double> p(n, 0.0);
    if (!active.empty()) {
        const std::size_t m = active.size();
        const AuxiliaryG g(active_demands);
        std::vector<double> t(m);
        for (std::size_t k = 0; k < m; ++k) t[k] = std::log(std::max(active_demands[k], options.start_floor));

        std::vector<double> trial(m), dir(m);
        for (std::size_t it = 1; it <= options.max_iterations; ++it) {
            result.iterations = it;
            const auto grad = g.gradient_t(t);
            double worst = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                const double r = active_demands[k] - grad[k];
                // Diagonal scaling by 1/r_i; the t_i <= 0 bound clips ascent past p_i = 1.
                dir[k] = grad[k] / std::max(r, 1e-300);
                if (t[k] >= 0.0 && dir[k] > 0.0) dir[k] = 0.0;
                else worst = std::max(worst, std::abs(grad[k]));
            }
            if (worst <= options.tolerance) break;

            const double g0 = g.value_t(t);
            double alpha = 1.0;
            bool moved = false;
            while (alpha > 1e-12) {
                double ascent = 0.0;
                for (std::size_t k = 0; k < m; ++k) {
                    trial[k] = std::min(0.0, t[k] + alpha * dir[k]);
                    ascent += grad[k] * (trial[k] - t[k]);
                }
                // Slack covers quadrature rounding once G is flat to ~1e-15.
                if (g.value_t(trial) >= g0 + 1e-4 * ascent - 1e-14) {
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved) break;
            t = trial;
        }
        for (std::size_t k = 0; k < m; ++k) p[active[k]] = std::exp(t[k]);
    }

    result.last_residual = max_residual(regime, p, demands);
    if (result.last_residual > kResidualContract) {
        result.status = SolveStatus::NonConvergence;
        return result;
    }
    result.status = SolveStatus::Converged;
    result.feasible = true;
    result.points.push_back(p);
    result.residuals.push_back(result.last_residual);
    result.classification.push_back(Classification::Unique);
    return result;
}

double hessian_concavity_check(std::span<const double> p, std::span<const double> demands) {
    if (p.size() != demands.size()) throw std::invalid_argument("dimension mismatch");
    for (double q : p)
        if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("Hessian check needs an interior point");
    const std::size_t n = p.size();
    std::vector<double> t(n);
    std::transform(p.begin(), p.end(), t.begin(), [](double x) { return std::log(x); });
    const auto h = AuxiliaryG(std::vector<double>(demands.begin(), demands.end())).hessian_t(t);
    Eigen::MatrixXd mat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = h[i * n + j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mat, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

bool theorem1_bound_check(const EquilibriumResult& result, double b) {
    const auto* p = result.preferred();
    if (!p) return false;
    const double sum = std::accumulate(p->begin(), p->end(), 0.0);
    return sum <= (b + 1.0) / b + 1e-9;
}

}  // namespace aloha
