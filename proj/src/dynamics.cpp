#include "aloha/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <stdexcept>

#include <fmt/core.h>

#include "aloha/simulator.hpp"

namespace aloha {

namespace {

double residual_of(const Regime& regime, std::span<const double> p, std::span<const double> demands) {
    const auto r = throughput(regime, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i] - demands[i]));
    return worst;
}

constexpr std::size_t kBatches = 20;

double target_of(double p, double rho_hat, double demand) {
    return rho_hat > 0.0 ? std::min(1.0, demand / rho_hat * p) : 1.0;
}

std::vector<double> thresholds_of(std::span<const double> p) {
    std::vector<double> t(p.size());
    std::transform(p.begin(), p.end(), t.begin(), [](double q) { return threshold_for(q); });
    return t;
}

// Source of rho_hat(m) for the current probabilities.
class ThroughputSource {
public:
    ThroughputSource(const Regime& regime, std::span<const double> demands, const Estimator& estimator)
        : regime_(regime) {
        if (const auto* emp = std::get_if<EmpiricalEstimator>(&estimator)) {
            if (emp->update_every_slots == 0) throw std::invalid_argument("update_every_slots must be positive");
            empirical_ = *emp;
            std::vector<NodeSpec> nodes;
            for (double d : demands)
                nodes.push_back(regime.csi == CsiKind::Perfect ? NodeSpec::perfect(d, d) : NodeSpec::no_csi(d, d));
            sim_.emplace(regime.model, std::move(nodes), emp->seed);
            history_.push_back(Snapshot{0, std::vector<std::uint64_t>(demands.size(), 0)});
        }
    }

    bool empirical() const { return sim_.has_value(); }
    std::uint64_t slots() const { return sim_ ? sim_->trace().slots : 0; }

    std::vector<double> estimate(std::span<const double> p) {
        if (!sim_) return throughput(regime_, p);
        for (std::size_t i = 0; i < p.size(); ++i) sim_->set_tx_prob(i, p[i]);
        sim_->advance(empirical_.update_every_slots);
        const auto& tr = sim_->trace();
        history_.push_back(Snapshot{tr.slots, tr.successes});

        if (empirical_.window_slots > 0) {
            while (history_.size() > 2 && tr.slots - history_[1].slots >= empirical_.window_slots)
                history_.pop_front();
        } else if (history_.size() > 2) {
            history_.erase(history_.begin() + 1, history_.end() - 1);
        }
        const Snapshot* base = &history_.front();
        const double span = static_cast<double>(tr.slots - base->slots);
        std::vector<double> rho(p.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            rho[i] = static_cast<double>(tr.successes[i] - base->successes[i]) / span;
        return rho;
    }

private:
    struct Snapshot {
        std::uint64_t slots;
        std::vector<std::uint64_t> successes;
    };

    const Regime& regime_;
    EmpiricalEstimator empirical_;
    std::optional<SlotSimulator> sim_;
    std::deque<Snapshot> history_;
};

}  // namespace

double EpsSchedule::at(std::size_t m) const {
    if (kind == Kind::Constant) return value;
    return 1.0 / (1.0 + static_cast<double>(m));
}

std::vector<double> update_step(std::span<const double> p, std::span<const double> rho_hat,
                                std::span<const double> demands, double eps, std::vector<bool>* saturated) {
    if (p.size() != rho_hat.size() || p.size() != demands.size())
        throw std::invalid_argument("update_step: vectors differ in length");
    if (!(eps > 0.0)) throw std::invalid_argument(fmt::format("step size must be positive, got {}", eps));
    if (saturated) saturated->assign(p.size(), false);
    std::vector<double> next(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(rho_hat[i] > 0.0) && saturated) (*saturated)[i] = true;
        next[i] = p[i] + eps * (target_of(p[i], rho_hat[i], demands[i]) - p[i]);
    }
    return next;
}

DynamicsTrace run_dynamics(std::span<const double> demands, const Regime& regime, const DynamicsOptions& options) {
    const std::size_t n = demands.size();
    if (n == 0) throw std::invalid_argument("at least one demand is required");
    for (double d : demands)
        if (!(d > 0.0 && d <= 1.0)) throw std::invalid_argument("dynamics needs demands in (0,1]");
    if (options.record_every == 0) throw std::invalid_argument("record_every must be positive");

    ThroughputSource source(regime, demands, options.estimator);
    DynamicsTrace trace;
    trace.perfect_csi = regime.csi == CsiKind::Perfect;

    std::vector<double> p(demands.begin(), demands.end());
    std::vector<std::size_t> own_updates(n, 0);
    trace.harmonic = options.eps.kind == EpsSchedule::Kind::Harmonic;
    trace.batch_target_sum.assign(n, std::vector<double>(kBatches, 0.0));
    trace.batch_count.assign(n, std::vector<std::size_t>(kBatches, 0));
    const std::size_t per_node = options.asynchronous ? (options.max_iter + n - 1) / n : options.max_iter;
    const std::size_t batch_len = std::max<std::size_t>(1, (per_node + kBatches - 1) / kBatches);
    const auto record_target = [&](std::size_t i, std::size_t update, double target) {
        const std::size_t k = std::min(kBatches - 1, update / batch_len);
        trace.batch_target_sum[i][k] += target;
        ++trace.batch_count[i][k];
    };
    std::vector<bool> saturated;
    for (std::size_t m = 0; m < options.max_iter; ++m) {
        const auto rho_hat = source.estimate(p);
        const double eps_now = options.eps.at(m);

        if (!source.empirical()) {
            double gap = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                gap = std::max(gap, std::abs(target_of(p[i], rho_hat[i], demands[i]) - p[i]));
            }
            if (gap < options.tolerance) {
                trace.converged = true;
                trace.steps.push_back({m, p, thresholds_of(p), rho_hat, eps_now, std::vector<bool>(n, false)});
                trace.iterations = m;
                break;
            }
        }

        std::vector<double> next;
        if (!options.asynchronous) {
            next = update_step(p, rho_hat, demands, eps_now, &saturated);
            for (std::size_t i = 0; i < n; ++i) record_target(i, m, target_of(p[i], rho_hat[i], demands[i]));
        } else {
            const std::size_t i = m % n;
            record_target(i, own_updates[i], target_of(p[i], rho_hat[i], demands[i]));
            const double eps_i = options.eps.at(own_updates[i]++);
            next = p;
            const auto moved = update_step(std::span(p).subspan(i, 1), std::span(rho_hat).subspan(i, 1),
                                           demands.subspan(i, 1), eps_i, &saturated);
            next[i] = moved[0];
            std::vector<bool> flags(n, false);
            flags[i] = saturated[0];
            saturated = flags;
        }
        if (m % options.record_every == 0) trace.steps.push_back({m, p, thresholds_of(p), rho_hat, eps_now, saturated});
        p = std::move(next);
        trace.iterations = m + 1;
    }

    if (source.empirical()) trace.converged = true;  // runs to the end of the trace by design
    trace.slots_elapsed = source.slots();
    trace.final_p = p;
    trace.final_residual = residual_of(regime, p, demands);
    if (trace.steps.empty() || trace.steps.back().p != p) {
        const auto r = source.empirical() ? trace.steps.empty() ? std::vector<double>(n, 0.0)
                                                                : trace.steps.back().rho_hat
                                          : throughput(regime, p);
        trace.steps.push_back({trace.iterations, p, thresholds_of(p), r, options.eps.at(trace.iterations),
                               std::vector<bool>(n, false)});
    }
    return trace;
}

std::vector<double> dynamics_standard_error(const DynamicsTrace& trace) {
    if (!trace.harmonic) throw std::invalid_argument("standard error needs the harmonic step schedule");
    std::vector<double> se;
    for (std::size_t i = 0; i < trace.batch_target_sum.size(); ++i) {
        std::vector<double> means;
        for (std::size_t k = 0; k < trace.batch_count[i].size(); ++k)
            if (trace.batch_count[i][k] > 0)
                means.push_back(trace.batch_target_sum[i][k] / static_cast<double>(trace.batch_count[i][k]));
        if (means.size() < 2) throw std::invalid_argument("too few updates for a standard error");
        double mean = 0.0;
        for (double m : means) mean += m;
        mean /= static_cast<double>(means.size());
        double ss = 0.0;
        for (double m : means) ss += (m - mean) * (m - mean);
        const double b = static_cast<double>(means.size());
        se.push_back(std::sqrt(ss / (b - 1.0) / b));
    }
    return se;
}

}  // namespace aloha
