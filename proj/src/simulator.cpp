#include "aloha/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <thread>

namespace aloha {

double SimTrace::rho_hat(std::size_t i) const {
    return slots == 0 ? 0.0 : static_cast<double>(successes.at(i)) / static_cast<double>(slots);
}

double SimTrace::p_hat(std::size_t i) const {
    return slots == 0 ? 0.0 : static_cast<double>(transmits.at(i)) / static_cast<double>(slots);
}

std::vector<double> SimTrace::rho_hat() const {
    std::vector<double> out(successes.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rho_hat(i);
    return out;
}

std::vector<double> SimTrace::p_hat() const {
    std::vector<double> out(transmits.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = p_hat(i);
    return out;
}

SlotSimulator::SlotSimulator(CaptureModel model, std::vector<NodeSpec> nodes, std::uint64_t seed,
                             std::uint64_t replication)
    : model_(std::move(model)),
      nodes_(std::move(nodes)),
      gain_rng_(make_stream(seed, replication, 0)),
      gains_(nodes_.size()),
      transmitted_(nodes_.size()),
      success_(nodes_.size()) {
    if (nodes_.empty()) throw std::invalid_argument("simulator needs at least one node");
    validate(model_);
    for (const auto& n : nodes_) validate(n);
    trace_.seed = seed;
    trace_.replication = replication;
    trace_.transmits.assign(nodes_.size(), 0);
    trace_.successes.assign(nodes_.size(), 0);
    coin_rngs_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) coin_rngs_.push_back(make_stream(seed, replication, 1 + i));
}

void SlotSimulator::set_tx_prob(std::size_t i, double p) {
    auto& node = nodes_.at(i);
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("transmission probability outside [0,1]");
    if (std::holds_alternative<QuantizedCsi>(node.csi))
        throw std::invalid_argument("quantized CSI nodes are driven by their level strategy");
    node.tx_prob = p;
    if (std::holds_alternative<PerfectCsi>(node.csi)) node.threshold = threshold_for(p);
}

void SlotSimulator::advance(std::uint64_t slots) {
    const std::size_t n = nodes_.size();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::uint64_t k = 0; k < slots; ++k) {
        sample_gains(gains_, gain_rng_);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& node = nodes_[i];
            bool tx = false;
            switch (node.csi.index()) {
                case 0:  // no CSI
                    tx = unit(coin_rngs_[i]) < node.tx_prob;
                    break;
                case 1:  // perfect CSI
                    tx = gains_[i] > node.threshold;
                    break;
                default: {
                    const auto& q = std::get<QuantizedCsi>(node.csi);
                    tx = unit(coin_rngs_[i]) < q.probs[q.level_of(gains_[i])];
                    break;
                }
            }
            transmitted_[i] = tx;
            trace_.transmits[i] += tx;
        }
        decide_capture(model_, transmitted_, gains_, success_);
        for (std::size_t i = 0; i < n; ++i) trace_.successes[i] += success_[i];
    }
    trace_.slots += slots;
}

SimTrace run(const Scenario& scenario, std::uint64_t replication) {
    validate(scenario);
    SlotSimulator sim(scenario.model, scenario.nodes, scenario.seed, replication);
    sim.advance(scenario.slots);
    return sim.trace();
}

ThroughputEstimate estimate_throughput(const Scenario& scenario, std::size_t replications) {
    if (replications == 0) throw std::invalid_argument("replications must be >= 1");
    validate(scenario);

    std::vector<SimTrace> traces(replications);
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(replications, std::thread::hardware_concurrency()));
    for (std::size_t first = 0; first < replications; first += workers) {
        std::vector<std::future<SimTrace>> batch;
        for (std::size_t r = first; r < std::min(replications, first + workers); ++r)
            batch.push_back(std::async(std::launch::async, [&scenario, r] { return run(scenario, r); }));
        for (std::size_t k = 0; k < batch.size(); ++k) traces[first + k] = batch[k].get();
    }

    const std::size_t n = scenario.size();
    ThroughputEstimate est;
    est.replications = replications;
    est.seed = scenario.seed;
    est.mean.assign(n, 0.0);
    est.std_error.assign(n, 0.0);
    for (const auto& t : traces)
        for (std::size_t i = 0; i < n; ++i) est.mean[i] += t.rho_hat(i);
    for (auto& m : est.mean) m /= static_cast<double>(replications);

    if (replications == 1) {
        const double slots = static_cast<double>(scenario.slots);
        for (std::size_t i = 0; i < n; ++i) est.std_error[i] = std::sqrt(est.mean[i] * (1.0 - est.mean[i]) / slots);
        est.traces = std::move(traces);
        return est;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double ss = 0.0;
        for (const auto& t : traces) ss += (t.rho_hat(i) - est.mean[i]) * (t.rho_hat(i) - est.mean[i]);
        est.std_error[i] = std::sqrt(ss / static_cast<double>(replications - 1) / static_cast<double>(replications));
    }
    est.traces = std::move(traces);
    return est;
}

}  // namespace aloha
