#pragma once

#include <cstdint>
#include <vector>

#include "aloha/models.hpp"

namespace aloha {

/// Per-node counts accumulated over a run of slots.
struct SimTrace {
    std::uint64_t slots = 0;
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    std::vector<std::uint64_t> transmits;
    std::vector<std::uint64_t> successes;

    double rho_hat(std::size_t i) const;
    double p_hat(std::size_t i) const;
    std::vector<double> rho_hat() const;
    std::vector<double> p_hat() const;
};

/// Slot-by-slot engine. Channel gains for every node come from one stream and
/// are drawn every slot whatever the strategies, so runs that differ only in
/// strategy see the same fading. Each node's transmit coin has its own stream.
class SlotSimulator {
public:
    SlotSimulator(CaptureModel model, std::vector<NodeSpec> nodes, std::uint64_t seed,
                  std::uint64_t replication = 0);

    void advance(std::uint64_t slots);

    /// Changes node i's average transmission probability; perfect-CSI nodes
    /// get the matching threshold -ln p.
    void set_tx_prob(std::size_t i, double p);

    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    const SimTrace& trace() const { return trace_; }

private:
    CaptureModel model_;
    std::vector<NodeSpec> nodes_;
    SimTrace trace_;
    Rng gain_rng_;
    std::vector<Rng> coin_rngs_;
    std::vector<double> gains_;
    std::vector<std::uint8_t> transmitted_;
    std::vector<std::uint8_t> success_;
};

SimTrace run(const Scenario& scenario, std::uint64_t replication = 0);

struct ThroughputEstimate {
    std::vector<double> mean;
    std::vector<double> std_error;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    std::vector<SimTrace> traces;  // one per replication
};

/// Mean empirical throughput over independent replications (streams derived
/// from the scenario seed and the replication index). With one replication the
/// standard error is the binomial sqrt(rho(1-rho)/slots).
ThroughputEstimate estimate_throughput(const Scenario& scenario, std::size_t replications);

}  // namespace aloha
