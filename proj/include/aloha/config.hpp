#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aloha/analytic.hpp"
#include "aloha/dynamics.hpp"
#include "aloha/models.hpp"

namespace aloha {

/// Malformed or out-of-range scenario file. The message starts with the
/// source name and a JSON pointer to the offending value.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimSection {
    std::uint64_t slots = 1'000'000;
    std::uint64_t seed = 1;
    std::size_t replications = 1;

    bool operator==(const SimSection&) const = default;
};

struct DynamicsSection {
    EpsSchedule eps;
    std::size_t max_iter = 1'000'000;
    std::uint64_t update_every_slots = 100;
    std::uint64_t window_slots = 100'000;
    bool analytic = true;  // estimator: "analytic" or "empirical"
    bool asynchronous = false;
    std::size_t record_every = 1;

    bool operator==(const DynamicsSection&) const = default;
};

struct ParadoxSection {
    std::vector<std::size_t> n;  // empty: use the node count

    bool operator==(const ParadoxSection&) const = default;
};

struct ScenarioConfig {
    CaptureModel model = SinrCapture{};
    std::vector<NodeSpec> nodes;
    SimSection sim;
    DynamicsSection dynamics;
    ParadoxSection paradox;

    Scenario scenario() const;
    std::vector<double> demands() const;
    std::vector<double> tx_probs() const;
    /// None or Perfect when every node agrees; throws ConfigError otherwise.
    Regime regime() const;

    bool operator==(const ScenarioConfig&) const = default;
};

ScenarioConfig parse_config(std::string_view text, const std::string& source = "<config>");
ScenarioConfig load_config(const std::filesystem::path& path);

/// Canonical JSON text; parse_config(dump_config(c)) == c.
std::string dump_config(const ScenarioConfig& config);

}  // namespace aloha
