#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace aloha {

/// Reception succeeds when SINR exceeds the capture ratio `b`.
/// `noise_ratio` is N0/PT, the noise power relative to the transmit power.
struct SinrCapture {
    double b = 1.0;
    double noise_ratio = 0.0;

    bool operator==(const SinrCapture&) const = default;
};

/// Reception succeeds when the strongest signal beats every other by the
/// factor (1 + delta). An infinite delta is the collision model.
struct PowerCapture {
    double delta = 0.0;

    static PowerCapture collision() { return {std::numeric_limits<double>::infinity()}; }
    bool is_collision() const { return delta == std::numeric_limits<double>::infinity(); }

    bool operator==(const PowerCapture&) const = default;
};

using CaptureModel = std::variant<SinrCapture, PowerCapture>;

/// Throws std::invalid_argument when a parameter is out of range.
void validate(const CaptureModel& model);

struct NoCsi {
    bool operator==(const NoCsi&) const = default;
};

/// The node sees its exact channel gain and transmits above a threshold.
struct PerfectCsi {
    bool operator==(const PerfectCsi&) const = default;
};

/// The gain is quantized into cutpoints.size() + 1 levels; level m covers
/// [cutpoints[m-1], cutpoints[m]). `probs[m]` is the transmit probability at
/// level m.
struct QuantizedCsi {
    std::vector<double> cutpoints;
    std::vector<double> probs;

    std::size_t levels() const { return cutpoints.size() + 1; }
    std::size_t level_of(double gain) const;

    bool operator==(const QuantizedCsi&) const = default;
};

using CsiMode = std::variant<NoCsi, PerfectCsi, QuantizedCsi>;

void validate(const CsiMode& csi);

/// One player of the random access game.
struct NodeSpec {
    double demand = 0.0;     // packets per slot
    CsiMode csi = NoCsi{};
    double tx_prob = 0.0;    // average transmission probability
    double threshold = std::numeric_limits<double>::infinity();  // perfect CSI only

    static NodeSpec no_csi(double demand, double p);
    /// Threshold set to -ln p so that P(gain > threshold) = p.
    static NodeSpec perfect(double demand, double p);
    /// tx_prob is derived from the strategy and the Rayleigh level probabilities.
    static NodeSpec quantized(double demand, QuantizedCsi csi);

    bool operator==(const NodeSpec&) const = default;
};

void validate(const NodeSpec& node);

double threshold_for(double p);

struct Scenario {
    std::vector<NodeSpec> nodes;
    CaptureModel model = SinrCapture{};
    std::uint64_t seed = 1;
    std::uint64_t slots = 1'000'000;

    std::size_t size() const { return nodes.size(); }
    bool operator==(const Scenario&) const = default;
};

void validate(const Scenario& scenario);

struct SlotOutcome {
    std::vector<bool> transmitted;
    std::vector<double> gains;
    std::vector<bool> success;
};

using Rng = std::mt19937_64;

/// Independent stream for (seed, replication, stream). Stream 0 drives the
/// channel gains, stream 1 + i drives node i's transmit decisions.
Rng make_stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream);

/// n i.i.d. unit-mean exponential draws (|h|^2 under Rayleigh fading).
std::vector<double> sample_gains(std::size_t n, Rng& rng);
void sample_gains(std::span<double> out, Rng& rng);

std::vector<bool> decide_capture(const CaptureModel& model,
                                 const std::vector<bool>& transmitted,
                                 std::span<const double> gains);

/// Flat variant used by the slot simulator: `transmitted`/`success` hold 0 or 1.
void decide_capture(const CaptureModel& model,
                    std::span<const std::uint8_t> transmitted,
                    std::span<const double> gains,
                    std::span<std::uint8_t> success);

/// Occurrence probability of each quantization level for a unit-mean
/// exponential gain.
std::vector<double> level_probabilities(std::span<const double> cutpoints);

/// Average transmission probability of a threshold strategy given the level
/// occurrence probabilities. Throws std::invalid_argument when the strategy is
/// not of the form (0,...,0,s,1,...,1) or the probabilities are malformed.
double threshold_to_prob(std::span<const double> strategy, std::span<const double> level_probs);

}  // namespace aloha
