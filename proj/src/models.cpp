#include "aloha/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace aloha {

namespace {

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void validate(const CaptureModel& model) {
    if (const auto* s = std::get_if<SinrCapture>(&model)) {
        if (!(s->b > 0.0) || std::isinf(s->b))
            throw std::invalid_argument(fmt::format("capture ratio b must be positive and finite, got {}", s->b));
        if (!(s->noise_ratio >= 0.0) || std::isinf(s->noise_ratio))
            throw std::invalid_argument(fmt::format("noise_ratio must be nonnegative, got {}", s->noise_ratio));
    } else {
        const auto& p = std::get<PowerCapture>(model);
        if (!(p.delta >= 0.0))
            throw std::invalid_argument(fmt::format("guard zone delta must be >= 0, got {}", p.delta));
    }
}

std::size_t QuantizedCsi::level_of(double gain) const {
    return static_cast<std::size_t>(std::upper_bound(cutpoints.begin(), cutpoints.end(), gain) - cutpoints.begin());
}

void validate(const CsiMode& csi) {
    const auto* q = std::get_if<QuantizedCsi>(&csi);
    if (!q) return;
    if (q->probs.size() != q->levels())
        throw std::invalid_argument(fmt::format("quantized CSI needs {} level probabilities, got {}", q->levels(),
                                                q->probs.size()));
    for (std::size_t m = 0; m < q->cutpoints.size(); ++m) {
        if (!(q->cutpoints[m] > 0.0) || !std::isfinite(q->cutpoints[m]))
            throw std::invalid_argument("quantizer cutpoints must be positive and finite");
        if (m > 0 && !(q->cutpoints[m] > q->cutpoints[m - 1]))
            throw std::invalid_argument("quantizer cutpoints must be strictly increasing");
    }
    for (double s : q->probs)
        if (!in_unit(s)) throw std::invalid_argument(fmt::format("level transmit probability {} outside [0,1]", s));
}

double threshold_for(double p) {
    if (!in_unit(p)) throw std::invalid_argument(fmt::format("probability {} outside [0,1]", p));
    return p == 0.0 ? std::numeric_limits<double>::infinity() : -std::log(p);
}

NodeSpec NodeSpec::no_csi(double demand, double p) {
    NodeSpec n;
    n.demand = demand;
    n.csi = NoCsi{};
    n.tx_prob = p;
    validate(n);
    return n;
}

NodeSpec NodeSpec::perfect(double demand, double p) {
    NodeSpec n;
    n.demand = demand;
    n.csi = PerfectCsi{};
    n.tx_prob = p;
    n.threshold = threshold_for(p);
    validate(n);
    return n;
}

NodeSpec NodeSpec::quantized(double demand, QuantizedCsi csi) {
    validate(CsiMode{csi});
    NodeSpec n;
    n.demand = demand;
    const auto level_probs = level_probabilities(csi.cutpoints);
    n.tx_prob = threshold_to_prob(csi.probs, level_probs);
    n.csi = std::move(csi);
    return n;
}

void validate(const NodeSpec& node) {
    if (!in_unit(node.demand)) throw std::invalid_argument(fmt::format("demand {} outside [0,1]", node.demand));
    if (!in_unit(node.tx_prob))
        throw std::invalid_argument(fmt::format("transmission probability {} outside [0,1]", node.tx_prob));
    validate(node.csi);
    if (std::holds_alternative<PerfectCsi>(node.csi)) {
        if (!(node.threshold >= 0.0)) throw std::invalid_argument("threshold must be nonnegative");
        if (std::abs(std::exp(-node.threshold) - node.tx_prob) > 1e-12)
            throw std::invalid_argument(fmt::format("threshold {} inconsistent with tx_prob {} (need p = exp(-T))",
                                                    node.threshold, node.tx_prob));
    }
}

void validate(const Scenario& scenario) {
    if (scenario.nodes.empty()) throw std::invalid_argument("scenario needs at least one node");
    if (scenario.slots == 0) throw std::invalid_argument("slots must be positive");
    validate(scenario.model);
    for (const auto& n : scenario.nodes) validate(n);
}

Rng make_stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(replication), hi(replication), lo(stream), hi(stream)};
    return Rng(seq);
}

void sample_gains(std::span<double> out, Rng& rng) {
    std::exponential_distribution<double> exp1(1.0);
    for (auto& g : out) g = exp1(rng);
}

std::vector<double> sample_gains(std::size_t n, Rng& rng) {
    std::vector<double> g(n);
    sample_gains(g, rng);
    return g;
}

void decide_capture(const CaptureModel& model,
                    std::span<const std::uint8_t> transmitted,
                    std::span<const double> gains,
                    std::span<std::uint8_t> success) {
    const std::size_t n = transmitted.size();
    if (gains.size() != n || success.size() != n)
        throw std::invalid_argument("decide_capture: transmitted, gains and success differ in length");

    if (const auto* s = std::get_if<SinrCapture>(&model)) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!transmitted[i]) {
                success[i] = 0;
                continue;
            }
            // Interference summed directly over the others, not total - own,
            // so a lone transmitter sees exactly the noise floor.
            double interference = s->noise_ratio;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && transmitted[j]) interference += gains[j];
            success[i] = gains[i] > s->b * interference;
        }
        return;
    }

    const auto& pc = std::get<PowerCapture>(model);
    // Largest and second-largest received powers among transmitters.
    std::size_t count = 0, top = n;
    double best = -1.0, second = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        success[i] = 0;
        if (!transmitted[i]) continue;
        ++count;
        if (gains[i] > best) {
            second = std::max(second, best);
            best = gains[i];
            top = i;
        } else {
            second = std::max(second, gains[i]);
        }
    }
    if (count == 0) return;
    if (count == 1) {
        success[top] = 1;
        return;
    }
    if (pc.is_collision()) return;
    // Only the strongest transmitter can satisfy the guard condition; ties fail.
    if (best > (1.0 + pc.delta) * second) success[top] = 1;
}

std::vector<bool> decide_capture(const CaptureModel& model,
                                 const std::vector<bool>& transmitted,
                                 std::span<const double> gains) {
    std::vector<std::uint8_t> tx(transmitted.begin(), transmitted.end());
    std::vector<std::uint8_t> ok(tx.size());
    decide_capture(model, tx, gains, ok);
    return {ok.begin(), ok.end()};
}

std::vector<double> level_probabilities(std::span<const double> cutpoints) {
    std::vector<double> probs(cutpoints.size() + 1);
    double lower_tail = 1.0;  // P(gain >= lower cut) of the current level
    for (std::size_t m = 0; m < cutpoints.size(); ++m) {
        const double upper_tail = std::exp(-cutpoints[m]);
        probs[m] = lower_tail - upper_tail;
        lower_tail = upper_tail;
    }
    probs.back() = lower_tail;
    return probs;
}

double threshold_to_prob(std::span<const double> strategy, std::span<const double> level_probs) {
    if (strategy.size() != level_probs.size() || strategy.empty())
        throw std::invalid_argument("strategy and level probabilities must be nonempty and of equal length");
    double mass = 0.0;
    for (double q : level_probs) {
        if (!(q > 0.0)) throw std::invalid_argument("level occurrence probabilities must be positive");
        mass += q;
    }
    if (std::abs(mass - 1.0) > 1e-9)
        throw std::invalid_argument(fmt::format("level occurrence probabilities sum to {}, not 1", mass));

    const auto first = std::find_if(strategy.begin(), strategy.end(), [](double s) { return s != 0.0; });
    for (auto it = strategy.begin(); it != strategy.end(); ++it) {
        if (!in_unit(*it)) throw std::invalid_argument("strategy entries must lie in [0,1]");
        if (it > first && *it != 1.0)
            throw std::invalid_argument("strategy is not a threshold strategy (0,...,0,s,1,...,1)");
    }
    double p = 0.0;
    for (std::size_t m = 0; m < strategy.size(); ++m) p += strategy[m] * level_probs[m];
    return p;
}

}  // namespace aloha
