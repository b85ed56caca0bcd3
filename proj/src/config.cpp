#include "aloha/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/core.h>

#include "json.hpp"

namespace aloha {

namespace {

using json = nlohmann::json;

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& where, const std::string& what) const {
        throw ConfigError(fmt::format("{}:{}: {}", source_, where.empty() ? "/" : where, what));
    }

    void object(const json& v, const std::string& where, std::initializer_list<std::string_view> allowed) const {
        if (!v.is_object()) fail(where, "expected an object");
        for (const auto& [key, _] : v.items()) {
            bool ok = false;
            for (auto a : allowed) ok = ok || key == a;
            if (!ok) fail(where + "/" + key, "unknown key");
        }
    }

    double number(const json& v, const std::string& where) const {
        if (!v.is_number()) fail(where, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(where, "expected a finite number");
        return x;
    }

    double unit(const json& v, const std::string& where) const {
        const double x = number(v, where);
        if (x < 0.0 || x > 1.0) fail(where, fmt::format("{} is outside [0,1]", x));
        return x;
    }

    std::uint64_t count(const json& v, const std::string& where, std::uint64_t min) const {
        std::uint64_t k = 0;
        if (v.is_number_unsigned()) {
            k = v.get<std::uint64_t>();
        } else if (v.is_number_integer()) {
            if (v.get<std::int64_t>() < 0) fail(where, "expected a non-negative integer");
            k = static_cast<std::uint64_t>(v.get<std::int64_t>());
        } else if (v.is_number_float()) {
            // allow 1e7 and friends
            const double x = v.get<double>();
            if (!(x >= 0.0 && x < 1.8e19 && std::floor(x) == x)) fail(where, "expected a non-negative integer");
            k = static_cast<std::uint64_t>(x);
        } else {
            fail(where, "expected a non-negative integer");
        }
        if (k < min) fail(where, fmt::format("must be at least {}", min));
        return k;
    }

    std::vector<double> numbers(const json& v, const std::string& where) const {
        if (!v.is_array()) fail(where, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], fmt::format("{}/{}", where, k)));
        return out;
    }

private:
    std::string source_;
};

CaptureModel read_model(const Reader& rd, const json& v) {
    const std::string at = "/model";
    if (!v.is_object()) rd.fail(at, "expected an object");
    if (!v.contains("kind") || !v["kind"].is_string()) rd.fail(at + "/kind", "expected \"sinr\" or \"power\"");
    const auto kind = v["kind"].get<std::string>();
    if (kind == "sinr") {
        rd.object(v, at, {"kind", "b", "noise_ratio"});
        if (!v.contains("b")) rd.fail(at + "/b", "missing capture ratio");
        SinrCapture m{rd.number(v["b"], at + "/b"), 0.0};
        if (!(m.b > 0.0)) rd.fail(at + "/b", "capture ratio must be positive");
        if (v.contains("noise_ratio")) m.noise_ratio = rd.number(v["noise_ratio"], at + "/noise_ratio");
        if (m.noise_ratio < 0.0) rd.fail(at + "/noise_ratio", "noise ratio must be non-negative");
        return m;
    }
    if (kind == "power") {
        rd.object(v, at, {"kind", "delta"});
        if (!v.contains("delta")) rd.fail(at + "/delta", "missing guard zone");
        const auto& d = v["delta"];
        if (d.is_string()) {
            const auto s = d.get<std::string>();
            if (s != "inf" && s != "Infinity") rd.fail(at + "/delta", "expected a number or \"inf\"");
            return PowerCapture::collision();
        }
        const double delta = rd.number(d, at + "/delta");
        if (delta < 0.0) rd.fail(at + "/delta", "guard zone must be non-negative");
        return PowerCapture{delta};
    }
    rd.fail(at + "/kind", fmt::format("unknown model kind \"{}\"", kind));
}

NodeSpec read_node(const Reader& rd, const json& v, std::size_t k) {
    const std::string at = fmt::format("/nodes/{}", k);
    rd.object(v, at, {"demand", "csi", "p"});
    if (!v.contains("demand")) rd.fail(at + "/demand", "missing demand");
    const double demand = rd.unit(v["demand"], at + "/demand");
    const json csi = v.contains("csi") ? v["csi"] : json("none");

    if (csi.is_object()) {
        rd.object(csi, at + "/csi", {"quantized"});
        if (!csi.contains("quantized")) rd.fail(at + "/csi", "expected {\"quantized\": {...}}");
        const auto& q = csi["quantized"];
        rd.object(q, at + "/csi/quantized", {"cutpoints", "probs"});
        if (!q.contains("cutpoints") || !q.contains("probs"))
            rd.fail(at + "/csi/quantized", "needs cutpoints and probs");
        if (v.contains("p")) rd.fail(at + "/p", "quantized nodes derive p from their strategy");
        QuantizedCsi qc{rd.numbers(q["cutpoints"], at + "/csi/quantized/cutpoints"),
                        rd.numbers(q["probs"], at + "/csi/quantized/probs")};
        try {
            return NodeSpec::quantized(demand, std::move(qc));
        } catch (const std::invalid_argument& e) {
            rd.fail(at + "/csi/quantized", e.what());
        }
    }
    if (!csi.is_string()) rd.fail(at + "/csi", "expected \"none\", \"perfect\" or {\"quantized\": ...}");
    const auto mode = csi.get<std::string>();
    const double p = v.contains("p") ? rd.unit(v["p"], at + "/p") : demand;
    if (mode == "none") return NodeSpec::no_csi(demand, p);
    if (mode == "perfect") return NodeSpec::perfect(demand, p);
    rd.fail(at + "/csi", fmt::format("unknown CSI mode \"{}\"", mode));
}

SimSection read_sim(const Reader& rd, const json& v) {
    rd.object(v, "/sim", {"slots", "seed", "replications"});
    SimSection s;
    if (v.contains("slots")) s.slots = rd.count(v["slots"], "/sim/slots", 1);
    if (v.contains("seed")) s.seed = rd.count(v["seed"], "/sim/seed", 0);
    if (v.contains("replications")) s.replications = rd.count(v["replications"], "/sim/replications", 1);
    return s;
}

DynamicsSection read_dynamics(const Reader& rd, const json& v) {
    rd.object(v, "/dynamics",
              {"eps", "max_iter", "update_every_slots", "window_slots", "estimator", "asynchronous", "record_every"});
    DynamicsSection d;
    if (v.contains("eps")) {
        const auto& e = v["eps"];
        if (e.is_string()) {
            if (e.get<std::string>() != "harmonic") rd.fail("/dynamics/eps", "expected \"harmonic\" or a number");
        } else {
            const double c = rd.number(e, "/dynamics/eps");
            if (!(c > 0.0 && c <= 1.0)) rd.fail("/dynamics/eps", "constant step must lie in (0,1]");
            d.eps = EpsSchedule::constant(c);
        }
    }
    if (v.contains("max_iter")) d.max_iter = rd.count(v["max_iter"], "/dynamics/max_iter", 1);
    if (v.contains("update_every_slots"))
        d.update_every_slots = rd.count(v["update_every_slots"], "/dynamics/update_every_slots", 1);
    if (v.contains("window_slots")) d.window_slots = rd.count(v["window_slots"], "/dynamics/window_slots", 0);
    if (v.contains("record_every")) d.record_every = rd.count(v["record_every"], "/dynamics/record_every", 1);
    if (v.contains("estimator")) {
        const auto& e = v["estimator"];
        const std::string s = e.is_string() ? e.get<std::string>() : "";
        if (s == "analytic") d.analytic = true;
        else if (s == "empirical") d.analytic = false;
        else rd.fail("/dynamics/estimator", "expected \"empirical\" or \"analytic\"");
    }
    if (v.contains("asynchronous")) {
        if (!v["asynchronous"].is_boolean()) rd.fail("/dynamics/asynchronous", "expected true or false");
        d.asynchronous = v["asynchronous"].get<bool>();
    }
    return d;
}

ParadoxSection read_paradox(const Reader& rd, const json& v) {
    rd.object(v, "/paradox", {"n"});
    ParadoxSection p;
    if (!v.contains("n")) return p;
    const auto& n = v["n"];
    if (n.is_array()) {
        for (std::size_t k = 0; k < n.size(); ++k) p.n.push_back(rd.count(n[k], fmt::format("/paradox/n/{}", k), 1));
    } else {
        p.n.push_back(rd.count(n, "/paradox/n", 1));
    }
    return p;
}

json model_json(const CaptureModel& model) {
    if (const auto* s = std::get_if<SinrCapture>(&model)) return {{"kind", "sinr"}, {"b", s->b}, {"noise_ratio", s->noise_ratio}};
    const auto& pc = std::get<PowerCapture>(model);
    if (pc.is_collision()) return {{"kind", "power"}, {"delta", "inf"}};
    return {{"kind", "power"}, {"delta", pc.delta}};
}

}  // namespace

Scenario ScenarioConfig::scenario() const {
    return Scenario{nodes, model, sim.seed, sim.slots};
}

std::vector<double> ScenarioConfig::demands() const {
    std::vector<double> d;
    for (const auto& n : nodes) d.push_back(n.demand);
    return d;
}

std::vector<double> ScenarioConfig::tx_probs() const {
    std::vector<double> p;
    for (const auto& n : nodes) p.push_back(n.tx_prob);
    return p;
}

Regime ScenarioConfig::regime() const {
    std::size_t perfect = 0;
    for (const auto& n : nodes) {
        if (std::holds_alternative<QuantizedCsi>(n.csi))
            throw ConfigError("analytic models cover no-CSI and perfect-CSI nodes only");
        perfect += std::holds_alternative<PerfectCsi>(n.csi);
    }
    if (perfect != 0 && perfect != nodes.size())
        throw ConfigError("analytic models need every node in the same CSI mode");
    return Regime{model, perfect == 0 ? CsiKind::None : CsiKind::Perfect};
}

ScenarioConfig parse_config(std::string_view text, const std::string& source) {
    const Reader rd(source);
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: byte {}: {}", source, e.byte, e.what()));
    }
    rd.object(doc, "", {"version", "model", "nodes", "sim", "dynamics", "paradox"});
    if (doc.contains("version") && !(doc["version"].is_number_integer() && doc["version"].get<int>() == 1))
        rd.fail("/version", "only version 1 is understood");

    ScenarioConfig cfg;
    if (!doc.contains("model")) rd.fail("/model", "missing model section");
    cfg.model = read_model(rd, doc["model"]);
    if (!doc.contains("nodes") || !doc["nodes"].is_array() || doc["nodes"].empty())
        rd.fail("/nodes", "expected a non-empty array of nodes");
    for (std::size_t k = 0; k < doc["nodes"].size(); ++k) cfg.nodes.push_back(read_node(rd, doc["nodes"][k], k));
    if (doc.contains("sim")) cfg.sim = read_sim(rd, doc["sim"]);
    if (doc.contains("dynamics")) cfg.dynamics = read_dynamics(rd, doc["dynamics"]);
    if (doc.contains("paradox")) cfg.paradox = read_paradox(rd, doc["paradox"]);
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("{}: cannot open file", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::string dump_config(const ScenarioConfig& c) {
    json doc;
    doc["version"] = 1;
    doc["model"] = model_json(c.model);
    json nodes = json::array();
    for (const auto& n : c.nodes) {
        json node{{"demand", n.demand}};
        if (const auto* q = std::get_if<QuantizedCsi>(&n.csi)) {
            node["csi"] = {{"quantized", {{"cutpoints", q->cutpoints}, {"probs", q->probs}}}};
        } else {
            node["csi"] = std::holds_alternative<PerfectCsi>(n.csi) ? "perfect" : "none";
            node["p"] = n.tx_prob;
        }
        nodes.push_back(std::move(node));
    }
    doc["nodes"] = std::move(nodes);
    doc["sim"] = {{"slots", c.sim.slots}, {"seed", c.sim.seed}, {"replications", c.sim.replications}};
    const auto& d = c.dynamics;
    doc["dynamics"] = {
        {"eps", d.eps.kind == EpsSchedule::Kind::Harmonic ? json("harmonic") : json(d.eps.value)},
        {"max_iter", d.max_iter},
        {"update_every_slots", d.update_every_slots},
        {"window_slots", d.window_slots},
        {"estimator", d.analytic ? "analytic" : "empirical"},
        {"asynchronous", d.asynchronous},
        {"record_every", d.record_every},
    };
    if (!c.paradox.n.empty()) doc["paradox"] = {{"n", c.paradox.n}};
    return doc.dump(2) + "\n";
}

}  // namespace aloha
