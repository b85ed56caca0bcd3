#include "aloha/cli.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "aloha/analytic.hpp"
#include "aloha/config.hpp"
#include "aloha/dynamics.hpp"
#include "aloha/paradox.hpp"
#include "aloha/simulator.hpp"
#include "aloha/solver.hpp"

namespace aloha::cli {

namespace {

using json = nlohmann::json;

constexpr int kSchemaVersion = 1;

struct Options {
    std::string config;
    std::string p;
    std::string grid;
    std::string out;
    std::string format;
    std::optional<std::uint64_t> seed;
    bool dump_config = false;
};

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{:.12g}", x);
}

// Same rounding as the CSV text so both formats carry identical values.
json jnum(double x) {
    if (!std::isfinite(x)) return num(x);
    return std::stod(num(x));
}

json jnums(const std::vector<double>& xs) {
    json a = json::array();
    for (double x : xs) a.push_back(jnum(x));
    return a;
}

std::vector<double> parse_p(const std::string& text) {
    std::vector<double> p;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
            throw ConfigError(fmt::format("--p: \"{}\" is not a number", item));
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(fmt::format("--p: {} is outside [0,1]", v));
        p.push_back(v);
    }
    if (p.empty()) throw ConfigError("--p: empty probability list");
    return p;
}

std::vector<double> parse_grid(const std::string& text) {
    if (text.empty()) return uniform_grid();
    double start = 0.0, stop = 0.0;
    long long count = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> start >> c1 >> stop >> c2 >> count) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof())
        throw ConfigError(fmt::format("--grid: expected start:stop:count, got \"{}\"", text));
    if (count < 1) throw ConfigError("--grid: count must be positive");
    try {
        return uniform_grid(start, stop, static_cast<std::size_t>(count));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("--grid: {}", e.what()));
    }
}

std::string model_label(const CaptureModel& model) {
    if (const auto* s = std::get_if<SinrCapture>(&model)) return fmt::format("sinr b={} noise_ratio={}", num(s->b), num(s->noise_ratio));
    return fmt::format("power delta={}", num(std::get<PowerCapture>(model).delta));
}

json model_json(const CaptureModel& model) {
    if (const auto* s = std::get_if<SinrCapture>(&model))
        return {{"kind", "sinr"}, {"b", jnum(s->b)}, {"noise_ratio", jnum(s->noise_ratio)}};
    return {{"kind", "power"}, {"delta", jnum(std::get<PowerCapture>(model).delta)}};
}

std::string header(std::string_view command, const std::string& extra) {
    return fmt::format("# aloha-game {} v{}{}{}\n", command, kSchemaVersion, extra.empty() ? "" : " ", extra);
}

std::string schema(std::string_view command) {
    return fmt::format("aloha-game/{}/v{}", command, kSchemaVersion);
}

struct Output {
    std::string text;
    int code = kOk;
};

std::vector<double> probabilities(const ScenarioConfig& cfg, const Options& opt) {
    if (opt.p.empty()) return cfg.tx_probs();
    auto p = parse_p(opt.p);
    if (p.size() != cfg.nodes.size())
        throw ConfigError(fmt::format("--p: {} values for {} nodes", p.size(), cfg.nodes.size()));
    return p;
}

Output cmd_throughput(const ScenarioConfig& cfg, const Options& opt, bool as_json, std::ostream& err) {
    const Regime regime = cfg.regime();
    const auto p = probabilities(cfg, opt);
    const auto r = throughput(regime, p);
    std::optional<bool> valid;
    if (regime.is_sinr() && regime.csi == CsiKind::Perfect) {
        const auto& m = std::get<SinrCapture>(regime.model);
        valid = sinr_csi_valid(p, m.b, m.noise_ratio);
        if (!*valid) err << "warning: closed form does not apply at this point; compare against `simulate`\n";
    }
    const char* csi = regime.csi == CsiKind::Perfect ? "perfect" : "none";
    if (as_json) {
        json doc{{"schema", schema("throughput")}, {"model", model_json(cfg.model)}, {"csi", csi}};
        json nodes = json::array();
        for (std::size_t i = 0; i < p.size(); ++i) nodes.push_back({{"node", i}, {"p", jnum(p[i])}, {"throughput", jnum(r[i])}});
        doc["nodes"] = nodes;
        if (valid) doc["closed_form_valid"] = *valid;
        return {doc.dump(2) + "\n"};
    }
    std::string s = header("throughput", fmt::format("model=\"{}\" csi={}", model_label(cfg.model), csi));
    s += "node,p,throughput\n";
    for (std::size_t i = 0; i < p.size(); ++i) s += fmt::format("{},{},{}\n", i, num(p[i]), num(r[i]));
    return {s};
}

Output cmd_solve(const ScenarioConfig& cfg, const Options& opt, bool as_json) {
    const Regime regime = cfg.regime();
    const auto demands = cfg.demands();
    const std::size_t n = demands.size();
    const auto* pc = std::get_if<PowerCapture>(&regime.model);
    const auto* sinr = std::get_if<SinrCapture>(&regime.model);

    bool homogeneous = n >= 2;
    for (double d : demands) homogeneous = homogeneous && d == demands[0];
    if (sinr && regime.csi == CsiKind::Perfect && sinr->b < 1.0) homogeneous = false;

    EquilibriumResult res;
    std::string method;
    if (pc && pc->delta == 0.0 && regime.csi == CsiKind::None) {
        method = "concave";
        res = solve_delta0_concave(demands);
    } else if (homogeneous && opt.p.empty()) {
        method = "homogeneous";
        res = find_homogeneous_equilibria(demands[0], n, regime);
    } else {
        method = "best_response";
        SolverOptions so;
        if (!opt.p.empty()) so.start = probabilities(cfg, opt);
        res = solve_equilibrium(demands, regime, so);
        if (res.status == SolveStatus::Converged && !uniqueness_known(regime, n)) {
            if (auto second = find_second_equilibrium(demands, regime, res.points.front())) {
                const auto r = throughput(regime, *second);
                double worst = 0.0;
                for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(r[i] - demands[i]));
                res.points.push_back(*second);
                res.residuals.push_back(worst);
                res.classification.push_back(Classification::Second);
            }
        }
    }

    const int code = res.status == SolveStatus::Converged  ? kOk
                     : res.status == SolveStatus::Infeasible ? kInfeasible
                                                             : kNonConvergence;
    std::optional<bool> bound_ok;
    if (sinr && regime.csi == CsiKind::None && res.preferred()) bound_ok = theorem1_bound_check(res, sinr->b);

    if (as_json) {
        json doc{{"schema", schema("solve")},
                 {"model", model_json(cfg.model)},
                 {"csi", regime.csi == CsiKind::Perfect ? "perfect" : "none"},
                 {"demands", jnums(demands)},
                 {"method", method},
                 {"status", std::string(to_string(res.status))},
                 {"feasible", res.feasible},
                 {"iterations", res.iterations}};
        json points = json::array();
        for (std::size_t k = 0; k < res.points.size(); ++k) {
            double sum = 0.0;
            for (double q : res.points[k]) sum += q;
            points.push_back({{"p", jnums(res.points[k])},
                              {"sum_p", jnum(sum)},
                              {"residual", jnum(res.residuals[k])},
                              {"classification", std::string(to_string(res.classification[k]))}});
        }
        doc["points"] = points;
        if (res.infeasible_node) doc["infeasible_node"] = *res.infeasible_node;
        if (res.status == SolveStatus::NonConvergence) doc["last_residual"] = jnum(res.last_residual);
        if (sinr && regime.csi == CsiKind::None)
            doc["sum_bound"] = {{"bound", jnum((sinr->b + 1.0) / sinr->b)},
                                {"satisfied", bound_ok ? json(*bound_ok) : json(nullptr)}};
        return {doc.dump(2) + "\n", code};
    }
    std::string s = header("solve", fmt::format("model=\"{}\" method={} status={}", model_label(cfg.model), method,
                                                to_string(res.status)));
    s += "point,node,p,classification,residual\n";
    for (std::size_t k = 0; k < res.points.size(); ++k)
        for (std::size_t i = 0; i < res.points[k].size(); ++i)
            s += fmt::format("{},{},{},{},{}\n", k, i, num(res.points[k][i]), to_string(res.classification[k]),
                             num(res.residuals[k]));
    return {s, code};
}

Output cmd_simulate(const ScenarioConfig& cfg, const Options& opt, bool as_json) {
    Scenario sc = cfg.scenario();
    if (!opt.p.empty()) {
        const auto p = probabilities(cfg, opt);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (std::holds_alternative<QuantizedCsi>(sc.nodes[i].csi))
                throw ConfigError(fmt::format("--p: node {} uses quantized CSI", i));
            const double d = sc.nodes[i].demand;
            sc.nodes[i] = std::holds_alternative<PerfectCsi>(sc.nodes[i].csi) ? NodeSpec::perfect(d, p[i])
                                                                             : NodeSpec::no_csi(d, p[i]);
        }
    }
    const auto est = estimate_throughput(sc, cfg.sim.replications);
    const std::size_t n = sc.size();
    std::vector<std::uint64_t> tx(n, 0), ok(n, 0);
    for (const auto& t : est.traces)
        for (std::size_t i = 0; i < n; ++i) {
            tx[i] += t.transmits[i];
            ok[i] += t.successes[i];
        }
    const double total = static_cast<double>(sc.slots) * static_cast<double>(est.replications);

    if (as_json) {
        json doc{{"schema", schema("simulate")}, {"model", model_json(sc.model)}, {"seed", sc.seed},
                 {"slots", sc.slots}, {"replications", est.replications}};
        json nodes = json::array();
        for (std::size_t i = 0; i < n; ++i)
            nodes.push_back({{"node", i},
                             {"transmits", tx[i]},
                             {"successes", ok[i]},
                             {"rho_hat", jnum(static_cast<double>(ok[i]) / total)},
                             {"p_hat", jnum(static_cast<double>(tx[i]) / total)},
                             {"std_error", jnum(est.std_error[i])}});
        doc["nodes"] = nodes;
        return {doc.dump(2) + "\n"};
    }
    std::string s = header("simulate", fmt::format("model=\"{}\" seed={} slots={} replications={}",
                                                   model_label(sc.model), sc.seed, sc.slots, est.replications));
    s += "node,transmits,successes,rho_hat,p_hat,std_error\n";
    for (std::size_t i = 0; i < n; ++i)
        s += fmt::format("{},{},{},{},{},{}\n", i, tx[i], ok[i], num(static_cast<double>(ok[i]) / total),
                         num(static_cast<double>(tx[i]) / total), num(est.std_error[i]));
    return {s};
}

Output cmd_dynamics(const ScenarioConfig& cfg, bool as_json) {
    const Regime regime = cfg.regime();
    const auto& d = cfg.dynamics;
    DynamicsOptions o;
    o.eps = d.eps;
    o.max_iter = d.max_iter;
    o.asynchronous = d.asynchronous;
    o.record_every = d.record_every;
    if (d.analytic) o.estimator = AnalyticEstimator{};
    else o.estimator = EmpiricalEstimator{d.update_every_slots, d.window_slots, cfg.sim.seed};

    const auto demands = cfg.demands();
    const auto trace = run_dynamics(demands, regime, o);
    const int code = trace.converged ? kOk : kNonConvergence;

    if (as_json) {
        json doc{{"schema", schema("dynamics")},
                 {"model", model_json(cfg.model)},
                 {"csi", regime.csi == CsiKind::Perfect ? "perfect" : "none"},
                 {"estimator", d.analytic ? "analytic" : "empirical"},
                 {"seed", cfg.sim.seed},
                 {"converged", trace.converged},
                 {"iterations", trace.iterations},
                 {"slots", trace.slots_elapsed},
                 {"final_p", jnums(trace.final_p)},
                 {"final_residual", jnum(trace.final_residual)}};
        json steps = json::array();
        for (const auto& st : trace.steps)
            steps.push_back({{"iteration", st.iteration},
                             {"p", jnums(st.p)},
                             {"T", jnums(st.threshold)},
                             {"rho_hat", jnums(st.rho_hat)},
                             {"eps", jnum(st.eps)}});
        doc["steps"] = steps;
        return {doc.dump(2) + "\n", code};
    }
    std::string s = header("dynamics", fmt::format("model=\"{}\" estimator={} seed={} converged={}",
                                                   model_label(cfg.model), d.analytic ? "analytic" : "empirical",
                                                   cfg.sim.seed, trace.converged));
    s += "iteration,node,p,T,rho_hat,eps\n";
    for (const auto& st : trace.steps)
        for (std::size_t i = 0; i < st.p.size(); ++i)
            s += fmt::format("{},{},{},{},{},{}\n", st.iteration, i, num(st.p[i]), num(st.threshold[i]),
                             num(st.rho_hat[i]), num(st.eps));
    return {s, code};
}

Output cmd_paradox(const ScenarioConfig& cfg, const Options& opt, bool as_json, std::ostream& err) {
    const SimFallback fb{cfg.sim.slots, cfg.sim.seed};
    if (!opt.p.empty()) {
        const auto* sinr = std::get_if<SinrCapture>(&cfg.model);
        if (!sinr) throw ConfigError("--p with paradox compares SINR capture nodes only");
        const auto p = probabilities(cfg, opt);
        const auto cmp = heterogeneous_case_compare(p, sinr->b, sinr->noise_ratio, fb);
        if (cmp.simulated) err << "warning: closed form does not apply; perfect-CSI column is simulated\n";
        if (as_json) {
            json doc{{"schema", schema("paradox")}, {"model", model_json(cfg.model)}, {"simulated", cmp.simulated}};
            json nodes = json::array();
            for (std::size_t i = 0; i < cmp.nodes.size(); ++i) {
                const auto& g = cmp.nodes[i];
                nodes.push_back({{"node", i}, {"p", jnum(g.p)}, {"rho_nocsi", jnum(g.rho_nocsi)},
                                 {"rho_csi", jnum(g.rho_csi)}, {"gap", jnum(g.gap)}});
            }
            doc["nodes"] = nodes;
            return {doc.dump(2) + "\n"};
        }
        std::string s = header("paradox", fmt::format("model=\"{}\" nodes simulated={}", model_label(cfg.model),
                                                      cmp.simulated));
        s += "node,p,rho_nocsi,rho_csi,gap\n";
        for (std::size_t i = 0; i < cmp.nodes.size(); ++i) {
            const auto& g = cmp.nodes[i];
            s += fmt::format("{},{},{},{},{}\n", i, num(g.p), num(g.rho_nocsi), num(g.rho_csi), num(g.gap));
        }
        return {s};
    }

    const auto grid = parse_grid(opt.grid);
    std::vector<std::size_t> sizes = cfg.paradox.n;
    if (sizes.empty()) sizes.push_back(cfg.nodes.size());
    std::vector<ParadoxReport> reports;
    for (std::size_t n : sizes) reports.push_back(compare_homogeneous(cfg.model, n, grid, fb));

    if (as_json) {
        json doc{{"schema", schema("paradox")}, {"model", model_json(cfg.model)}, {"seed", cfg.sim.seed}};
        json curves = json::array();
        for (const auto& r : reports)
            curves.push_back({{"n", r.n},
                              {"paradox_present", r.paradox_present},
                              {"simulated", r.simulated},
                              {"p", jnums(r.grid)},
                              {"rho_nocsi", jnums(r.rho_nocsi)},
                              {"rho_csi", jnums(r.rho_csi)},
                              {"gap", jnums(r.gap)}});
        doc["curves"] = curves;
        return {doc.dump(2) + "\n"};
    }
    std::string s = header("paradox", fmt::format("model=\"{}\" seed={}", model_label(cfg.model), cfg.sim.seed));
    s += "n,p,rho_nocsi,rho_csi,gap\n";
    for (const auto& r : reports)
        for (std::size_t k = 0; k < r.grid.size(); ++k)
            s += fmt::format("{},{},{},{},{}\n", r.n, num(r.grid[k]), num(r.rho_nocsi[k]), num(r.rho_csi[k]),
                             num(r.gap[k]));
    return {s};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Slotted ALOHA random access game: throughput, equilibria, simulation"};
    app.require_subcommand(1);
    Options opt;
    const char* names[] = {"throughput", "solve", "simulate", "dynamics", "paradox"};
    const char* help[] = {"analytic per-node throughput", "Nash equilibria for the demands",
                          "Monte Carlo slot simulation", "distributed update dynamics",
                          "no-CSI vs perfect-CSI comparison"};
    for (std::size_t k = 0; k < 5; ++k) {
        auto* sub = app.add_subcommand(names[k], help[k]);
        sub->add_option("--config", opt.config, "scenario file (JSON)")->required();
        sub->add_option("--p", opt.p, "comma-separated transmission probabilities");
        sub->add_option("--grid", opt.grid, "paradox grid start:stop:count (default 0:1:1001)");
        sub->add_option("--out", opt.out, "write output to this file");
        sub->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--seed", opt.seed, "override the simulation seed");
        sub->add_flag("--dump-config", opt.dump_config, "print the parsed scenario and exit");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        ScenarioConfig cfg = load_config(opt.config);
        if (opt.seed) cfg.sim.seed = *opt.seed;
        Output result;
        if (opt.dump_config) {
            result.text = dump_config(cfg);
        } else {
            const bool as_json = opt.format.empty() ? command == "solve" : opt.format == "json";
            if (command == "throughput") result = cmd_throughput(cfg, opt, as_json, err);
            else if (command == "solve") result = cmd_solve(cfg, opt, as_json);
            else if (command == "simulate") result = cmd_simulate(cfg, opt, as_json);
            else if (command == "dynamics") result = cmd_dynamics(cfg, as_json);
            else result = cmd_paradox(cfg, opt, as_json, err);
        }

        if (opt.out.empty()) {
            out << result.text;
        } else {
            std::ofstream f(opt.out, std::ios::binary);
            if (!f) throw ConfigError(fmt::format("{}: cannot open for writing", opt.out));
            f << result.text;
        }
        if (result.code == kInfeasible) err << "demands are infeasible\n";
        if (result.code == kNonConvergence) err << "did not converge\n";
        return result.code;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }
}

}  // namespace aloha::cli
