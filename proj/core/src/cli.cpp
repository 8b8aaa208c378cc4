#include "bdsde/cli.hpp"

#include "bdsde/forward.hpp"
#include "bdsde/harness.hpp"
#include "bdsde/io.hpp"
#include "bdsde/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace bdsde {

namespace {

using ordered_json = nlohmann::ordered_json;

struct Common {
    std::string scenario_path;
    std::string out_dir = ".";
    std::string format = "json";
    std::string dump_file, load_file;
    std::uint64_t seed_w = 0, seed_b = 0;
    int threads = 0;
    CLI::Option* opt_seed_w = nullptr;
    CLI::Option* opt_seed_b = nullptr;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--scenario", c.scenario_path, "scenario file (TOML)")->required();
    c.opt_seed_w = cmd->add_option("--seed-w", c.seed_w, "override the forward-noise seed");
    c.opt_seed_b = cmd->add_option("--seed-b", c.seed_b, "override the backward-noise seed");
    cmd->add_option("--out", c.out_dir, "output directory (created if missing)");
    cmd->add_option("--format", c.format, "report format")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--threads", c.threads, "worker thread cap (0 = hardware)");
    cmd->add_option("--dump-paths", c.dump_file, "also dump the driving paths to this file");
    cmd->add_option("--load-paths", c.load_file, "use a previously dumped path bundle");
}

Scenario load(const Common& c, bool enforce_assumptions) {
    Scenario sc = load_scenario(c.scenario_path, enforce_assumptions);
    if (c.opt_seed_w->count() > 0) sc.seed_w = c.seed_w;
    if (c.opt_seed_b->count() > 0) sc.seed_b = c.seed_b;
    return sc;
}

BrownianBundle make_bundle(const Scenario& sc, const Common& c) {
    if (!c.load_file.empty()) {
        BrownianBundle b = load_paths(c.load_file);
        if (!(b.grid == TimeGrid(sc.t0, sc.T, sc.n_steps)) || b.M != sc.n_paths || b.d != sc.d ||
            b.l != sc.l)
            throw std::invalid_argument("--load-paths: bundle does not match the scenario grid/dims");
        return b;
    }
    return gen_bundle(sc.seed_w, sc.seed_b, TimeGrid(sc.t0, sc.T, sc.n_steps), sc.n_paths, sc.d, sc.l);
}

std::string out_path(const Common& c, const std::string& stem, const char* ext) {
    std::filesystem::create_directories(c.out_dir);
    return (std::filesystem::path(c.out_dir) / (stem + "." + ext)).string();
}

void maybe_dump(const Common& c, const BrownianBundle& bundle) {
    if (!c.dump_file.empty()) {
        dump_paths(c.dump_file, bundle);
        std::printf("paths dumped to %s\n", c.dump_file.c_str());
    }
}

std::string kv_csv(const ordered_json& j) {
    std::string out = "key,value\n";
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.value().is_array() || it.value().is_object()) continue;
        out += it.key() + "," + it.value().dump() + "\n";
    }
    return out;
}

void write_report(const Common& c, const std::string& stem, const std::string& json_text,
                  const std::string& csv_text) {
    const std::string path = out_path(c, stem, c.format == "csv" ? "csv" : "json");
    write_text_file(path, c.format == "csv" ? csv_text : json_text);
    std::printf("report written to %s\n", path.c_str());
}

int cmd_simulate(const Common& c) {
    const Scenario sc = load(c, true);
    const BrownianBundle bundle = make_bundle(sc, c);
    maybe_dump(c, bundle);
    const double x0 = sc.probes.front().second;
    const ForwardSolution fwd = euler_forward(sc.coeffs, {x0}, bundle);
    const int N = sc.n_steps, M = sc.n_paths, d = sc.d;
    const double* xT = fwd.x_col(N);
    std::vector<double> mean(d, 0.0), sq(d, 0.0), lo(d, 0.0), hi(d, 0.0);
    for (int a = 0; a < d; ++a) lo[a] = hi[a] = xT[a];
    for (int m = 0; m < M; ++m)
        for (int a = 0; a < d; ++a) {
            const double v = xT[static_cast<std::size_t>(m) * d + a];
            mean[a] += v;
            sq[a] += v * v;
            lo[a] = std::min(lo[a], v);
            hi[a] = std::max(hi[a], v);
        }
    ordered_json j;
    j["scenario"] = sc.id;
    j["n_steps"] = N;
    j["n_paths"] = M;
    j["x0"] = x0;
    for (int a = 0; a < d; ++a) {
        mean[a] /= M;
        sq[a] = std::sqrt(std::max(0.0, sq[a] / M - mean[a] * mean[a]));
    }
    j["x_T_mean"] = mean;
    j["x_T_std"] = sq;
    j["x_T_min"] = lo;
    j["x_T_max"] = hi;
    write_report(c, "simulate-sde-" + sc.id, j.dump(2) + "\n", kv_csv(j));
    return 0;
}

int cmd_solve_bdsde(const Common& c) {
    const Scenario sc = load(c, true);
    const BrownianBundle bundle = make_bundle(sc, c);
    maybe_dump(c, bundle);
    const auto [t, x] = sc.probes.front();
    const double dt = (sc.T - sc.t0) / sc.n_steps;
    const int it = static_cast<int>(std::lround((t - sc.t0) / dt));
    const BrownianBundle sb = it == 0 ? bundle : suffix_bundle(bundle, it);
    const BackwardBFunctional bback = backward_B(sb, sc.coeffs.phi);
    const ForwardSolution fwd = euler_forward(sc.coeffs, {x}, sb);
    const BDSDESolution sol = solve_bdsde(sc.coeffs, fwd, sb, bback, sc.reg);
    std::vector<double> z0(static_cast<std::size_t>(sb.M) * sc.k * sc.d);
    sol.z_col(0, z0.data());
    ordered_json j;
    j["scenario"] = sc.id;
    j["t"] = t;
    j["x"] = x;
    j["n_steps"] = sb.grid.n_steps;
    j["n_paths"] = sc.n_paths;
    j["y0"] = sol.y0();
    j["y0_se"] = sol.y0_se();
    j["z0"] = z0[0];
    j["warnings"] = sol.back.warnings;
    write_report(c, "solve-bdsde-" + sc.id, j.dump(2) + "\n", kv_csv(j));
    std::printf("y0 = %.9g (se %.3g)\n", sol.y0(), sol.y0_se());
    return 0;
}

int cmd_solve_spde(const Common& c) {
    const Scenario sc = load(c, true);
    const BrownianBundle bundle = make_bundle(sc, c);
    maybe_dump(c, bundle);
    const BackwardBFunctional bback = backward_B(bundle, sc.coeffs.phi);
    const RandomFieldU field = solve_spde(sc.coeffs, bundle, bback, sc.space, sc.scheme);
    const std::string field_path =
        out_path(c, "field-" + sc.id, c.format == "csv" ? "csv" : "bin");
    if (c.format == "csv")
        write_field_csv(field_path, field);
    else
        write_field_bin(field_path, field);
    ordered_json j;
    j["scenario"] = sc.id;
    j["n_steps"] = sc.n_steps;
    j["j_interior"] = sc.space.J;
    j["scheme"] = sc.scheme == SpdeScheme::explicit_euler ? "explicit" : "theta";
    j["field_file"] = std::filesystem::path(field_path).filename().string();
    ordered_json probes = ordered_json::array();
    for (const auto& [t, x] : sc.probes) {
        const int it = static_cast<int>(std::lround((t - sc.t0) / ((sc.T - sc.t0) / sc.n_steps)));
        probes.push_back({{"t", t}, {"x", x}, {"u", field.value(it, x)}});
    }
    j["probes"] = probes;
    write_report(c, "solve-spde-" + sc.id, j.dump(2) + "\n", kv_csv(j));
    return 0;
}

int cmd_compare(const Common& c) {
    const Scenario sc = load(c, true);
    BrownianBundle loaded;
    const BrownianBundle* paths = nullptr;
    if (!c.load_file.empty()) {
        loaded = make_bundle(sc, c);
        paths = &loaded;
    }
    if (!c.dump_file.empty()) {
        const BrownianBundle bundle = paths ? *paths : make_bundle(sc, c);
        maybe_dump(c, bundle);
    }
    const ComparisonReport rep = fk_compare(sc, paths);
    write_report(c, "compare-fk-" + sc.id, report_to_json(rep), report_to_csv(rep));
    for (const ProbeResult& p : rep.probes)
        std::printf("probe (t=%g, x=%g): u=%.9g  Y=%.9g  |diff|=%.3g  budget=%.3g  %s\n", p.t, p.x,
                    p.u_spde, p.y_bdsde, p.abs_diff, 3.0 * p.mc_se + p.fd_budget,
                    p.pass ? "pass" : "FAIL");
    std::printf("%s\n", rep.all_pass ? "all gates passed" : "numerical gate failed");
    return rep.all_pass ? 0 : 2;
}

int cmd_converge(const Common& c) {
    const Scenario sc = load(c, true);
    if (sc.sweep_n.empty() && sc.sweep_m.empty() && sc.sweep_j.empty())
        throw std::invalid_argument("scenario: converge needs a [sweep] section with n/m/j lists");
    const ConvergenceTable table = convergence_study(sc, sc.sweep_n, sc.sweep_m, sc.sweep_j);
    write_report(c, "converge-" + sc.id, table_to_json(table), table_to_csv(table));
    if (table.has_order_dt) std::printf("empirical dt order: %.3f\n", table.order_dt);
    if (table.has_order_m) std::printf("empirical M order: %.3f\n", table.order_m);
    if (table.has_order_dx) std::printf("empirical dx order: %.3f\n", table.order_dx);
    return 0;
}

int cmd_check(const Common& c) {
    const Scenario sc = load(c, false);
    const AssumptionReport rep = scenario_assumptions(sc);
    write_report(c, "check-assumptions-" + sc.id, assumptions_to_json(rep), assumptions_to_csv(rep));
    for (const std::string& v : rep.violations) std::printf("violation: %s\n", v.c_str());
    std::printf("%s\n", rep.violations.empty() ? "assumptions hold on the sampled box"
                                               : "assumption check failed");
    return rep.violations.empty() ? 0 : 2;
}

int cmd_dump(const Common& c) {
    const Scenario sc = load(c, true);
    const BrownianBundle bundle = make_bundle(sc, c);
    const std::string path =
        c.dump_file.empty() ? out_path(c, "paths-" + sc.id, "bin") : c.dump_file;
    dump_paths(path, bundle);
    std::printf("paths dumped to %s\n", path.c_str());
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"BDSDE / backward SPDE laboratory"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* desc;
        int (*fn)(const Common&);
    };
    const Sub subs[] = {
        {"simulate-sde", "forward SDE only: terminal-state statistics", &cmd_simulate},
        {"solve-bdsde", "least-squares Monte Carlo BDSDE solve at the first probe", &cmd_solve_bdsde},
        {"solve-spde", "pathwise finite-difference solve of the backward SPDE", &cmd_solve_spde},
        {"compare-fk", "both solvers on one B path, budget-gated comparison", &cmd_compare},
        {"converge", "sweep N/M/J with coupled refinement and empirical orders", &cmd_converge},
        {"check-assumptions", "sampled (H1)-(H3) estimates for the scenario preset", &cmd_check},
        {"dump-paths", "write the scenario's driving increments to a binary dump", &cmd_dump},
    };

    std::vector<Common> commons(std::size(subs));
    std::vector<CLI::App*> cmds;
    for (std::size_t q = 0; q < std::size(subs); ++q) {
        CLI::App* cmd = app.add_subcommand(subs[q].name, subs[q].desc);
        add_common(cmd, commons[q]);
        cmds.push_back(cmd);
    }

    std::vector<std::string> argv_vec;
    argv_vec.reserve(args.size() + 1);
    argv_vec.push_back("bdsde");
    for (const std::string& a : args) argv_vec.push_back(a);
    std::vector<const char*> argv;
    argv.reserve(argv_vec.size());
    for (const std::string& a : argv_vec) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        for (std::size_t q = 0; q < std::size(subs); ++q) {
            if (cmds[q]->parsed()) {
                if (commons[q].threads > 0) set_max_threads(commons[q].threads);
                return subs[q].fn(commons[q]);
            }
        }
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    args.reserve(argc > 0 ? argc - 1 : 0);
    for (int q = 1; q < argc; ++q) args.emplace_back(argv[q]);
    return run_cli(args);
}

} // namespace bdsde
