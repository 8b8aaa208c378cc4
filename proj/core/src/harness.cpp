#include "bdsde/harness.hpp"
#include "bdsde/forward.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace bdsde {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::size_t kMaxNotes = 80;

// Budget constants calibrated per preset from self-convergence sweeps of
// this implementation (max over sweep cells of |u-Y|/(dt+dx^2) with margin),
// then pinned. Unknown families get the most conservative value.
double c_fd_table(const std::string& family) {
    if (family == "heat-quadratic") return 2.0;
    if (family == "ou-linear") return 2.0;
    if (family == "additive-noise") return 2.0;
    if (family == "nonlinear-f-exp-decay") return 2.0;
    if (family == "contracting-g") return 2.0;
    if (family == "random-coeff-sine") return 6.0;
    return 6.0;
}

void push_notes(std::vector<std::string>& notes, const std::vector<std::string>& add, const char* tag) {
    for (const std::string& w : add) {
        if (notes.size() >= kMaxNotes) return;
        notes.push_back(std::string(tag) + ": " + w);
    }
}

int probe_node(const Scenario& sc, double t) {
    const double dt = (sc.T - sc.t0) / sc.n_steps;
    const int it = static_cast<int>(std::lround((t - sc.t0) / dt));
    const TimeGrid grid(sc.t0, sc.T, sc.n_steps);
    if (it < 0 || it >= sc.n_steps || std::fabs(t - grid.node(it)) > 1e-9 * (sc.T - sc.t0)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "fk_compare: probe t=%.9g is not a grid node before T", t);
        throw std::invalid_argument(buf);
    }
    return it;
}

struct ProbeSolve {
    int node = 0;
    double y = 0.0, se = 0.0, z = 0.0;
};

// point-started BDSDE solves on the suffix grid, one per probe, all against
// the same B realization carried by `bundle`
std::vector<ProbeSolve> solve_probes(const Scenario& sc, const BrownianBundle& bundle,
                                     std::vector<std::string>& notes) {
    std::vector<ProbeSolve> out;
    out.reserve(sc.probes.size());
    std::vector<double> zbuf(static_cast<std::size_t>(bundle.M));
    for (std::size_t p = 0; p < sc.probes.size(); ++p) {
        const auto [t, x] = sc.probes[p];
        ProbeSolve ps;
        ps.node = probe_node(sc, t);
        const BrownianBundle sb = ps.node == 0 ? bundle : suffix_bundle(bundle, ps.node);
        const BackwardBFunctional bbs = backward_B(sb, sc.coeffs.phi);
        const ForwardSolution fwd = euler_forward(sc.coeffs, {x}, sb);
        const BDSDESolution sol = solve_bdsde(sc.coeffs, fwd, sb, bbs, sc.reg);
        ps.y = sol.y0();
        ps.se = sol.y0_se();
        sol.z_col(0, zbuf.data());
        ps.z = zbuf[0];
        char tag[32];
        std::snprintf(tag, sizeof tag, "probe %zu", p);
        push_notes(notes, sol.back.warnings, tag);
        out.push_back(ps);
    }
    return out;
}

FieldMetrics field_metrics(const Scenario& sc, const BrownianBundle& bundle, const RandomFieldU& field,
                           std::vector<std::string>& notes) {
    const int J = sc.space.J;
    const int N = sc.n_steps;
    const int jlo = std::max(1, (J + 2) / 4);
    const int jhi = std::min(J, (J + 2) - (J + 2) / 4 - 1);
    std::vector<double> xs;
    for (int j = jlo; j <= jhi; ++j) xs.push_back(sc.space.node(j));
    if (xs.empty()) throw std::invalid_argument("fk_compare: spatial grid too small for field metrics");

    std::vector<double> x0(static_cast<std::size_t>(bundle.M));
    for (int m = 0; m < bundle.M; ++m) x0[m] = xs[m % xs.size()];
    const BackwardBFunctional bback = backward_B(bundle, sc.coeffs.phi);
    const ForwardSolution fwd = euler_forward(sc.coeffs, x0, bundle);
    const BDSDESolution sol = solve_bdsde(sc.coeffs, fwd, bundle, bback, sc.reg);
    push_notes(notes, sol.back.warnings, "field solve");

    FieldMetrics fm;
    double acc_y = 0.0, acc_z = 0.0;
    const int stride = std::max(1, N / 8);
    for (int i = 0; i < N; i += stride) {
        const double* urow = field.row(i);
        const double* uxrow = field.ux_row(i);
        for (int j = jlo; j <= jhi; ++j) {
            const double x = sc.space.node(j);
            double sg;
            sc.coeffs.sigma(&x, &sg);
            const double dy = sol.back.y_field[i].eval1(&x) - urow[j];
            const double dz = sol.back.z_field[i].eval1(&x) - sg * uxrow[j];
            acc_y += dy * dy;
            acc_z += dz * dz;
            fm.max_y = std::max(fm.max_y, std::fabs(dy));
            fm.max_z = std::max(fm.max_z, std::fabs(dz));
            ++fm.points_compared;
        }
    }
    if (fm.points_compared > 0) {
        fm.rms_y = std::sqrt(acc_y / fm.points_compared);
        fm.rms_z = std::sqrt(acc_z / fm.points_compared);
    }
    return fm;
}

double slope_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t q = 0; q < n; ++q) {
        const double lx = std::log(xs[q]), ly = std::log(ys[q]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

void require_increasing(const std::vector<int>& v, const char* name) {
    for (std::size_t q = 1; q < v.size(); ++q)
        if (v[q] <= v[q - 1])
            throw std::invalid_argument(std::string("convergence_study: ") + name + " must be strictly increasing");
}

SweepCell cell_from_report(char axis, const ComparisonReport& rep) {
    SweepCell c;
    c.axis = axis;
    c.n_steps = rep.n_steps;
    c.n_paths = rep.n_paths;
    c.j_interior = rep.j_interior;
    c.dt = rep.dt;
    c.dx = rep.dx;
    double se_sum = 0.0;
    for (const ProbeResult& p : rep.probes) {
        c.max_probe_err = std::max(c.max_probe_err, p.abs_diff);
        c.max_z_err = std::max(c.max_z_err, p.z_abs_diff);
        se_sum += p.mc_se;
    }
    if (!rep.probes.empty()) c.mean_mc_se = se_sum / rep.probes.size();
    return c;
}

bool all_positive(const std::vector<double>& v) {
    for (double x : v)
        if (!(x > 0.0)) return false;
    return true;
}

} // namespace

double preset_c_fd(const std::string& family) { return c_fd_table(family); }

ComparisonReport fk_compare(const Scenario& sc, const BrownianBundle* paths) {
    if (sc.d != 1 || sc.k != 1)
        throw std::invalid_argument("fk_compare: the comparison requires d = k = 1");
    const TimeGrid grid(sc.t0, sc.T, sc.n_steps);
    BrownianBundle bundle;
    if (paths) {
        if (!(paths->grid == grid) || paths->M != sc.n_paths || paths->d != sc.d || paths->l != sc.l)
            throw std::invalid_argument("fk_compare: preloaded paths do not match the scenario grid/dims");
        bundle = *paths;
    } else {
        bundle = gen_bundle(sc.seed_w, sc.seed_b, grid, sc.n_paths, sc.d, sc.l);
    }

    ComparisonReport rep;
    rep.scenario_id = sc.id;
    rep.coeff_family = sc.coeff_family;
    rep.n_steps = sc.n_steps;
    rep.n_paths = sc.n_paths;
    rep.j_interior = sc.space.J;
    rep.dt = grid.dt();
    rep.dx = sc.space.dx();
    rep.domain_width = sc.space.x_max - sc.space.x_min;
    rep.c_fd = preset_c_fd(sc.coeff_family);
    const double budget = rep.c_fd * (rep.dt + rep.dx * rep.dx);

    const BackwardBFunctional bback = backward_B(bundle, sc.coeffs.phi);
    const RandomFieldU field = solve_spde(sc.coeffs, bundle, bback, sc.space, sc.scheme);

    const std::vector<ProbeSolve> solves = solve_probes(sc, bundle, rep.notes);
    for (std::size_t p = 0; p < sc.probes.size(); ++p) {
        const ProbeSolve& ps = solves[p];
        ProbeResult pr;
        pr.t = sc.probes[p].first;
        pr.x = sc.probes[p].second;
        pr.y_bdsde = ps.y;
        pr.mc_se = ps.se;
        pr.fd_budget = budget;
        pr.u_spde = field.value(ps.node, pr.x);
        pr.abs_diff = std::fabs(pr.u_spde - pr.y_bdsde);
        double sg;
        sc.coeffs.sigma(&pr.x, &sg);
        pr.z_spde = sg * field.value_ux(ps.node, pr.x);
        pr.z_bdsde = ps.z;
        pr.z_abs_diff = std::fabs(pr.z_spde - pr.z_bdsde);
        pr.pass = pr.abs_diff <= 3.0 * pr.mc_se + pr.fd_budget;
        rep.all_pass = rep.all_pass && pr.pass;
        rep.probes.push_back(pr);
    }

    rep.fields = field_metrics(sc, bundle, field, rep.notes);
    return rep;
}

ConvergenceTable convergence_study(const Scenario& sc, const std::vector<int>& n_list,
                                   const std::vector<int>& m_list, const std::vector<int>& j_list) {
    require_increasing(n_list, "N list");
    require_increasing(m_list, "M list");
    require_increasing(j_list, "J list");
    ConvergenceTable table;

    if (!n_list.empty()) {
        const int n_fine = n_list.back();
        for (int n : n_list)
            if (n_fine % n != 0)
                throw std::invalid_argument("convergence_study: each N must divide the largest N");
        std::vector<double> dts, errs;
        for (int n : n_list) {
            Scenario cell_sc = sc;
            cell_sc.n_steps = n;
            // dx^2 tied to dt so both budget terms refine together
            const double scale = std::sqrt(static_cast<double>(n) / sc.n_steps);
            cell_sc.space.J = std::max(3, static_cast<int>(std::lround((sc.space.J + 1) * scale)) - 1);
            const TimeGrid grid(sc.t0, sc.T, n);
            const BrownianBundle bundle =
                gen_bundle(sc.seed_w, sc.seed_b, grid, sc.n_paths, sc.d, sc.l, n_fine, n_fine);
            const ComparisonReport rep = fk_compare(cell_sc, &bundle);
            SweepCell cell = cell_from_report('n', rep);
            table.cells.push_back(cell);
            dts.push_back(cell.dt);
            errs.push_back(cell.max_probe_err);
        }
        if (n_list.size() >= 2 && all_positive(errs)) {
            table.has_order_dt = true;
            table.order_dt = slope_loglog(dts, errs);
        }
    }

    if (!m_list.empty()) {
        std::vector<double> ms, errs;
        for (int m : m_list) {
            Scenario cell_sc = sc;
            cell_sc.n_paths = m;
            const ComparisonReport rep = fk_compare(cell_sc);
            SweepCell cell = cell_from_report('m', rep);
            table.cells.push_back(cell);
            ms.push_back(static_cast<double>(m));
            errs.push_back(cell.max_probe_err);
        }
        if (m_list.size() >= 2 && all_positive(errs)) {
            table.has_order_m = true;
            table.order_m = -slope_loglog(ms, errs);
        }
    }

    if (!j_list.empty()) {
        // probe solves do not depend on J; do them once
        const TimeGrid grid(sc.t0, sc.T, sc.n_steps);
        const BrownianBundle bundle = gen_bundle(sc.seed_w, sc.seed_b, grid, sc.n_paths, sc.d, sc.l);
        std::vector<std::string> scratch_notes;
        const std::vector<ProbeSolve> solves = solve_probes(sc, bundle, scratch_notes);
        const BackwardBFunctional bback = backward_B(bundle, sc.coeffs.phi);
        std::vector<double> dxs, errs;
        for (int j : j_list) {
            Scenario cell_sc = sc;
            cell_sc.space.J = j;
            cell_sc.space.validate();
            const RandomFieldU field = solve_spde(sc.coeffs, bundle, bback, cell_sc.space, cell_sc.scheme);
            SweepCell cell;
            cell.axis = 'j';
            cell.n_steps = sc.n_steps;
            cell.n_paths = sc.n_paths;
            cell.j_interior = j;
            cell.dt = grid.dt();
            cell.dx = cell_sc.space.dx();
            double se_sum = 0.0;
            for (std::size_t p = 0; p < sc.probes.size(); ++p) {
                const ProbeSolve& ps = solves[p];
                const double x = sc.probes[p].second;
                const double u = field.value(ps.node, x);
                double sg;
                sc.coeffs.sigma(&x, &sg);
                cell.max_probe_err = std::max(cell.max_probe_err, std::fabs(u - ps.y));
                cell.max_z_err = std::max(cell.max_z_err, std::fabs(sg * field.value_ux(ps.node, x) - ps.z));
                se_sum += ps.se;
            }
            if (!sc.probes.empty()) cell.mean_mc_se = se_sum / sc.probes.size();
            table.cells.push_back(cell);
            dxs.push_back(cell.dx);
            errs.push_back(cell.max_probe_err);
        }
        if (j_list.size() >= 2 && all_positive(errs)) {
            table.has_order_dx = true;
            table.order_dx = slope_loglog(dxs, errs);
        }
    }
    return table;
}

std::string report_to_json(const ComparisonReport& rep) {
    ordered_json j;
    j["scenario"] = rep.scenario_id;
    j["coeff_family"] = rep.coeff_family;
    j["n_steps"] = rep.n_steps;
    j["n_paths"] = rep.n_paths;
    j["j_interior"] = rep.j_interior;
    j["dt"] = rep.dt;
    j["dx"] = rep.dx;
    j["domain_width"] = rep.domain_width;
    j["c_fd"] = rep.c_fd;
    j["probes"] = ordered_json::array();
    for (const ProbeResult& p : rep.probes) {
        ordered_json pj;
        pj["t"] = p.t;
        pj["x"] = p.x;
        pj["u_spde"] = p.u_spde;
        pj["y_bdsde"] = p.y_bdsde;
        pj["abs_diff"] = p.abs_diff;
        pj["mc_se"] = p.mc_se;
        pj["fd_budget"] = p.fd_budget;
        pj["z_spde"] = p.z_spde;
        pj["z_bdsde"] = p.z_bdsde;
        pj["z_abs_diff"] = p.z_abs_diff;
        pj["pass"] = p.pass;
        j["probes"].push_back(pj);
    }
    j["fields"] = {{"rms_y", rep.fields.rms_y},
                   {"max_y", rep.fields.max_y},
                   {"rms_z", rep.fields.rms_z},
                   {"max_z", rep.fields.max_z},
                   {"points_compared", rep.fields.points_compared}};
    j["all_pass"] = rep.all_pass;
    j["notes"] = rep.notes;
    return j.dump(2) + "\n";
}

std::string report_to_csv(const ComparisonReport& rep) {
    std::ostringstream ss;
    ss << "t,x,u_spde,y_bdsde,abs_diff,mc_se,fd_budget,z_spde,z_bdsde,z_abs_diff,pass\n";
    char buf[320];
    for (const ProbeResult& p : rep.probes) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      p.t, p.x, p.u_spde, p.y_bdsde, p.abs_diff, p.mc_se, p.fd_budget, p.z_spde, p.z_bdsde,
                      p.z_abs_diff, p.pass ? 1 : 0);
        ss << buf;
    }
    return ss.str();
}

std::string table_to_json(const ConvergenceTable& table) {
    ordered_json j;
    j["cells"] = ordered_json::array();
    for (const SweepCell& c : table.cells) {
        ordered_json cj;
        cj["axis"] = std::string(1, c.axis);
        cj["n_steps"] = c.n_steps;
        cj["n_paths"] = c.n_paths;
        cj["j_interior"] = c.j_interior;
        cj["dt"] = c.dt;
        cj["dx"] = c.dx;
        cj["max_probe_err"] = c.max_probe_err;
        cj["mean_mc_se"] = c.mean_mc_se;
        cj["max_z_err"] = c.max_z_err;
        j["cells"].push_back(cj);
    }
    j["has_order_dt"] = table.has_order_dt;
    j["order_dt"] = table.order_dt;
    j["has_order_m"] = table.has_order_m;
    j["order_m"] = table.order_m;
    j["has_order_dx"] = table.has_order_dx;
    j["order_dx"] = table.order_dx;
    return j.dump(2) + "\n";
}

std::string table_to_csv(const ConvergenceTable& table) {
    std::ostringstream ss;
    ss << "axis,n_steps,n_paths,j_interior,dt,dx,max_probe_err,mean_mc_se,max_z_err\n";
    char buf[256];
    for (const SweepCell& c : table.cells) {
        std::snprintf(buf, sizeof buf, "%c,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", c.axis, c.n_steps,
                      c.n_paths, c.j_interior, c.dt, c.dx, c.max_probe_err, c.mean_mc_se, c.max_z_err);
        ss << buf;
    }
    return ss.str();
}

std::string assumptions_to_json(const AssumptionReport& rep) {
    ordered_json j;
    j["c_f_hat"] = rep.c_f_hat;
    j["c_g_y_hat"] = rep.c_g_y_hat;
    j["alpha_hat"] = rep.alpha_hat;
    j["h2_min_eig"] = rep.h2_min_eig;
    j["h3_margin"] = rep.h3_margin;
    j["h3_sigma_max"] = rep.h3_sigma_max;
    j["declared_c"] = rep.declared_c;
    j["declared_alpha"] = rep.declared_alpha;
    j["declared_C"] = rep.declared_C;
    j["h1_ok"] = rep.h1_ok;
    j["h2_ok"] = rep.h2_ok;
    j["h3_ok"] = rep.h3_ok;
    j["violations"] = rep.violations;
    return j.dump(2) + "\n";
}

std::string assumptions_to_csv(const AssumptionReport& rep) {
    std::ostringstream ss;
    char buf[160];
    auto kv = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%s,%.17g\n", key, v);
        ss << buf;
    };
    ss << "key,value\n";
    kv("c_f_hat", rep.c_f_hat);
    kv("c_g_y_hat", rep.c_g_y_hat);
    kv("alpha_hat", rep.alpha_hat);
    kv("h2_min_eig", rep.h2_min_eig);
    kv("h3_margin", rep.h3_margin);
    kv("h3_sigma_max", rep.h3_sigma_max);
    kv("declared_c", rep.declared_c);
    kv("declared_alpha", rep.declared_alpha);
    kv("declared_C", rep.declared_C);
    ss << "h1_ok," << (rep.h1_ok ? 1 : 0) << "\n";
    ss << "h2_ok," << (rep.h2_ok ? 1 : 0) << "\n";
    ss << "h3_ok," << (rep.h3_ok ? 1 : 0) << "\n";
    return ss.str();
}

} // namespace bdsde
