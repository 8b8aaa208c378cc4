#pragma once

#include "bdsde/bdsde_solver.hpp"
#include "bdsde/diagnostics.hpp"
#include "bdsde/scenario.hpp"
#include "bdsde/spde.hpp"

#include <string>
#include <vector>

namespace bdsde {

// One probe comparison. Every difference travels with its two budget
// components: the Monte Carlo standard error and the finite-difference
// budget c_fd·(dt + dx²); a probe passes when
// |u - Y| <= 3·mc_se + fd_budget.
struct ProbeResult {
    double t = 0.0, x = 0.0;
    double u_spde = 0.0, y_bdsde = 0.0, abs_diff = 0.0;
    double mc_se = 0.0, fd_budget = 0.0;
    double z_spde = 0.0, z_bdsde = 0.0, z_abs_diff = 0.0; // (ux·sigma)(t,x) vs Z
    bool pass = true;
};

// Field-level agreement: the regression fields of a spread-start solve
// against the finite-difference field, sampled over interior nodes of the
// central half of the domain.
struct FieldMetrics {
    double rms_y = 0.0, max_y = 0.0;
    double rms_z = 0.0, max_z = 0.0;
    int points_compared = 0;
};

struct ComparisonReport {
    std::string scenario_id, coeff_family;
    int n_steps = 0, n_paths = 0, j_interior = 0;
    double dt = 0.0, dx = 0.0, domain_width = 0.0, c_fd = 0.0;
    std::vector<ProbeResult> probes;
    FieldMetrics fields;
    bool all_pass = true;
    std::vector<std::string> notes;
};

// both solvers on ONE B realization; probes are point-started BDSDE solves
// on the suffix grid against the same B. An optional preloaded bundle
// replaces generation (its grid/dims must match the scenario).
ComparisonReport fk_compare(const Scenario& sc, const BrownianBundle* paths = nullptr);

// finite-difference budget constant pinned per preset
double preset_c_fd(const std::string& family);

struct SweepCell {
    char axis = 'n'; // 'n', 'm' or 'j'
    int n_steps = 0, n_paths = 0, j_interior = 0;
    double dt = 0.0, dx = 0.0;
    double max_probe_err = 0.0, mean_mc_se = 0.0, max_z_err = 0.0;
};

struct ConvergenceTable {
    std::vector<SweepCell> cells;
    bool has_order_dt = false, has_order_m = false, has_order_dx = false;
    double order_dt = 0.0, order_m = 0.0, order_dx = 0.0;
};

// Repeats fk_compare along the sweep lists. The N sweep refines dt and dx
// together (dx² proportional to dt) under a common B realization: all cells
// draw from the generation grid of the finest N, so coarse increments are
// exact block sums of fine ones. Orders come from log-log regression and are
// reported only for lists of length >= 2.
ConvergenceTable convergence_study(const Scenario& sc, const std::vector<int>& n_list,
                                   const std::vector<int>& m_list, const std::vector<int>& j_list);

// deterministic serializers (no timestamps, no environment echoes)
std::string report_to_json(const ComparisonReport& rep);
std::string report_to_csv(const ComparisonReport& rep);
std::string table_to_json(const ConvergenceTable& table);
std::string table_to_csv(const ConvergenceTable& table);
std::string assumptions_to_json(const AssumptionReport& rep);
std::string assumptions_to_csv(const AssumptionReport& rep);

} // namespace bdsde
