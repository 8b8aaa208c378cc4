#pragma once

#include "bdsde/diagnostics.hpp"
#include "bdsde/presets.hpp"
#include "bdsde/regression.hpp"
#include "bdsde/spde.hpp"
#include "bdsde/toml_lite.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace bdsde {

// One fully specified run: preset + parameters, grids, seeds, probes.
// Gate numerics carry no defaults; every field below except [params],
// [sweep] and assumption_radius must appear in the file.
struct Scenario {
    std::string id;
    std::string coeff_family;
    std::map<std::string, double> params;
    CoefficientSet coeffs; // built from the preset at load time

    int d = 1, k = 1, l = 1;
    double t0 = 0.0, T = 1.0;
    std::vector<std::pair<double, double>> probes; // (t, x)
    std::uint64_t seed_w = 0, seed_b = 0;

    int n_steps = 0, n_paths = 0;
    RegressionSpec reg;
    SpaceGrid space;
    SpdeScheme scheme = SpdeScheme::explicit_euler;
    double assumption_radius = 2.0;

    std::vector<int> sweep_n, sweep_m, sweep_j; // optional [sweep] lists
};

// Builds the scenario from a parsed config, constructs the preset and
// validates dimensions, grids and probes. With enforce_assumptions the
// (H1)-(H3) estimates from check_assumptions must pass, otherwise the
// scenario is rejected; the check-assumptions command loads without
// enforcement so it can report the violations instead.
Scenario scenario_from_doc(const TomlDoc& doc, bool enforce_assumptions = true);
Scenario load_scenario(const std::string& path, bool enforce_assumptions = true);

// the assumption check run at load, reusable by the CLI
AssumptionReport scenario_assumptions(const Scenario& sc, int sample_count = 4096);

} // namespace bdsde
