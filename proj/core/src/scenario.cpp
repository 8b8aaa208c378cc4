#include "bdsde/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace bdsde {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("scenario: " + what); }

int checked_int(std::int64_t v, const char* field, std::int64_t lo, std::int64_t hi) {
    if (v < lo || v > hi) fail(std::string("field '") + field + "' out of range");
    return static_cast<int>(v);
}

} // namespace

AssumptionReport scenario_assumptions(const Scenario& sc, int sample_count) {
    const DomainBox box = DomainBox::cube(sc.coeffs, sc.assumption_radius);
    return check_assumptions(sc.coeffs, sample_count, box, sc.seed_w ^ 0xA55E55ull);
}

Scenario scenario_from_doc(const TomlDoc& doc, bool enforce_assumptions) {
    Scenario sc;
    sc.id = doc.root.get_string("id");
    sc.coeff_family = doc.root.get_string("coeff_family");

    const TomlTable& dims = doc.table("dims");
    sc.d = checked_int(dims.get_int("d"), "dims.d", 1, 64);
    sc.k = checked_int(dims.get_int("k"), "dims.k", 1, 64);
    sc.l = checked_int(dims.get_int("l"), "dims.l", 1, 64);

    const TomlTable& horizon = doc.table("horizon");
    sc.t0 = horizon.get_double("t0");
    sc.T = horizon.get_double("T");
    if (!(sc.T > sc.t0)) fail("field 'horizon.T' must exceed t0");

    const TomlTable& seeds = doc.table("seeds");
    sc.seed_w = static_cast<std::uint64_t>(seeds.get_int("w"));
    sc.seed_b = static_cast<std::uint64_t>(seeds.get_int("b"));

    const TomlTable& num = doc.table("numerics");
    sc.n_steps = checked_int(num.get_int("n_steps"), "numerics.n_steps", 1, 1 << 24);
    sc.n_paths = checked_int(num.get_int("n_paths"), "numerics.n_paths", 1, 1 << 30);
    const std::string& scheme = num.get_string("scheme");
    if (scheme == "explicit")
        sc.scheme = SpdeScheme::explicit_euler;
    else if (scheme == "theta")
        sc.scheme = SpdeScheme::theta_implicit;
    else
        fail("field 'numerics.scheme' must be \"explicit\" or \"theta\"");
    if (num.has("assumption_radius")) {
        sc.assumption_radius = num.get_double("assumption_radius");
        if (!(sc.assumption_radius > 0.0)) fail("field 'numerics.assumption_radius' must be positive");
    }

    const TomlTable& reg = doc.table("regression");
    const std::string& basis = reg.get_string("basis");
    if (basis == "global_poly")
        sc.reg.basis = BasisKind::global_poly;
    else if (basis == "piecewise_linear")
        sc.reg.basis = BasisKind::piecewise_linear;
    else
        fail("field 'regression.basis' must be \"global_poly\" or \"piecewise_linear\"");
    sc.reg.degree = checked_int(reg.get_int("degree"), "regression.degree", 0, 16);
    sc.reg.bins = checked_int(reg.get_int("bins"), "regression.bins", 1, 4096);
    sc.reg.ridge = reg.get_double("ridge");
    if (sc.reg.ridge < 0.0) fail("field 'regression.ridge' must be >= 0");

    const TomlTable& space = doc.table("space");
    sc.space.x_min = space.get_double("x_min");
    sc.space.x_max = space.get_double("x_max");
    sc.space.J = checked_int(space.get_int("j_interior"), "space.j_interior", 3, 1 << 20);
    sc.space.validate();

    auto probes_it = doc.table_arrays.find("probes");
    if (probes_it == doc.table_arrays.end() || probes_it->second.empty()) fail("at least one [[probes]] entry required");
    for (const TomlTable& p : probes_it->second) {
        const double t = p.get_double("t");
        const double x = p.get_double("x");
        if (t < sc.t0 || t >= sc.T) fail("probe t outside [t0, T)");
        if (x < sc.space.x_min || x > sc.space.x_max) fail("probe x outside the spatial domain");
        sc.probes.emplace_back(t, x);
    }

    if (doc.has_table("params")) {
        for (const auto& kv : doc.table("params").values) sc.params[kv.first] = doc.table("params").get_double(kv.first);
    }

    if (doc.has_table("sweep")) {
        const TomlTable& sw = doc.table("sweep");
        auto to_ints = [](const std::vector<std::int64_t>& in, const char* field) {
            std::vector<int> out;
            out.reserve(in.size());
            for (auto v : in) out.push_back(checked_int(v, field, 1, 1 << 30));
            return out;
        };
        if (sw.has("n")) sc.sweep_n = to_ints(sw.get_int_array("n"), "sweep.n");
        if (sw.has("m")) sc.sweep_m = to_ints(sw.get_int_array("m"), "sweep.m");
        if (sw.has("j")) sc.sweep_j = to_ints(sw.get_int_array("j"), "sweep.j");
    }

    sc.coeffs = make_preset(sc.coeff_family, sc.params);
    if (sc.coeffs.d != sc.d || sc.coeffs.k != sc.k || sc.coeffs.l != sc.l)
        fail("dims (d,k,l) do not match preset '" + sc.coeff_family + "'");

    if (enforce_assumptions) {
        const AssumptionReport rep = scenario_assumptions(sc);
        if (!rep.violations.empty()) fail("assumption check failed: " + rep.violations.front());
    }
    return sc;
}

Scenario load_scenario(const std::string& path, bool enforce_assumptions) {
    return scenario_from_doc(parse_toml_file(path), enforce_assumptions);
}

} // namespace bdsde
