#include <doctest.h>

#include "bdsde/io.hpp"
#include "bdsde/scenario.hpp"
#include "bdsde/toml_lite.hpp"
#include "test_util.hpp"

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

using namespace bdsde;

namespace {

std::string tmp_file(const std::string& name) { return std::string("/tmp/bdsde_test_") + name; }

// a minimal valid scenario, returned as text so tests can break single lines
std::string scenario_text() {
    return "id = \"toy\"\n"
           "coeff_family = \"ou-linear\"\n"
           "[dims]\n"
           "d = 1\nk = 1\nl = 1\n"
           "[horizon]\n"
           "t0 = 0.0\nT = 1.0\n"
           "[seeds]\n"
           "w = 11\nb = 12\n"
           "[numerics]\n"
           "n_steps = 20\nn_paths = 400\nscheme = \"theta\"\n"
           "[regression]\n"
           "basis = \"global_poly\"\ndegree = 2\nbins = 8\nridge = 1e-8\n"
           "[space]\n"
           "x_min = -3.0\nx_max = 3.0\nj_interior = 20\n"
           "[[probes]]\n"
           "t = 0.0\nx = 0.5\n";
}

} // namespace

TEST_CASE("toml parser handles scalars, arrays and comments") {
    const std::string text =
        "title = \"demo\" # trailing comment\n"
        "count = 42\n"
        "scale = -1.5e-3\n"
        "flag = true\n"
        "probes = [1, 2,\n"
        "          3]\n"
        "weights = [0.5, 1.5]\n"
        "[section]\n"
        "name = \"inner # not a comment\"\n"
        "[[rows]]\n"
        "v = 1\n"
        "[[rows]]\n"
        "v = 2\n";
    TomlDoc doc = parse_toml(text);
    CHECK(doc.root.get_string("title") == "demo");
    CHECK(doc.root.get_int("count") == 42);
    CHECK(doc.root.get_double("scale") == doctest::Approx(-1.5e-3));
    CHECK(doc.root.get_bool("flag"));
    CHECK(doc.root.get_int_array("probes") == std::vector<std::int64_t>{1, 2, 3});
    CHECK(doc.root.get_double_array("weights") == std::vector<double>{0.5, 1.5});
    CHECK(doc.table("section").get_string("name") == "inner # not a comment");
    REQUIRE(doc.table_arrays.count("rows") == 1);
    CHECK(doc.table_arrays.at("rows").size() == 2);
    CHECK(doc.table_arrays.at("rows")[1].get_int("v") == 2);
}

TEST_CASE("toml errors carry the line number or key name") {
    try {
        parse_toml("a = 1\nb = \n");
        FAIL("expected parse error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    try {
        parse_toml("a = 1\na = 2\n");
        FAIL("expected duplicate-key error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
    TomlDoc doc = parse_toml("x = 3.5\n");
    try {
        doc.root.get_int("missing");
        FAIL("expected missing-key error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("missing") != std::string::npos);
    }
    CHECK_THROWS_AS(doc.root.get_int("x"), std::invalid_argument); // 3.5 is not integral
    CHECK_THROWS_AS(doc.table("nope"), std::invalid_argument);
}

TEST_CASE("integral floats pass get_int") {
    TomlDoc doc = parse_toml("n = 4.0\n");
    CHECK(doc.root.get_int("n") == 4);
}

TEST_CASE("shipped scenarios load with all fields populated") {
    Scenario sc = load_scenario(scenario_path("heat-quadratic"));
    CHECK(sc.id == "heat-quadratic");
    CHECK(sc.coeff_family == "heat-quadratic");
    CHECK(sc.n_steps == 400);
    CHECK(sc.n_paths == 100000);
    CHECK(sc.space.J == 200);
    CHECK(sc.space.x_min == -6.0);
    CHECK(sc.scheme == SpdeScheme::explicit_euler);
    CHECK(sc.probes.size() == 3);
    CHECK(sc.seed_w == 1001);
    CHECK(sc.seed_b == 7);
    CHECK(!sc.sweep_n.empty());

    for (const char* name : {"ou-linear", "additive-noise", "nonlinear-f-exp-decay",
                             "contracting-g", "random-coeff-sine"}) {
        Scenario other = load_scenario(scenario_path(name));
        CHECK(other.id == name);
        CHECK(other.n_steps > 0);
        CHECK(!other.probes.empty());
    }
}

TEST_CASE("scenario validation names the missing or broken piece") {
    auto expect_throw = [](const std::string& text, const std::string& needle) {
        TomlDoc doc = parse_toml(text);
        try {
            scenario_from_doc(doc);
            FAIL("expected rejection, needle: " << needle);
        } catch (const std::invalid_argument& e) {
            const std::string msg = e.what();
            CHECK(msg.find(needle) != std::string::npos);
        }
    };

    std::string base = scenario_text();
    expect_throw(base.substr(base.find("coeff_family")), "id");
    {
        std::string t = base;
        t.replace(t.find("[numerics]"), 10, "[numerix]");
        expect_throw(t, "numerics");
    }
    {
        std::string t = base;
        t = t.substr(0, t.find("[[probes]]"));
        expect_throw(t, "probe");
    }
    {
        std::string t = base;
        t.replace(t.find("t = 0.0\nx = 0.5"), 15, "t = 1.0\nx = 0.5"); // t == T is outside [t0, T)
        expect_throw(t, "probe");
    }
    {
        std::string t = base;
        t.replace(t.find("x = 0.5"), 7, "x = 9.5"); // outside the space grid
        expect_throw(t, "probe");
    }
    {
        std::string t = base;
        t.replace(t.find("scheme = \"theta\""), 16, "scheme = \"magic\"");
        expect_throw(t, "scheme");
    }
    {
        std::string t = base;
        t.replace(t.find("ridge = 1e-8"), 12, "ridge = -1.0");
        expect_throw(t, "ridge");
    }
    {
        std::string t = base;
        t.replace(t.find("d = 1"), 5, "d = 2"); // preset is one dimensional
        expect_throw(t, "d");
    }
}

TEST_CASE("assumption enforcement can reject and can be bypassed") {
    std::string text = scenario_text();
    text.replace(text.find("coeff_family = \"ou-linear\""), 26, "coeff_family = \"contracting-g\"");
    text += "[params]\nslope = 1.5\n";
    TomlDoc doc = parse_toml(text);
    bool threw = false;
    try {
        scenario_from_doc(doc, true);
    } catch (const std::invalid_argument& e) {
        threw = true;
        CHECK(std::string(e.what()).find("assumption check failed") != std::string::npos);
    }
    CHECK(threw);
    Scenario sc = scenario_from_doc(doc, false);
    CHECK(sc.params.at("slope") == 1.5);
    AssumptionReport rep = scenario_assumptions(sc);
    CHECK(!rep.h3_ok);
    CHECK(rep.alpha_hat > 1.0);
    CHECK(!rep.violations.empty());
}

TEST_CASE("path dumps round trip bitwise") {
    const TimeGrid grid{0.25, 1.75, 12};
    BrownianBundle b = gen_bundle(701, 702, grid, 5, 2, 2);
    const std::string file = tmp_file("paths.bin");
    dump_paths(file, b);
    BrownianBundle r = load_paths(file);
    CHECK(r.from_file);
    CHECK(r.M == 5);
    CHECK(r.d == 2);
    CHECK(r.l == 2);
    CHECK(r.seed_w == 701);
    CHECK(r.seed_b == 702);
    CHECK(r.grid.t0 == 0.25);
    CHECK(r.grid.T == 1.75);
    CHECK(r.grid.n_steps == 12);
    for (int m = 0; m < 5; ++m)
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 2; ++j) CHECK(r.dw(m, i, j) == b.dw(m, i, j));
    CHECK(r.dB == b.dB);
    std::remove(file.c_str());
}

TEST_CASE("corrupt path dumps are refused") {
    const TimeGrid grid{0.0, 1.0, 4};
    BrownianBundle b = gen_bundle(711, 712, grid, 2, 1, 1);
    const std::string file = tmp_file("paths_bad.bin");
    dump_paths(file, b);
    // truncate
    {
        std::string all = read_text_file(file);
        write_text_file(file, all.substr(0, all.size() / 2));
        CHECK_THROWS_AS(load_paths(file), std::runtime_error);
    }
    // corrupt magic
    dump_paths(file, b);
    {
        std::string all = read_text_file(file);
        all[0] = 'X';
        write_text_file(file, all);
        bool threw = false;
        try {
            load_paths(file);
        } catch (const std::invalid_argument& e) {
            threw = true;
            CHECK(std::string(e.what()).find("not a path dump") != std::string::npos);
        }
        CHECK(threw);
    }
    std::remove(file.c_str());
    CHECK_THROWS_AS(load_paths(tmp_file("does_not_exist.bin")), std::invalid_argument);
}

TEST_CASE("field dumps round trip bitwise and export csv") {
    CoefficientSet c = make_preset("additive-noise");
    SpaceGrid space{-2.0, 2.0, 12};
    const TimeGrid grid{0.0, 1.0, 8};
    BrownianBundle b = gen_bundle(721, 722, grid, 1, 1, 1);
    RandomFieldU f = solve_spde(c, b, backward_B(b, [&c](double t, double* out) { c.phi(t, out); }), space,
                                SpdeScheme::theta_implicit);
    const std::string bin = tmp_file("field.bin");
    write_field_bin(bin, f);
    RandomFieldU r = read_field_bin(bin);
    CHECK(r.u == f.u);
    CHECK(r.ux == f.ux);
    CHECK(r.uxx == f.uxx);
    CHECK(r.space.J == 12);
    CHECK(r.grid.n_steps == 8);
    CHECK(r.b_seed == f.b_seed);
    std::remove(bin.c_str());

    const std::string csv = tmp_file("field.csv");
    write_field_csv(csv, f);
    const std::string text = read_text_file(csv);
    CHECK(text.substr(0, 8) == "t,x,u,ux");
    std::size_t rows = 0;
    for (char ch : text)
        if (ch == '\n') ++rows;
    CHECK(rows == 1u + 9u * 14u); // header + (N+1)(J+2)
    std::remove(csv.c_str());
}
