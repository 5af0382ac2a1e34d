#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fracshape/cli.hpp"
#include "fracshape/parallel.hpp"

using namespace fracshape;
using namespace fracshape::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("fracshape_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

RunConfig parse(const std::string& text, const std::string& command = {}) { return parse_config(text, command); }

RunOutcome run_text(const std::string& text, const fs::path& out) { return run(parse(text), out); }

std::string error_path(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, Defaults) {
    const auto c = parse(R"J({"command": "torsion"})J");
    EXPECT_EQ(c.grid.dim, 1);
    EXPECT_EQ(c.grid.nodes_per_axis, 16);
    EXPECT_EQ(c.grid.padding_cells, 2);
    EXPECT_EQ(std::get<IsoParams>(c.params).s, 0.5);
    EXPECT_EQ(c.solver.tol_grad, 1e-9);
    EXPECT_EQ(c.shape.c, 1.0);
    EXPECT_EQ(c.mask.text, "all");
}

TEST(Config, ToleranceDefaultFollowsP) {
    EXPECT_EQ(parse(R"J({"command": "torsion", "params": {"p": 3}})J").solver.tol_grad, 1e-7);
    EXPECT_EQ(parse(R"J({"command": "torsion", "params": {"p": 3}, "solver": {"tol_grad": 1e-5}})J").solver.tol_grad, 1e-5);
}

TEST(Config, AnisotropicParams) {
    const auto c = parse(R"J({"command": "aniso-check", "grid": {"dim": 2}, "params": {"s_vec": [0.5, 0.7], "p_vec": [2, 2]}})J");
    const auto& a = std::get<AnisoParams>(c.params);
    EXPECT_EQ(a.s_vec, (std::vector<double>{0.5, 0.7}));
    EXPECT_NE(error_path(R"J({"command": "aniso-check", "grid": {"dim": 2}, "params": {"s_vec": [0.5]}})J").find("params.s_vec"),
              std::string::npos);
}

TEST(Config, UnknownKeysNameTheirPath) {
    EXPECT_NE(error_path(R"J({"command": "torsion", "grid": {"pading_cells": 2}})J").find("grid.pading_cells"), std::string::npos);
    EXPECT_NE(error_path(R"J({"command": "torsion", "extra": 1})J").find("extra"), std::string::npos);
    EXPECT_NE(error_path(R"J({"command": "torsion", "solver": {"tol": 1}})J").find("solver.tol"), std::string::npos);
}

TEST(Config, TypeAndRangeErrors) {
    EXPECT_NE(error_path(R"J({"command": "torsion", "params": {"s": "half"}})J").find("params.s"), std::string::npos);
    EXPECT_NE(error_path(R"J({"command": "torsion", "params": {"s": 1.5}})J").find("params"), std::string::npos);
    EXPECT_NE(error_path(R"J({"command": "torsion", "grid": {"dim": 3}})J").find("grid"), std::string::npos);
    EXPECT_NE(error_path(R"J({"command": "sweep-s", "sweep": {"s_list": [0.5, 1.0]}})J").find("sweep.s_list"), std::string::npos);
    EXPECT_NE(error_path(R"J({"command": "bbm"})J").find("sweep.s_list"), std::string::npos);
    EXPECT_NE(error_path(R"J({"command": "torsion", "solver": {"step_rule": "newton"}})J").find("solver.step_rule"),
              std::string::npos);
    EXPECT_NE(error_path("{not json").find("malformed"), std::string::npos);
    EXPECT_NE(error_path(R"J({"command": "fly"})J").find("command"), std::string::npos);
}

TEST(Config, CommandMustMatchRequest) {
    EXPECT_THROW(parse(R"J({"command": "torsion"})J", "eigen"), ConfigError);
    EXPECT_EQ(parse(R"J({})J", "eigen").command, "eigen");
}

TEST(Config, RoundTrip) {
    const std::string text = R"J({"command": "optimize", "grid": {"dim": 2, "nodes_per_axis": 4, "padding_cells": 1},
        "params": {"s": 0.3, "p": 2.5, "kappa": 2}, "mask": "disk(0.3)", "initial_mask": [1,0,0,0, 0,0,0,0, 0,0,0,0, 0,0,0,1],
        "solver": {"step_rule": "backtracking", "beta": 0.3}, "shape": {"functional": "torsional_compliance", "c": 0.5,
        "method": "rearrange", "penalty": 0.5}})J";
    const auto a = parse(text);
    const auto b = parse_config(to_json(a));
    EXPECT_TRUE(a == b);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Masks, PredicatesAndCells) {
    auto g = build_grid(GridSpec{1, {0.0}, {1.0}, 10, 2});
    EXPECT_EQ(resolve_mask(MaskSource{}, g, "mask").count(), 10u);
    MaskSource half;
    half.text = "left-half";
    EXPECT_EQ(resolve_mask(half, g, "mask").count(), 5u);
    MaskSource empty;
    empty.text = "empty";
    EXPECT_TRUE(resolve_mask(empty, g, "mask").empty());
    MaskSource bad;
    bad.text = "triangle";
    EXPECT_THROW(resolve_mask(bad, g, "mask"), ConfigError);
    const auto c = parse(R"J({"command": "torsion", "grid": {"nodes_per_axis": 4}, "mask": [0, 1, 1, 0]})J");
    EXPECT_EQ(resolve_mask(c.mask, Grid(c.grid).spec() == g->spec() ? g : build_grid(c.grid), "mask").count(), 2u);
    EXPECT_THROW(resolve_mask(c.mask, g, "mask"), ConfigError);
}

TEST(Run, TorsionWritesOutputs) {
    const auto out = fresh_dir("torsion");
    const auto r = run_text(R"J({"command": "torsion", "grid": {"nodes_per_axis": 12}})J", out);
    EXPECT_EQ(r.code, ok) << r.message;
    const auto csv = slurp(out / "field.csv");
    EXPECT_EQ(csv.rfind("node_index,x,value\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
    const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    EXPECT_EQ(summary["command"], "torsion");
    EXPECT_TRUE(summary["converged"].get<bool>());
}

TEST(Run, EmptyMaskTorsionIsZeroButEigenIsAnError) {
    const auto out = fresh_dir("empty");
    EXPECT_EQ(run_text(R"J({"command": "torsion", "mask": "empty"})J", out).code, ok);
    EXPECT_EQ(run_text(R"J({"command": "eigen", "mask": "empty"})J", out).code, validation);
}

TEST(Run, GuardAndNonConvergenceCodes) {
    const auto out = fresh_dir("codes");
    EXPECT_EQ(run_text(R"J({"command": "optimize", "grid": {"nodes_per_axis": 24}, "shape": {"c": 0.5}})J", out).code, guard);
    EXPECT_EQ(run_text(R"J({"command": "torsion", "grid": {"nodes_per_axis": 64}, "solver": {"max_iter": 2}})J", out).code,
              nonconvergence);
}

TEST(Run, OptimizeWritesMaskAndHistory) {
    const auto out = fresh_dir("optimize");
    const auto r = run_text(R"J({"command": "optimize", "grid": {"nodes_per_axis": 8}, "shape": {"c": 0.5}})J", out);
    ASSERT_EQ(r.code, ok) << r.message;
    const auto mask = nlohmann::json::parse(slurp(out / "mask.json"));
    EXPECT_EQ(mask["cells"], (std::vector<int>{0, 0, 1, 1, 1, 1, 0, 0}));
    EXPECT_EQ(slurp(out / "history.csv").rfind("iter,cost,volume\n", 0), 0u);
}

TEST(Run, MaskFileRoundTrip) {
    const auto out = fresh_dir("maskfile");
    ASSERT_EQ(run_text(R"J({"command": "optimize", "grid": {"nodes_per_axis": 8}, "shape": {"c": 0.5}})J", out).code, ok);
    const auto path = (out / "mask.json").string();
    const auto again = fresh_dir("maskfile2");
    const std::string cfg = R"J({"command": "torsion", "grid": {"nodes_per_axis": 8}, "mask": {"file": ")J" + path + R"J("}})J";
    EXPECT_EQ(run_text(cfg, again).code, ok);
    const std::string wrong = R"J({"command": "torsion", "grid": {"nodes_per_axis": 9}, "mask": {"file": ")J" + path + R"J("}})J";
    EXPECT_EQ(run_text(wrong, again).code, validation);
}

TEST(Run, OutputsAreByteIdenticalAcrossRunsAndThreads) {
    const std::string cfg = R"J({"command": "eigen", "grid": {"dim": 2, "nodes_per_axis": 16}, "mask": "disk(0.4)"})J";
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b"), c = fresh_dir("det_c");
    set_threads(1);
    ASSERT_EQ(run_text(cfg, a).code, ok);
    ASSERT_EQ(run_text(cfg, b).code, ok);
    set_threads(4);
    ASSERT_EQ(run_text(cfg, c).code, ok);
    set_threads(0);
    EXPECT_EQ(slurp(a / "field.csv"), slurp(b / "field.csv"));
    EXPECT_EQ(slurp(a / "field.csv"), slurp(c / "field.csv"));
    EXPECT_EQ(slurp(a / "summary.json"), slurp(c / "summary.json"));
}

TEST(RunFile, ReportsErrorsOnStderr) {
    const auto dir = fresh_dir("runfile");
    std::ofstream(dir / "bad.json") << R"J({"command": "torsion", "grid": {"pading_cells": 1}})J";
    std::ostringstream err;
    EXPECT_EQ(run_file("torsion", (dir / "bad.json").string(), (dir / "out").string(), err), validation);
    EXPECT_EQ(err.str().rfind("ERROR 2: grid.pading_cells", 0), 0u);
    std::ostringstream err2;
    EXPECT_EQ(run_file("torsion", (dir / "missing.json").string(), (dir / "out").string(), err2), validation);
}

TEST(RunFile, SampleConfigsSucceed) {
    for (const auto& entry : fs::directory_iterator(FRACSHAPE_CONFIG_DIR)) {
        const auto cfg = nlohmann::json::parse(slurp(entry.path()));
        const auto out = fresh_dir("sample_" + entry.path().stem().string());
        std::ostringstream err;
        EXPECT_EQ(run_file(cfg["command"], entry.path().string(), out.string(), err), ok) << entry.path() << ": " << err.str();
    }
}
