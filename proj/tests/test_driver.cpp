// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "tilewise/driver.hpp"
#include "tilewise/oracle.hpp"

using namespace tilewise;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TILEWISE_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::filesystem::path save_fixture(const std::filesystem::path& dir, const std::string& name,
                                   const WeightGraph& g) {
    const auto path = dir / name;
    save_graph(g, path);
    return path;
}

}  // namespace

TEST_CASE("tile shapes parse as AxB") {
    CHECK(parse_tile_shape("4x4").a == 4);
    CHECK(parse_tile_shape("4x4").b == 4);
    CHECK(parse_tile_shape("2x8").a == 2);
    CHECK(parse_tile_shape("2x8").b == 8);
    CHECK(parse_tile_shape("1x1").a == 1);

    for (const char* bad : {"x", "4", "4x", "x4", "0x2", "-1x2", "axb", ""})
        CHECK_THROWS_AS(parse_tile_shape(bad), ConfigError);
}

TEST_CASE("sparsity lists parse as csv or ranges") {
    CHECK(parse_sparsity_list("0.5") == std::vector<double>{0.5});
    CHECK(parse_sparsity_list("0.1,0.2") == std::vector<double>{0.1, 0.2});

    const auto quarters = parse_sparsity_list("0:1:0.25");
    REQUIRE(quarters.size() == 5);
    CHECK(quarters.front() == 0.0);
    CHECK(quarters.back() == 1.0);

    const auto odds = parse_sparsity_list("0.1:0.9:0.2");
    REQUIRE(odds.size() == 5);
    CHECK(odds.back() == 0.9);  // clamped to stop despite accumulated rounding

    for (const char* bad : {"", "a", "1.5", "-0.1", "0.9:0.1:0.1", "0:1:0", "0:1"})
        CHECK_THROWS_AS(parse_sparsity_list(bad), ConfigError);
}

TEST_CASE("sweeps pin the extremes to zero difference") {
    const auto dir = fixtures::fresh_temp_dir("sweep");
    const auto model = save_fixture(dir, "model.json", fixtures::synthetic_chain(4, 16, 0.05, 3));

    RunConfig cfg;
    cfg.model = model;
    cfg.tile = {2, 2};
    cfg.sparsities = {0.0, 0.5, 1.0};
    cfg.mode = TransformMode::row;
    const SweepResult result = run_sweep(cfg);

    // Sparsity-major, untransformed before transformed.
    REQUIRE(result.rows.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(result.rows[i].sparsity == cfg.sparsities[i / 2]);
        CHECK(result.rows[i].transformed == (i % 2 == 1));
        CHECK(result.rows[i].model == "model");
        CHECK(result.rows[i].layer_set == "all");
    }

    for (int i : {0, 1}) {  // s = 0: nothing deleted
        CHECK(result.rows[i].report.loss == 0.0);
        CHECK(result.rows[i].report.difference == 0.0);
    }
    for (int i : {4, 5}) {  // s = 1: everything deleted
        CHECK(result.rows[i].report.loss == result.rows[i].report.total_score);
        CHECK(result.rows[i].report.difference == 0.0);
    }
    // The transform moves values without changing the multiset.
    CHECK(result.rows[4].report.loss == result.rows[5].report.loss);
    std::filesystem::remove_all(dir);
}

TEST_CASE("1x1 sweeps never beat the baseline by definition") {
    const auto dir = fixtures::fresh_temp_dir("sweep11");
    const auto model = save_fixture(dir, "m.json", fixtures::synthetic_chain(3, 12, 0.1, 9));

    RunConfig cfg;
    cfg.model = model;
    cfg.tile = {1, 1};
    cfg.sparsities = {0.1, 0.4, 0.8};
    for (const ReportRow& row : run_sweep(cfg).rows) CHECK(row.report.difference == 0.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("the transform lowers tile loss on row-structured weights") {
    const auto dir = fixtures::fresh_temp_dir("sweepgain");
    const auto model = save_fixture(dir, "m.json", fixtures::synthetic_chain(6, 32, 0.05, 17));

    RunConfig cfg;
    cfg.model = model;
    cfg.tile = {2, 2};
    cfg.sparsities = {0.6};
    cfg.mode = TransformMode::row;
    const SweepResult result = run_sweep(cfg);
    REQUIRE(result.rows.size() == 2);
    CHECK(result.rows[1].report.loss <= result.rows[0].report.loss);
    CHECK(result.rows[1].report.difference <= result.rows[0].report.difference);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sweep reports are written and parse back losslessly") {
    const auto dir = fixtures::fresh_temp_dir("csv");
    const auto model = save_fixture(dir, "m.json", fixtures::synthetic_chain(3, 16, 0.1, 5));

    RunConfig cfg;
    cfg.model = model;
    cfg.tile = {4, 4};
    cfg.sparsities = {0.25, 0.75};
    cfg.mode = TransformMode::row;
    cfg.report = dir / "out.csv";
    const SweepResult result = run_sweep(cfg);

    const std::string text = slurp(cfg.report);
    CHECK(text == render_report(result.rows));

    const auto parsed = parse_report(text);
    REQUIRE(parsed.size() == result.rows.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].model == result.rows[i].model);
        CHECK(parsed[i].tile_a == result.rows[i].tile_a);
        CHECK(parsed[i].tile_b == result.rows[i].tile_b);
        CHECK(parsed[i].sparsity == result.rows[i].sparsity);
        CHECK(parsed[i].criterion == result.rows[i].criterion);
        CHECK(parsed[i].transformed == result.rows[i].transformed);
        // bitwise: shortest round-trip formatting
        CHECK(parsed[i].report.loss == result.rows[i].report.loss);
        CHECK(parsed[i].report.baseline_loss == result.rows[i].report.baseline_loss);
        CHECK(parsed[i].report.difference == result.rows[i].report.difference);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("doubles render with shortest round-trip formatting") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, 2.0, 123456789.123, 0.0}) {
        CAPTURE(v);
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(0.1) == "0.1");
    CHECK_THROWS_AS(parse_double("abc"), ParseError);
    CHECK_THROWS_AS(report_row_from_csv("too,few,fields"), ParseError);
}

TEST_CASE("transform mode none copies the model byte-for-byte") {
    const auto dir = fixtures::fresh_temp_dir("tnone");
    const auto model = save_fixture(dir, "in.json", fixtures::alexnet_like(false, 23));

    RunConfig cfg;
    cfg.model = model;
    cfg.model_out = dir / "out.json";
    cfg.mode = TransformMode::none;
    run_transform(cfg);

    CHECK(slurp(dir / "in.json") == slurp(dir / "out.json"));
    CHECK(slurp(blob_path_for(dir / "in.json")) == slurp(blob_path_for(dir / "out.json")));
    std::filesystem::remove_all(dir);
}

TEST_CASE("row transforms touch exactly the interior of a chain") {
    const auto dir = fixtures::fresh_temp_dir("trow");
    const auto model = save_fixture(dir, "in.json", fixtures::chain_linears(4, 8, true, 29));

    RunConfig cfg;
    cfg.model = model;
    cfg.model_out = dir / "out.json";
    cfg.mode = TransformMode::row;
    const TransformResult result = run_transform(cfg);

    // Linears sit at ids 0, 2, 4, 6; only 2 and 4 may move.
    int moved = 0;
    for (const GroupTransform& gt : result.plan.groups) {
        if (!gt.perm.is_identity()) {
            ++moved;
            CHECK((gt.members == std::vector<int>{2} || gt.members == std::vector<int>{4}));
        }
    }
    CHECK(moved == 2);

    RunConfig v;
    v.model = cfg.model_out;
    v.reference = model;
    v.eval_inputs = 20;
    const VerifyResult ver = run_verify(v);
    CHECK(ver.ok);
    CHECK(ver.inputs_checked == 20);
    std::filesystem::remove_all(dir);
}

TEST_CASE("stored plans replay to identical bytes") {
    const auto dir = fixtures::fresh_temp_dir("replay");
    const auto model = save_fixture(dir, "in.json", fixtures::resnet_like(false, 37));

    RunConfig first;
    first.model = model;
    first.model_out = dir / "out1.json";
    first.plan_out = dir / "plan.json";
    first.mode = TransformMode::row;
    run_transform(first);

    RunConfig second;
    second.model = model;
    second.model_out = dir / "out2.json";
    second.plan_in = dir / "plan.json";
    run_transform(second);

    CHECK(slurp(dir / "out1.json") == slurp(dir / "out2.json"));
    CHECK(slurp(blob_path_for(dir / "out1.json")) == slurp(blob_path_for(dir / "out2.json")));
    std::filesystem::remove_all(dir);
}

TEST_CASE("pruning writes a mask that reapplies identically") {
    const auto dir = fixtures::fresh_temp_dir("prune");
    const WeightGraph g = fixtures::synthetic_chain(4, 16, 0.1, 41);
    const auto model = save_fixture(dir, "m.json", g);

    RunConfig cfg;
    cfg.model = model;
    cfg.tile = {2, 2};
    cfg.sparsities = {0.5};
    cfg.mask_out = dir / "mask.json";
    cfg.model_out = dir / "pruned.json";
    const PruneResult planned = run_prune(cfg);
    CHECK(planned.report.difference >= 0.0);
    CHECK(planned.mask.achieved_sparsity() <= 0.5);

    // The zeroed model honors the mask and keeps surviving bits.
    const WeightGraph pruned = load_graph(cfg.model_out);
    for (const LayerMask& lm : planned.mask.layers) {
        const WeightTensor& before = *g.node(lm.node_id).weight;
        const WeightTensor& after = *pruned.node(lm.node_id).weight;
        for (int r = 0; r < before.rows; ++r)
            for (int c = 0; c < before.cols; ++c) {
                if (lm.elements.kept(r, c))
                    CHECK(after.at(r, c) == before.at(r, c));
                else
                    CHECK(after.at(r, c) == 0.0f);
            }
    }

    RunConfig replay;
    replay.model = model;
    replay.mask_in = dir / "mask.json";
    replay.model_out = dir / "pruned2.json";
    const PruneResult reapplied = run_prune(replay);
    CHECK(reapplied.report.loss == planned.report.loss);
    CHECK(reapplied.report.baseline_loss == planned.report.baseline_loss);
    CHECK(slurp(blob_path_for(dir / "pruned.json")) == slurp(blob_path_for(dir / "pruned2.json")));
    std::filesystem::remove_all(dir);
}

TEST_CASE("file-level and in-process pipelines agree bit-for-bit") {
    const auto dir = fixtures::fresh_temp_dir("pipe");
    const WeightGraph g = fixtures::alexnet_like(false, 43);
    const auto model = save_fixture(dir, "m.json", g);

    // File-level: transform, then prune the transformed model.
    RunConfig t;
    t.model = model;
    t.model_out = dir / "t.json";
    t.mode = TransformMode::row;
    t.criterion = Criterion::l2;
    run_transform(t);

    RunConfig p;
    p.model = dir / "t.json";
    p.tile = {4, 4};
    p.sparsities = {0.6};
    p.criterion = Criterion::l2;
    p.model_out = dir / "file.json";
    run_prune(p);

    // In-process on the same graph.
    const WeightGraph transformed = tiletrans(g, Criterion::l2, TransformMode::row).first;
    const PruneMask mask = tile_prune(transformed, PrunePlan{{4, 4}, 0.6, Criterion::l2});
    save_graph(apply_mask(transformed, mask), dir / "mem.json");

    CHECK(slurp(dir / "file.json") == slurp(dir / "mem.json"));
    CHECK(slurp(blob_path_for(dir / "file.json")) == slurp(blob_path_for(dir / "mem.json")));
    std::filesystem::remove_all(dir);
}

TEST_CASE("verify rejects models with different architectures") {
    const auto dir = fixtures::fresh_temp_dir("arch");
    const auto a = save_fixture(dir, "a.json", fixtures::alexnet_like(false, 47));
    const auto b = save_fixture(dir, "b.json", fixtures::resnet_like(false, 47));

    RunConfig cfg;
    cfg.model = a;
    cfg.reference = b;
    cfg.eval_inputs = 1;
    CHECK_THROWS_AS(run_verify(cfg), DataError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("verify flags genuine divergence") {
    const auto dir = fixtures::fresh_temp_dir("diverge");
    WeightGraph g = fixtures::alexnet_like(false, 53);
    const auto ref = save_fixture(dir, "ref.json", g);
    // Shift the final layer's bias: no downstream relu can mask it.
    g.node(19).weight->bias[0] += 0.5f;
    const auto bad = save_fixture(dir, "bad.json", g);

    RunConfig cfg;
    cfg.model = bad;
    cfg.reference = ref;
    cfg.eval_inputs = 10;
    const VerifyResult result = run_verify(cfg);
    CHECK_FALSE(result.ok);
    CHECK(result.max_rel_err > 1e-5);
    std::filesystem::remove_all(dir);
}

TEST_CASE("the command line maps error classes to exit codes") {
    const auto dir = fixtures::fresh_temp_dir("cli");
    const auto model =
        save_fixture(dir, "model.json", fixtures::synthetic_chain(4, 16, 0.1, 59));
    const std::string m = " --model \"" + model.string() + "\"";

    CHECK(run_cli("") == 2);                                  // missing subcommand
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("sweep --sparsity 0.5" + m + " --tile 0x2") == 2);
    CHECK(run_cli("sweep --sparsity 0.5 --model /no/such/file.json") == 3);
    CHECK(run_cli("sweep --sparsity 0.5 --no-such-flag" + m) == 2);
    CHECK(run_cli("prune" + m) == 2);                         // neither sparsity nor mask
    CHECK(run_cli("sweep --sparsity 0.5 --tile 2x2" + m) == 0);

    const std::string out = (dir / "t.json").string();
    CHECK(run_cli("transform" + m + " --model-out \"" + out + "\"") == 0);
    CHECK(run_cli("verify --model \"" + out + "\" --reference \"" + model.string() +
                  "\" --inputs 10") == 0);

    // A genuinely different model fails verification with the data exit code.
    WeightGraph g = load_graph(model);
    g.node(0).weight->at(0, 0) += 1.0f;
    const auto bad = save_fixture(dir, "bad.json", g);
    CHECK(run_cli("verify --model \"" + bad.string() + "\" --reference \"" + model.string() +
                  "\" --inputs 10") == 3);
    std::filesystem::remove_all(dir);
}

TEST_CASE("fixed-seed sweeps write byte-identical reports") {
    const auto dir = fixtures::fresh_temp_dir("repeat");
    const auto model = save_fixture(dir, "m.json", fixtures::alexnet_like(false, 61));
    const std::string base = "sweep --model \"" + model.string() +
                             "\" --sparsity 0.1:0.9:0.2 --tile 4x4 --transform row --criterion l2";

    CHECK(run_cli(base + " --report \"" + (dir / "r1.csv").string() + "\"") == 0);
    CHECK(run_cli(base + " --report \"" + (dir / "r2.csv").string() + "\"") == 0);
    const std::string r1 = slurp(dir / "r1.csv");
    CHECK(r1 == slurp(dir / "r2.csv"));
    CHECK(r1.find("model,layer_set,tile_a,tile_b,sparsity,criterion,loss") == 0);
    CHECK(parse_report(r1).size() == 10);  // 5 sparsities x {plain, transformed}
    std::filesystem::remove_all(dir);
}
