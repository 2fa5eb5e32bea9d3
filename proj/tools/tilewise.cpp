// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// tilewise: tile pruning with one-shot permutation reparameterization.
// Subcommands: transform, prune, sweep, verify.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "tilewise/driver.hpp"
#include "tilewise/oracle.hpp"
#include "tilewise/report.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct CliOptions {
    std::string model;
    std::string reference;
    std::string report;
    std::string mask_out;
    std::string mask_in;
    std::string model_out;
    std::string plan_out;
    std::string plan_in;
    std::string tile = "1x1";
    std::string sparsity;
    std::string criterion = "l1";
    std::string transform = "none";
    std::uint64_t seed = 0;
    int inputs = 100;
    double tolerance = 1e-5;
    int input_h = 8;
    int input_w = 8;
};

tilewise::RunConfig to_run_config(const CliOptions& o) {
    tilewise::RunConfig cfg;
    cfg.model = o.model;
    cfg.reference = o.reference;
    cfg.report = o.report;
    cfg.mask_out = o.mask_out;
    cfg.mask_in = o.mask_in;
    cfg.model_out = o.model_out;
    cfg.plan_out = o.plan_out;
    cfg.plan_in = o.plan_in;
    cfg.tile = tilewise::parse_tile_shape(o.tile);
    if (!o.sparsity.empty()) cfg.sparsities = tilewise::parse_sparsity_list(o.sparsity);
    cfg.criterion = tilewise::criterion_from_string(o.criterion);
    cfg.mode = tilewise::transform_mode_from_string(o.transform);
    cfg.seed = o.seed;
    cfg.eval_inputs = o.inputs;
    cfg.tolerance = o.tolerance;
    cfg.input_h = o.input_h;
    cfg.input_w = o.input_w;
    return cfg;
}

std::string join_ids(const std::vector<int>& ids) {
    std::string out = "[";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(ids[i]);
    }
    out += ']';
    return out;
}

int cmd_transform(const CliOptions& o) {
    const tilewise::RunConfig cfg = to_run_config(o);
    const tilewise::TransformResult result = tilewise::run_transform(cfg);

    // Group-by-group status so skipped (forbidden) groups are visible.
    const tilewise::WeightGraph g = tilewise::load_graph(cfg.model);
    const auto groups = tilewise::build_layer_groups(g);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const char* status = groups[i].forbidden
                                 ? "skipped"
                                 : (result.plan.groups[i].perm.is_identity() ? "identity"
                                                                             : "permuted");
        std::printf("group %s children %s: %s", join_ids(groups[i].members).c_str(),
                    join_ids(groups[i].children).c_str(), status);
        if (groups[i].forbidden) std::printf(" (%s)", groups[i].forbid_reason.c_str());
        std::printf("\n");
    }
    if (!cfg.model_out.empty())
        std::printf("wrote %s\n", cfg.model_out.string().c_str());
    if (!cfg.plan_out.empty()) std::printf("wrote %s\n", cfg.plan_out.string().c_str());
    return 0;
}

int cmd_prune(const CliOptions& o) {
    const tilewise::RunConfig cfg = to_run_config(o);
    const tilewise::PruneResult result = tilewise::run_prune(cfg);
    std::printf("deleted %zu of %zu elements (sparsity %s)\n", result.mask.deleted_elements,
                result.mask.total_elements,
                tilewise::format_double(result.mask.achieved_sparsity()).c_str());
    std::printf("loss %s baseline %s difference %s\n",
                tilewise::format_double(result.report.loss).c_str(),
                tilewise::format_double(result.report.baseline_loss).c_str(),
                tilewise::format_double(result.report.difference).c_str());
    if (!cfg.model_out.empty()) std::printf("wrote %s\n", cfg.model_out.string().c_str());
    if (!cfg.mask_out.empty()) std::printf("wrote %s\n", cfg.mask_out.string().c_str());
    return 0;
}

int cmd_sweep(const CliOptions& o) {
    const tilewise::RunConfig cfg = to_run_config(o);
    const tilewise::SweepResult result = tilewise::run_sweep(cfg);
    if (cfg.report.empty())
        std::fputs(tilewise::render_report(result.rows).c_str(), stdout);
    else
        std::printf("wrote %zu rows to %s\n", result.rows.size(), cfg.report.string().c_str());
    return 0;
}

int cmd_verify(const CliOptions& o) {
    const tilewise::RunConfig cfg = to_run_config(o);
    const tilewise::VerifyResult result = tilewise::run_verify(cfg);
    std::printf("max relative error %s over %d inputs\n",
                tilewise::format_double(result.max_rel_err).c_str(), result.inputs_checked);
    if (!result.ok) {
        std::fprintf(stderr, "verify: outputs diverge beyond tolerance %s\n",
                     tilewise::format_double(cfg.tolerance).c_str());
        return kExitData;
    }
    std::printf("models agree within tolerance %s\n",
                tilewise::format_double(cfg.tolerance).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tile pruning on weight graphs, with function-preserving "
                 "permutation reparameterization"};
    app.require_subcommand(1);
    CliOptions o;

    const auto add_model = [&](CLI::App* sub) {
        sub->add_option("--model", o.model, "model manifest path")->required();
    };
    const auto add_prune_opts = [&](CLI::App* sub) {
        sub->add_option("--tile", o.tile, "tile shape AxB (default 1x1)");
        sub->add_option("--sparsity", o.sparsity, "sparsity list a,b,c or range start:stop:step")
            ->required();
        sub->add_option("--criterion", o.criterion, "importance criterion")
            ->check(CLI::IsMember({"l1", "l2"}));
        sub->add_option("--seed", o.seed, "base seed for stochastic steps");
    };

    CLI::App* transform = app.add_subcommand("transform", "reparameterize a model in place");
    add_model(transform);
    transform->add_option("--model-out", o.model_out, "path for the transformed model")
        ->required();
    transform->add_option("--transform", o.transform, "transform mode (default: row)")
        ->check(CLI::IsMember({"none", "row", "column"}));
    transform->add_option("--criterion", o.criterion, "importance criterion")
        ->check(CLI::IsMember({"l1", "l2"}));
    transform->add_option("--plan-out", o.plan_out, "write the permutation plan JSON");
    transform->add_option("--plan-in", o.plan_in, "replay a stored plan instead of planning");

    CLI::App* prune = app.add_subcommand("prune", "prune a model at one sparsity");
    add_model(prune);
    add_prune_opts(prune);
    prune->add_option("--mask-out", o.mask_out, "write the mask JSON");
    prune->add_option("--mask-in", o.mask_in, "apply a stored mask instead of planning");
    prune->add_option("--model-out", o.model_out, "path for the zeroed model");
    prune->get_option("--sparsity")->required(false);

    CLI::App* sweep = app.add_subcommand("sweep", "loss curves across sparsities");
    add_model(sweep);
    add_prune_opts(sweep);
    sweep->add_option("--transform", o.transform, "also report the reparameterized model")
        ->check(CLI::IsMember({"none", "row", "column"}));
    sweep->add_option("--report", o.report, "CSV output path (default: stdout)");

    CLI::App* verify = app.add_subcommand("verify", "check two models compute the same function");
    add_model(verify);
    verify->add_option("--reference", o.reference, "reference model manifest")->required();
    verify->add_option("--inputs", o.inputs, "number of random inputs");
    verify->add_option("--tolerance", o.tolerance, "max relative error");
    verify->add_option("--seed", o.seed, "base seed for input generation");
    verify->add_option("--input-h", o.input_h, "spatial input height");
    verify->add_option("--input-w", o.input_w, "spatial input width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    const std::string stage = app.get_subcommands().front()->get_name();
    if (transform->parsed() && transform->get_option("--transform")->count() == 0)
        o.transform = "row";
    try {
        if (transform->parsed()) return cmd_transform(o);
        if (prune->parsed()) {
            if (o.sparsity.empty() && o.mask_in.empty())
                throw tilewise::ConfigError("prune needs --sparsity or --mask-in");
            return cmd_prune(o);
        }
        if (sweep->parsed()) return cmd_sweep(o);
        if (verify->parsed()) return cmd_verify(o);
        throw tilewise::InternalError("no subcommand dispatched");
    } catch (const tilewise::ConfigError& e) {
        std::fprintf(stderr, "tilewise %s: %s\n", stage.c_str(), e.what());
        return kExitConfig;
    } catch (const tilewise::DataError& e) {
        std::fprintf(stderr, "tilewise %s: %s\n", stage.c_str(), e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "tilewise %s: internal error: %s\n", stage.c_str(), e.what());
        return kExitInternal;
    }
}
