// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0

#include "tilewise/driver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tilewise/oracle.hpp"
#include "tilewise/parallel.hpp"

namespace tilewise {
namespace {

std::vector<WeightTensor> weighted_copies(const WeightGraph& g) {
    std::vector<WeightTensor> out;
    for (int id : g.weighted_ids()) out.push_back(*g.node(id).weight);
    return out;
}

// Loss report for a concrete mask, with the unstructured baseline matched to
// the mask's deleted-element count.
LossReport report_for_mask(const WeightGraph& g, const PruneMask& mask) {
    std::vector<ScoreMatrix> scores;
    std::vector<MaskMatrix> masks;
    std::vector<double> all;
    for (const LayerMask& lm : mask.layers) {
        scores.push_back(element_scores(*g.node(lm.node_id).weight, mask.plan.criterion));
        masks.push_back(lm.elements);
        for (double s : scores.back().v) all.push_back(s);
    }
    LossReport r;
    r.loss = pruning_loss(scores, masks);
    std::sort(all.begin(), all.end());
    r.total_score = sum_sorted(all);
    r.retained_score = r.total_score - r.loss;
    double baseline = 0.0;
    for (std::size_t i = 0; i < mask.deleted_elements; ++i) baseline += all[i];
    r.baseline_loss = baseline;
    r.difference = r.loss - r.baseline_loss;
    r.sparsity_achieved = mask.achieved_sparsity();
    return r;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    f << text;
}

void check_same_architecture(const WeightGraph& a, const WeightGraph& b) {
    const auto shape_mismatch = [] {
        return DataError("models do not share an architecture");
    };
    if (a.nodes.size() != b.nodes.size()) throw shape_mismatch();
    auto ids = [](const WeightGraph& g) {
        std::vector<int> v;
        for (const LayerNode& n : g.nodes) v.push_back(n.id);
        std::sort(v.begin(), v.end());
        return v;
    };
    if (ids(a) != ids(b)) throw shape_mismatch();
    for (const LayerNode& na : a.nodes) {
        const LayerNode& nb = b.node(na.id);
        if (na.kind != nb.kind) throw shape_mismatch();
        if (na.weighted() &&
            (na.weight->rows != nb.weight->rows || na.weight->cols != nb.weight->cols ||
             na.weight->has_bias() != nb.weight->has_bias()))
            throw shape_mismatch();
        if (na.conv.has_value() != nb.conv.has_value()) throw shape_mismatch();
        if (na.conv &&
            (na.conv->in_channels != nb.conv->in_channels ||
             na.conv->out_channels != nb.conv->out_channels ||
             na.conv->kernel_h != nb.conv->kernel_h || na.conv->kernel_w != nb.conv->kernel_w ||
             na.conv->stride != nb.conv->stride || na.conv->padding != nb.conv->padding))
            throw shape_mismatch();
        if (na.pool.has_value() != nb.pool.has_value()) throw shape_mismatch();
        if (na.pool && (na.pool->kernel != nb.pool->kernel || na.pool->stride != nb.pool->stride))
            throw shape_mismatch();
        if (na.spatial_area != nb.spatial_area) throw shape_mismatch();
        if (na.scale.size() != nb.scale.size()) throw shape_mismatch();
    }
    auto sorted_edges = [](const WeightGraph& g) {
        auto e = g.edges;
        std::sort(e.begin(), e.end());
        return e;
    };
    auto sorted_ids = [](std::vector<int> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    if (sorted_edges(a) != sorted_edges(b) ||
        sorted_ids(a.input_ids) != sorted_ids(b.input_ids) ||
        sorted_ids(a.output_ids) != sorted_ids(b.output_ids))
        throw shape_mismatch();
}

}  // namespace

TileShape parse_tile_shape(const std::string& s) {
    const std::size_t pos = s.find('x');
    if (pos == std::string::npos || pos == 0 || pos + 1 >= s.size())
        throw ConfigError("tile shape must look like AxB");
    try {
        const int a = std::stoi(s.substr(0, pos));
        const int b = std::stoi(s.substr(pos + 1));
        if (a < 1 || b < 1) throw ConfigError("tile dimensions must be positive");
        return TileShape{a, b};
    } catch (const std::logic_error&) {
        throw ConfigError("tile shape must look like AxB");
    }
}

std::vector<double> parse_sparsity_list(const std::string& s) {
    std::vector<double> out;
    try {
        if (s.find(':') != std::string::npos) {
            // start:stop:step, inclusive of stop up to rounding.
            std::size_t p1 = s.find(':');
            std::size_t p2 = s.find(':', p1 + 1);
            if (p2 == std::string::npos) throw ConfigError("range must be start:stop:step");
            const double start = std::stod(s.substr(0, p1));
            const double stop = std::stod(s.substr(p1 + 1, p2 - p1 - 1));
            const double step = std::stod(s.substr(p2 + 1));
            if (step <= 0.0 || stop < start) throw ConfigError("bad sparsity range");
            for (int i = 0;; ++i) {
                const double v = start + step * i;
                if (v > stop + 1e-12) break;
                out.push_back(std::min(v, stop));
            }
        } else {
            std::size_t start = 0;
            while (start <= s.size()) {
                std::size_t end = s.find(',', start);
                if (end == std::string::npos) end = s.size();
                out.push_back(std::stod(s.substr(start, end - start)));
                start = end + 1;
            }
        }
    } catch (const std::logic_error&) {
        throw ConfigError("bad sparsity list \"" + s + "\"");
    }
    if (out.empty()) throw ConfigError("no sparsity values given");
    for (double v : out)
        if (v < 0.0 || v > 1.0) throw ConfigError("sparsity values must be within [0, 1]");
    return out;
}

SweepResult run_sweep(const RunConfig& cfg) {
    if (cfg.sparsities.empty()) throw ConfigError("sweep needs at least one sparsity");
    const WeightGraph g = load_graph(cfg.model);
    const std::vector<WeightTensor> base = weighted_copies(g);

    std::vector<WeightTensor> transformed;
    if (cfg.mode != TransformMode::none)
        transformed = weighted_copies(tiletrans(g, cfg.criterion, cfg.mode).first);

    const std::string model_name = cfg.model.stem().string();
    const auto make_row = [&](double sparsity, const std::vector<WeightTensor>& ws,
                              bool is_transformed) {
        ReportRow row;
        row.model = model_name;
        row.layer_set = "all";
        row.tile_a = cfg.tile.a;
        row.tile_b = cfg.tile.b;
        row.sparsity = sparsity;
        row.criterion = cfg.criterion;
        row.report = loss_difference(ws, cfg.tile, sparsity, cfg.criterion);
        row.transformed = is_transformed;
        return row;
    };

    // One slot per sweep point keeps the output order fixed while the points
    // themselves run concurrently.
    std::vector<std::vector<ReportRow>> slots(cfg.sparsities.size());
    parallel_for(cfg.sparsities.size(), [&](std::size_t i) {
        slots[i].push_back(make_row(cfg.sparsities[i], base, false));
        if (!transformed.empty()) slots[i].push_back(make_row(cfg.sparsities[i], transformed, true));
    });

    SweepResult result;
    for (auto& slot : slots)
        for (ReportRow& row : slot) result.rows.push_back(std::move(row));
    if (!cfg.report.empty()) write_text_file(cfg.report, render_report(result.rows));
    return result;
}

TransformResult run_transform(const RunConfig& cfg) {
    const WeightGraph g = load_graph(cfg.model);
    TransformResult result;
    result.plan = cfg.plan_in.empty() ? make_plan(g, cfg.criterion, cfg.mode)
                                      : load_plan(cfg.plan_in);
    const WeightGraph out = apply_transform(g, result.plan);
    if (!cfg.model_out.empty()) {
        save_graph(out, cfg.model_out);
        result.model_out = cfg.model_out;
    }
    if (!cfg.plan_out.empty()) save_plan(result.plan, cfg.plan_out);
    return result;
}

PruneResult run_prune(const RunConfig& cfg) {
    const WeightGraph g = load_graph(cfg.model);
    PruneResult result;
    if (!cfg.mask_in.empty()) {
        result.mask = load_mask(g, cfg.mask_in);
    } else {
        if (cfg.sparsities.size() != 1)
            throw ConfigError("prune needs exactly one sparsity");
        result.mask = tile_prune(g, PrunePlan{cfg.tile, cfg.sparsities.front(), cfg.criterion});
    }
    result.report = report_for_mask(g, result.mask);
    if (!cfg.model_out.empty()) save_graph(apply_mask(g, result.mask), cfg.model_out);
    if (!cfg.mask_out.empty()) save_mask(result.mask, cfg.mask_out);
    return result;
}

VerifyResult run_verify(const RunConfig& cfg) {
    if (cfg.reference.empty()) throw ConfigError("verify needs a reference model");
    if (cfg.eval_inputs < 1) throw ConfigError("verify needs at least one input");
    const WeightGraph model = load_graph(cfg.model);
    const WeightGraph reference = load_graph(cfg.reference);
    check_same_architecture(model, reference);

    std::vector<double> worst(static_cast<std::size_t>(cfg.eval_inputs), 0.0);
    parallel_for(static_cast<std::size_t>(cfg.eval_inputs), [&](std::size_t i) {
        const EvalInput input =
            random_eval_input(reference, cfg.seed + i, cfg.input_h, cfg.input_w);
        const std::vector<Activation> got = evaluate(model, input);
        const std::vector<Activation> want = evaluate(reference, input);
        internal_check(got.size() == want.size(), "output counts diverged");
        double err = 0.0;
        for (std::size_t o = 0; o < got.size(); ++o) {
            if (got[o].size() != want[o].size())
                throw DataError("models disagree on output shapes");
            for (std::size_t k = 0; k < got[o].data.size(); ++k) {
                const double a = got[o].data[k];
                const double b = want[o].data[k];
                const double scale = std::max({std::fabs(a), std::fabs(b), 1e-6});
                err = std::max(err, std::fabs(a - b) / scale);
            }
        }
        worst[i] = err;
    });

    VerifyResult result;
    result.inputs_checked = cfg.eval_inputs;
    for (double e : worst) result.max_rel_err = std::max(result.max_rel_err, e);
    result.ok = result.max_rel_err <= cfg.tolerance;
    return result;
}

}  // namespace tilewise
