// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Batch pipeline driver behind the CLI: load -> transform -> prune -> report.
// Kept in the library so tests can run file-level pipelines in-process.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tilewise/importance.hpp"
#include "tilewise/pruner.hpp"
#include "tilewise/reparam.hpp"
#include "tilewise/report.hpp"

namespace tilewise {

struct RunConfig {
    std::filesystem::path model;
    std::filesystem::path reference;  // verify: the original model
    std::filesystem::path report;
    std::filesystem::path mask_out;
    std::filesystem::path mask_in;
    std::filesystem::path model_out;
    std::filesystem::path plan_out;
    std::filesystem::path plan_in;
    TileShape tile{1, 1};
    std::vector<double> sparsities;
    Criterion criterion = Criterion::l1;
    TransformMode mode = TransformMode::none;
    std::uint64_t seed = 0;
    int eval_inputs = 100;
    double tolerance = 1e-5;
    int input_h = 8;  // spatial extent for random conv inputs
    int input_w = 8;
};

TileShape parse_tile_shape(const std::string& s);               // "AxB", throws ConfigError
std::vector<double> parse_sparsity_list(const std::string& s);  // "a,b,c" or "start:stop:step"

struct SweepResult {
    std::vector<ReportRow> rows;  // sparsity-major, untransformed before transformed
};

// For each sparsity: tile loss on the model as-is and, when a transform mode
// is set, on the reparameterized model, each against the unstructured
// baseline. Writes cfg.report when set. Sweep points run in parallel; rows
// come back in sparsity order regardless of completion order.
SweepResult run_sweep(const RunConfig& cfg);

struct TransformResult {
    TransformPlan plan;
    std::filesystem::path model_out;
};

// Loads, transforms (or replays cfg.plan_in), saves model-out and plan-out.
TransformResult run_transform(const RunConfig& cfg);

struct PruneResult {
    PruneMask mask;
    LossReport report;
};

// Prunes at a single sparsity; writes the mask JSON and the zeroed model.
// With cfg.mask_in the stored mask is applied instead of planning a new one.
PruneResult run_prune(const RunConfig& cfg);

struct VerifyResult {
    bool ok = false;
    double max_rel_err = 0.0;
    int inputs_checked = 0;
};

// Function-preservation harness on a model pair: identical architectures,
// outputs within cfg.tolerance relative error on random inputs.
VerifyResult run_verify(const RunConfig& cfg);

}  // namespace tilewise
