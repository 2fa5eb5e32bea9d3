// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Global-threshold tile pruning: one score pool across all weighted layers.

#pragma once

#include <filesystem>
#include <span>

#include "tilewise/graph.hpp"
#include "tilewise/importance.hpp"

namespace tilewise {

struct PrunePlan {
    TileShape tile;
    double sparsity = 0.0;  // target fraction of zeroed elements, in [0,1]
    Criterion criterion = Criterion::l1;
};

struct LayerMask {
    int node_id = 0;
    TileGrid grid;
    std::vector<std::uint8_t> keep_tile;  // tile_rows * tile_cols, true = keep
    MaskMatrix elements;                  // tile mask expanded to element extent
    std::size_t deleted_elements = 0;
};

struct PruneMask {
    PrunePlan plan;
    std::vector<LayerMask> layers;  // one per weighted node, ascending id
    std::size_t total_elements = 0;
    std::size_t deleted_elements = 0;

    double achieved_sparsity() const {
        return total_elements == 0 ? 0.0 : static_cast<double>(deleted_elements) / total_elements;
    }
    const LayerMask& layer(int node_id) const;
};

// Pools every tile score from every weighted layer, sorts ascending with
// tie-break (layer id, tile row, tile col), and deletes the longest prefix
// whose cumulative element count stays within sparsity * total elements.
// Under-deletes on a partial fit, so achieved sparsity never exceeds the
// target and falls short by less than one tile's elements.
PruneMask tile_prune(const WeightGraph& g, const PrunePlan& p);

// tile_prune at shape 1x1; the plan's tile shape is ignored.
PruneMask unstructured_prune(const WeightGraph& g, PrunePlan p);

// Tensor-set variants used by the loss-difference objective and the
// brute-force search; node ids are indices into the span.
PruneMask tile_prune_tensors(std::span<const WeightTensor> ws, const PrunePlan& p);
PruneMask unstructured_prune_tensors(std::span<const WeightTensor> ws, PrunePlan p);

// Returns a copy of the graph with deleted elements set to exact zero and
// every kept value bit-identical. Biases are not pruned.
WeightGraph apply_mask(const WeightGraph& g, const PruneMask& m);

// Mask file: JSON {plan, per-layer kept-tile indices}.
void save_mask(const PruneMask& m, const std::filesystem::path& path);
// Rebuilds the full mask (grids, element expansion) against the graph.
PruneMask load_mask(const WeightGraph& g, const std::filesystem::path& path);

}  // namespace tilewise
