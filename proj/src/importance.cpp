// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0

#include "tilewise/importance.hpp"

#include <algorithm>
#include <string>

#include "tilewise/pruner.hpp"

namespace tilewise {

const char* to_string(Criterion c) {
    return c == Criterion::l1 ? "l1" : "l2";
}

Criterion criterion_from_string(const std::string& s) {
    if (s == "l1") return Criterion::l1;
    if (s == "l2") return Criterion::l2;
    throw ConfigError("unknown criterion '" + s + "' (expected l1 or l2)");
}

ScoreMatrix element_scores(const WeightTensor& w, Criterion c) {
    w.check_consistent();
    ScoreMatrix s(w.rows, w.cols);
    for (std::size_t i = 0; i < w.data.size(); ++i) s.v[i] = score_of(w.data[i], c);
    return s;
}

TileGrid tile_scores(const ScoreMatrix& scores, TileShape t) {
    if (t.a < 1 || t.b < 1) throw ConfigError("tile shape must be at least 1x1");
    TileGrid grid;
    grid.rows = scores.rows;
    grid.cols = scores.cols;
    grid.shape = t;
    grid.tile_rows = (scores.rows + t.a - 1) / t.a;
    grid.tile_cols = (scores.cols + t.b - 1) / t.b;
    grid.tiles.reserve(static_cast<std::size_t>(grid.tile_rows) * grid.tile_cols);
    for (int tr = 0; tr < grid.tile_rows; ++tr) {
        for (int tc = 0; tc < grid.tile_cols; ++tc) {
            Tile tile;
            tile.row0 = tr * t.a;
            tile.row1 = std::min(scores.rows, tile.row0 + t.a);
            tile.col0 = tc * t.b;
            tile.col1 = std::min(scores.cols, tile.col0 + t.b);
            tile.count = (tile.row1 - tile.row0) * (tile.col1 - tile.col0);
            double sum = 0.0;
            for (int r = tile.row0; r < tile.row1; ++r)
                for (int c = tile.col0; c < tile.col1; ++c) sum += scores.at(r, c);
            tile.sum = sum;
            // Edge tiles divide by their true count, not a*b.
            tile.mean = tile.count > 0 ? sum / tile.count : 0.0;
            grid.tiles.push_back(tile);
        }
    }
    return grid;
}

double sum_sorted(std::vector<double> scores) {
    std::sort(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += s;
    return sum;
}

double pruning_loss(std::span<const ScoreMatrix> scores, std::span<const MaskMatrix> masks) {
    if (scores.size() != masks.size())
        throw ShapeError("pruning_loss: score and mask counts differ");
    std::vector<double> deleted;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        const ScoreMatrix& s = scores[k];
        const MaskMatrix& m = masks[k];
        if (s.rows != m.rows || s.cols != m.cols)
            throw ShapeError("pruning_loss: mask shape does not match scores");
        for (std::size_t i = 0; i < s.v.size(); ++i)
            if (m.keep[i] == 0) deleted.push_back(s.v[i]);
    }
    return sum_sorted(std::move(deleted));
}

LossReport loss_difference(std::span<const WeightTensor> weights, TileShape t, double sparsity,
                           Criterion c) {
    if (sparsity < 0.0 || sparsity > 1.0)
        throw ConfigError("sparsity must be within [0, 1]");

    PrunePlan plan{t, sparsity, c};
    const PruneMask tile_mask = tile_prune_tensors(weights, plan);

    std::vector<double> all_scores;
    std::vector<double> deleted_scores;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const ScoreMatrix s = element_scores(weights[k], c);
        const MaskMatrix& m = tile_mask.layers[k].elements;
        for (std::size_t i = 0; i < s.v.size(); ++i) {
            all_scores.push_back(s.v[i]);
            if (m.keep[i] == 0) deleted_scores.push_back(s.v[i]);
        }
    }

    LossReport report;
    report.loss = sum_sorted(std::move(deleted_scores));

    // Unstructured baseline at the same deleted-element count: the k smallest
    // scores overall. Matching cardinalities (rather than re-running at the
    // nominal sparsity) keeps loss >= baseline exact even when edge tiles
    // make the achieved sparsity fall short of the target.
    std::sort(all_scores.begin(), all_scores.end());
    const std::size_t k = tile_mask.deleted_elements;
    double baseline = 0.0;
    for (std::size_t i = 0; i < k; ++i) baseline += all_scores[i];
    report.baseline_loss = baseline;

    double total = 0.0;
    for (double s : all_scores) total += s;
    report.total_score = total;
    report.retained_score = total - report.loss;
    report.difference = report.loss - report.baseline_loss;
    report.sparsity_achieved = tile_mask.achieved_sparsity();
    return report;
}

}  // namespace tilewise
