// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Importance scores, tile grids, and pruning-loss accounting.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "tilewise/tensor.hpp"

namespace tilewise {

// Magnitude-based importance criteria. Every criterion maps a weight to a
// non-negative real; data-dependent criteria are out of scope but everything
// downstream takes the criterion as a parameter so new kinds slot in here.
enum class Criterion { l1, l2 };

const char* to_string(Criterion c);
Criterion criterion_from_string(const std::string& s);  // throws ConfigError

inline double score_of(float w, Criterion c) {
    const double d = static_cast<double>(w);
    return c == Criterion::l1 ? (d < 0 ? -d : d) : d * d;
}

struct TileShape {
    int a = 1;  // tile height
    int b = 1;  // tile width
};

struct Tile {
    int row0 = 0, row1 = 0;  // [row0, row1)
    int col0 = 0, col1 = 0;  // [col0, col1)
    int count = 0;           // actual element count; edge tiles may be short
    double sum = 0.0;
    double mean = 0.0;
};

// Exact partition of a matrix into a*b tiles, row-major by (tile row, tile col).
struct TileGrid {
    int rows = 0, cols = 0;
    TileShape shape;
    int tile_rows = 0, tile_cols = 0;
    std::vector<Tile> tiles;

    const Tile& tile(int tr, int tc) const { return tiles[static_cast<std::size_t>(tr) * tile_cols + tc]; }
};

struct LossReport {
    double total_score = 0.0;
    double retained_score = 0.0;
    double loss = 0.0;           // total - retained = sum of deleted scores
    double baseline_loss = 0.0;  // unstructured loss at the same deleted-element count
    double difference = 0.0;     // loss - baseline_loss, >= 0
    double sparsity_achieved = 0.0;
};

ScoreMatrix element_scores(const WeightTensor& w, Criterion c);

// Per-tile mean importance. Edge tiles divide by their true element count.
TileGrid tile_scores(const ScoreMatrix& scores, TileShape t);

// Sums a multiset of scores in ascending order. Losses computed this way
// depend only on the multiset, so any reparameterization that moves elements
// around without changing them leaves every loss figure bit-identical.
double sum_sorted(std::vector<double> scores);

// Sum of scores at deleted positions across the set. Throws ShapeError if
// masks and scores disagree in shape or count.
double pruning_loss(std::span<const ScoreMatrix> scores, std::span<const MaskMatrix> masks);

// Runs tile pruning at sparsity s over the tensor set, then unstructured
// pruning deleting exactly as many elements, and reports both losses and
// their gap (the tile-vs-unstructured objective).
LossReport loss_difference(std::span<const WeightTensor> weights, TileShape t, double sparsity,
                           Criterion c);

}  // namespace tilewise
