// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0

#include "tilewise/pruner.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include <json.hpp>

#include "tilewise/parallel.hpp"

namespace tilewise {
namespace {

using ordered_json = nlohmann::ordered_json;

struct TileRef {
    double score = 0.0;
    int layer = 0;  // position in the mask's layer list
    int tr = 0;
    int tc = 0;
    int count = 0;
};

void expand_elements(LayerMask& lm) {
    lm.elements = MaskMatrix(lm.grid.rows, lm.grid.cols, true);
    lm.deleted_elements = 0;
    for (int tr = 0; tr < lm.grid.tile_rows; ++tr) {
        for (int tc = 0; tc < lm.grid.tile_cols; ++tc) {
            if (lm.keep_tile[static_cast<std::size_t>(tr) * lm.grid.tile_cols + tc]) continue;
            const Tile& t = lm.grid.tile(tr, tc);
            for (int r = t.row0; r < t.row1; ++r)
                for (int c = t.col0; c < t.col1; ++c) lm.elements.set(r, c, false);
            lm.deleted_elements += static_cast<std::size_t>(t.count);
        }
    }
}

PruneMask prune_pool(std::span<const WeightTensor* const> tensors, std::span<const int> node_ids,
                     const PrunePlan& plan, TileShape shape) {
    if (plan.sparsity < 0.0 || plan.sparsity > 1.0)
        throw ConfigError("sparsity must be within [0, 1]");
    if (shape.a < 1 || shape.b < 1) throw ConfigError("tile shape must be at least 1x1");

    PruneMask mask;
    mask.plan = plan;
    mask.plan.tile = shape;
    mask.layers.resize(tensors.size());

    // Per-layer scoring is independent; the pool sort below is the only
    // serial step.
    parallel_for(tensors.size(), [&](std::size_t i) {
        LayerMask& lm = mask.layers[i];
        lm.node_id = node_ids[i];
        lm.grid = tile_scores(element_scores(*tensors[i], plan.criterion), shape);
        lm.keep_tile.assign(lm.grid.tiles.size(), 1);
    });

    std::size_t total_elements = 0;
    std::vector<TileRef> pool;
    for (std::size_t i = 0; i < mask.layers.size(); ++i) {
        const TileGrid& grid = mask.layers[i].grid;
        total_elements += static_cast<std::size_t>(grid.rows) * grid.cols;
        for (int tr = 0; tr < grid.tile_rows; ++tr)
            for (int tc = 0; tc < grid.tile_cols; ++tc) {
                const Tile& t = grid.tile(tr, tc);
                pool.push_back({t.mean, static_cast<int>(i), tr, tc, t.count});
            }
    }
    mask.total_elements = total_elements;

    // Ascending score; ties broken by (layer id, tile row, tile col) so
    // identical inputs give identical masks everywhere.
    std::sort(pool.begin(), pool.end(), [&](const TileRef& x, const TileRef& y) {
        return std::tie(x.score, mask.layers[x.layer].node_id, x.tr, x.tc) <
               std::tie(y.score, mask.layers[y.layer].node_id, y.tr, y.tc);
    });

    // Delete the longest prefix whose element total stays within budget;
    // under-deletes rather than overshooting the sparsity target.
    const double budget = plan.sparsity * static_cast<double>(total_elements);
    std::size_t deleted = 0;
    for (const TileRef& ref : pool) {
        if (static_cast<double>(deleted + ref.count) > budget) break;
        LayerMask& lm = mask.layers[ref.layer];
        lm.keep_tile[static_cast<std::size_t>(ref.tr) * lm.grid.tile_cols + ref.tc] = 0;
        deleted += static_cast<std::size_t>(ref.count);
    }
    mask.deleted_elements = deleted;

    parallel_for(mask.layers.size(), [&](std::size_t i) { expand_elements(mask.layers[i]); });
    return mask;
}

std::vector<const WeightTensor*> weighted_tensors(const WeightGraph& g, std::vector<int>& ids) {
    ids = g.weighted_ids();
    std::vector<const WeightTensor*> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(&*g.node(id).weight);
    return out;
}

}  // namespace

const LayerMask& PruneMask::layer(int node_id) const {
    for (const LayerMask& lm : layers)
        if (lm.node_id == node_id) return lm;
    throw ShapeError("mask has no layer for node " + std::to_string(node_id));
}

PruneMask tile_prune(const WeightGraph& g, const PrunePlan& p) {
    std::vector<int> ids;
    const auto tensors = weighted_tensors(g, ids);
    return prune_pool(tensors, ids, p, p.tile);
}

PruneMask unstructured_prune(const WeightGraph& g, PrunePlan p) {
    std::vector<int> ids;
    const auto tensors = weighted_tensors(g, ids);
    return prune_pool(tensors, ids, p, TileShape{1, 1});
}

PruneMask tile_prune_tensors(std::span<const WeightTensor> ws, const PrunePlan& p) {
    std::vector<const WeightTensor*> tensors;
    std::vector<int> ids;
    for (std::size_t i = 0; i < ws.size(); ++i) {
        tensors.push_back(&ws[i]);
        ids.push_back(static_cast<int>(i));
    }
    return prune_pool(tensors, ids, p, p.tile);
}

PruneMask unstructured_prune_tensors(std::span<const WeightTensor> ws, PrunePlan p) {
    p.tile = TileShape{1, 1};
    return tile_prune_tensors(ws, p);
}

WeightGraph apply_mask(const WeightGraph& g, const PruneMask& m) {
    const std::vector<int> ids = g.weighted_ids();
    if (ids.size() != m.layers.size())
        throw ShapeError("mask layer count does not match the graph's weighted layers");

    WeightGraph out = g;
    parallel_for(ids.size(), [&](std::size_t i) {
        const LayerMask& lm = m.layer(ids[i]);
        WeightTensor& w = *out.node(ids[i]).weight;
        if (lm.elements.rows != w.rows || lm.elements.cols != w.cols)
            throw ShapeError("mask shape does not match weights of node " + std::to_string(ids[i]));
        for (std::size_t k = 0; k < w.data.size(); ++k)
            if (lm.elements.keep[k] == 0) w.data[k] = 0.0f;
    });
    return out;
}

void save_mask(const PruneMask& m, const std::filesystem::path& path) {
    ordered_json j;
    j["format_version"] = 1;
    j["plan"] = {{"tile_a", m.plan.tile.a},
                 {"tile_b", m.plan.tile.b},
                 {"sparsity", m.plan.sparsity},
                 {"criterion", to_string(m.plan.criterion)}};
    ordered_json layers = ordered_json::array();
    for (const LayerMask& lm : m.layers) {
        ordered_json jl;
        jl["id"] = lm.node_id;
        jl["tile_rows"] = lm.grid.tile_rows;
        jl["tile_cols"] = lm.grid.tile_cols;
        std::vector<int> kept;
        for (std::size_t t = 0; t < lm.keep_tile.size(); ++t)
            if (lm.keep_tile[t]) kept.push_back(static_cast<int>(t));
        jl["kept"] = kept;
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write mask file " + path.string());
    f << j.dump(2) << '\n';
}

PruneMask load_mask(const WeightGraph& g, const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot read mask file " + path.string());
    ordered_json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("mask file " + path.string() + ": " + e.what());
    }

    PruneMask m;
    try {
        m.plan.tile = TileShape{j.at("plan").at("tile_a").get<int>(),
                                j.at("plan").at("tile_b").get<int>()};
        m.plan.sparsity = j.at("plan").at("sparsity").get<double>();
        m.plan.criterion = criterion_from_string(j.at("plan").at("criterion").get<std::string>());

        const std::vector<int> ids = g.weighted_ids();
        if (j.at("layers").size() != ids.size())
            throw ShapeError("mask layer count does not match the graph");
        m.layers.resize(ids.size());
        m.total_elements = 0;
        m.deleted_elements = 0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const ordered_json& jl = j.at("layers").at(i);
            const int id = jl.at("id").get<int>();
            if (id != ids[i]) throw ShapeError("mask layers out of order with the graph");
            LayerMask& lm = m.layers[i];
            lm.node_id = id;
            lm.grid = tile_scores(element_scores(*g.node(id).weight, m.plan.criterion), m.plan.tile);
            if (lm.grid.tile_rows != jl.at("tile_rows").get<int>() ||
                lm.grid.tile_cols != jl.at("tile_cols").get<int>())
                throw ShapeError("mask grid does not match node " + std::to_string(id));
            lm.keep_tile.assign(lm.grid.tiles.size(), 0);
            for (const auto& t : jl.at("kept")) {
                const std::size_t ti = t.get<std::size_t>();
                if (ti >= lm.keep_tile.size())
                    throw ShapeError("kept-tile index out of range in node " + std::to_string(id));
                lm.keep_tile[ti] = 1;
            }
            expand_elements(lm);
            m.total_elements += static_cast<std::size_t>(lm.grid.rows) * lm.grid.cols;
            m.deleted_elements += lm.deleted_elements;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("mask file " + path.string() + ": " + e.what());
    }
    return m;
}

}  // namespace tilewise
