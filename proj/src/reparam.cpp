// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0

#include "tilewise/reparam.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace tilewise {
namespace {

using ordered_json = nlohmann::ordered_json;

// Input features of a child per interface channel. Contiguous because the
// lowered column order is channel-major; width validation guarantees the
// divisibility.
int child_block_size(const LayerNode& child, int n) {
    int per_channel_features;
    if (child.kind == LayerKind::conv2d) {
        internal_check(child.conv->in_channels % n == 0,
                       "conv child channels are not a multiple of the group width");
        per_channel_features = (child.conv->in_channels / n) * child.conv->kernel_h *
                               child.conv->kernel_w;
    } else {
        internal_check(child.weight->cols % n == 0,
                       "linear child columns are not a multiple of the group width");
        per_channel_features = child.weight->cols / n;
    }
    return per_channel_features;
}

Permutation sort_desc_by_mean(const std::vector<double>& mean) {
    Permutation p = Permutation::identity(static_cast<int>(mean.size()));
    std::stable_sort(p.forward.begin(), p.forward.end(),
                     [&](int a, int b) { return mean[static_cast<std::size_t>(a)] >
                                                mean[static_cast<std::size_t>(b)]; });
    return p;
}

void check_plan_matches(const std::vector<LayerGroup>& groups, const TransformPlan& plan) {
    if (groups.size() != plan.groups.size())
        throw DataError("plan group count does not match the graph");
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].members != plan.groups[i].members ||
            groups[i].children != plan.groups[i].children)
            throw DataError("plan groups do not match the graph's layer groups");
        if (groups[i].forbidden && !plan.groups[i].perm.is_identity())
            throw DataError("plan permutes a transformation-forbidden group (" +
                            groups[i].forbid_reason + ")");
    }
}

}  // namespace

Permutation Permutation::identity(int n) {
    Permutation p;
    p.forward.resize(static_cast<std::size_t>(n));
    std::iota(p.forward.begin(), p.forward.end(), 0);
    return p;
}

bool Permutation::is_identity() const {
    for (std::size_t i = 0; i < forward.size(); ++i)
        if (forward[i] != static_cast<int>(i)) return false;
    return true;
}

Permutation Permutation::inverse() const {
    check_valid();
    Permutation inv;
    inv.forward.resize(forward.size());
    for (std::size_t i = 0; i < forward.size(); ++i)
        inv.forward[static_cast<std::size_t>(forward[i])] = static_cast<int>(i);
    return inv;
}

void Permutation::check_valid() const {
    std::vector<std::uint8_t> seen(forward.size(), 0);
    for (int x : forward) {
        if (x < 0 || x >= size() || seen[static_cast<std::size_t>(x)])
            throw InternalError("permutation is not a bijection");
        seen[static_cast<std::size_t>(x)] = 1;
    }
}

void permute_rows(WeightTensor& w, const Permutation& p) {
    if (p.size() != w.rows) throw ShapeError("permutation size does not match row count");
    WeightTensor out(w.rows, w.cols);
    for (int i = 0; i < w.rows; ++i) {
        const int src = p.forward[static_cast<std::size_t>(i)];
        std::copy_n(w.data.begin() + static_cast<std::size_t>(src) * w.cols, w.cols,
                    out.data.begin() + static_cast<std::size_t>(i) * w.cols);
    }
    if (w.has_bias()) {
        out.bias = w.bias;
        permute_vector(out.bias, p);
    }
    w = std::move(out);
}

void permute_col_blocks(WeightTensor& w, const Permutation& p, int block) {
    if (block < 1 || w.cols != p.size() * block)
        throw ShapeError("column count does not split into permutation blocks");
    std::vector<float> row(static_cast<std::size_t>(w.cols));
    for (int r = 0; r < w.rows; ++r) {
        float* base = w.data.data() + static_cast<std::size_t>(r) * w.cols;
        for (int j = 0; j < p.size(); ++j)
            std::copy_n(base + static_cast<std::size_t>(p.forward[static_cast<std::size_t>(j)]) *
                                   block,
                        block, row.data() + static_cast<std::size_t>(j) * block);
        std::copy_n(row.data(), w.cols, base);
    }
}

void permute_vector(std::vector<float>& v, const Permutation& p) {
    if (static_cast<int>(v.size()) != p.size())
        throw ShapeError("permutation size does not match vector length");
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = v[static_cast<std::size_t>(p.forward[i])];
    v = std::move(out);
}

const char* to_string(TransformMode m) {
    switch (m) {
        case TransformMode::none: return "none";
        case TransformMode::row: return "row";
        case TransformMode::column: return "column";
    }
    throw InternalError("unhandled transform mode");
}

TransformMode transform_mode_from_string(const std::string& s) {
    if (s == "none") return TransformMode::none;
    if (s == "row") return TransformMode::row;
    if (s == "column") return TransformMode::column;
    throw ConfigError("unknown transform mode \"" + s + "\"");
}

Permutation row_sort_permutation(const std::vector<const WeightTensor*>& ws, Criterion c) {
    if (ws.empty()) throw ShapeError("no tensors to sort");
    const int rows = ws.front()->rows;
    std::size_t cols = 0;
    for (const WeightTensor* w : ws) {
        if (w->rows != rows) throw ShapeError("tensors to sort disagree on row count");
        cols += static_cast<std::size_t>(w->cols);
    }
    std::vector<double> mean(static_cast<std::size_t>(rows), 0.0);
    for (const WeightTensor* w : ws)
        for (int r = 0; r < rows; ++r) {
            double s = 0.0;
            for (int k = 0; k < w->cols; ++k) s += score_of(w->at(r, k), c);
            mean[static_cast<std::size_t>(r)] += s;
        }
    for (double& m : mean) m /= static_cast<double>(cols);
    return sort_desc_by_mean(mean);
}

Permutation build_trans(const LayerGroup& group, const WeightGraph& g, Criterion c) {
    std::vector<const WeightTensor*> ws;
    for (int m : group.members) ws.push_back(&*g.node(m).weight);
    return row_sort_permutation(ws, c);
}

Permutation build_trans_columns(const LayerGroup& group, const WeightGraph& g, Criterion c) {
    const int n = g.node(group.members.front()).weight->rows;
    if (group.children.empty()) return Permutation::identity(n);

    std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
    std::vector<double> count(static_cast<std::size_t>(n), 0.0);
    for (int id : group.children) {
        const LayerNode& child = g.node(id);
        const WeightTensor& w = *child.weight;
        const int block = child_block_size(child, n);
        for (int r = 0; r < w.rows; ++r)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < block; ++k) {
                    sum[static_cast<std::size_t>(j)] += score_of(w.at(r, j * block + k), c);
                    count[static_cast<std::size_t>(j)] += 1.0;
                }
    }
    for (int j = 0; j < n; ++j) sum[static_cast<std::size_t>(j)] /= count[static_cast<std::size_t>(j)];
    return sort_desc_by_mean(sum);
}

TransformPlan make_plan(const WeightGraph& g, Criterion c, TransformMode mode) {
    TransformPlan plan;
    plan.mode = mode;
    for (const LayerGroup& grp : build_layer_groups(g)) {
        GroupTransform gt;
        gt.members = grp.members;
        gt.children = grp.children;
        const int n = g.node(grp.members.front()).weight->rows;
        if (mode == TransformMode::none || grp.forbidden)
            gt.perm = Permutation::identity(n);
        else if (mode == TransformMode::row)
            gt.perm = build_trans(grp, g, c);
        else
            gt.perm = build_trans_columns(grp, g, c);
        plan.groups.push_back(std::move(gt));
    }
    return plan;
}

WeightGraph apply_transform(const WeightGraph& g, const TransformPlan& plan) {
    const std::vector<LayerGroup> groups = build_layer_groups(g);
    check_plan_matches(groups, plan);

    const Adjacency adj = Adjacency::build(g);
    WeightGraph out = g;
    for (const GroupTransform& gt : plan.groups) {
        gt.perm.check_valid();
        if (gt.perm.is_identity()) continue;
        const int n = gt.perm.size();

        // Member rows carry the permutation; their bias vectors ride along.
        for (int m : gt.members) {
            WeightTensor& w = *out.node(m).weight;
            if (w.rows != n) throw DataError("plan permutation does not fit group row count");
            permute_rows(w, gt.perm);
        }

        // Affine nodes parameterized over the group's interface follow it.
        const std::set<int> member_set(gt.members.begin(), gt.members.end());
        for (const LayerNode& node : g.nodes) {
            if (node.kind != LayerKind::per_channel_affine) continue;
            const std::set<int> parents = effective_parents(g, adj, node.id);
            const bool inside = !parents.empty() &&
                                std::includes(member_set.begin(), member_set.end(),
                                              parents.begin(), parents.end());
            if (!inside) continue;
            LayerNode& dst = out.node(node.id);
            internal_check(static_cast<int>(dst.scale.size()) == n,
                           "affine width disagrees with its parent group");
            permute_vector(dst.scale, gt.perm);
            permute_vector(dst.shift, gt.perm);
        }

        // Children undo it on their input features, block by block.
        for (int id : gt.children) {
            const LayerNode& child = g.node(id);
            permute_col_blocks(*out.node(id).weight, gt.perm, child_block_size(child, n));
        }
    }
    return out;
}

std::pair<WeightGraph, TransformPlan> tiletrans(const WeightGraph& g, Criterion c,
                                                TransformMode mode) {
    TransformPlan plan = make_plan(g, c, mode);
    WeightGraph out = apply_transform(g, plan);
    return {std::move(out), std::move(plan)};
}

TransformPlan inverse_plan(const TransformPlan& plan) {
    TransformPlan inv;
    inv.mode = plan.mode;
    for (const GroupTransform& gt : plan.groups)
        inv.groups.push_back({gt.members, gt.children, gt.perm.inverse()});
    return inv;
}

void save_plan(const TransformPlan& plan, const std::filesystem::path& path) {
    ordered_json j;
    j["format_version"] = 1;
    j["mode"] = to_string(plan.mode);
    ordered_json groups = ordered_json::array();
    for (const GroupTransform& gt : plan.groups) {
        ordered_json jg;
        jg["members"] = gt.members;
        jg["children"] = gt.children;
        jg["forward"] = gt.perm.forward;
        groups.push_back(std::move(jg));
    }
    j["groups"] = std::move(groups);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write plan file " + path.string());
    f << j.dump(2) << '\n';
}

TransformPlan load_plan(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot read plan file " + path.string());
    ordered_json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("plan file " + path.string() + ": " + e.what());
    }

    TransformPlan plan;
    try {
        if (j.at("format_version").get<int>() != 1)
            throw ParseError("unsupported plan format version");
        plan.mode = transform_mode_from_string(j.at("mode").get<std::string>());
        for (const auto& jg : j.at("groups")) {
            GroupTransform gt;
            gt.members = jg.at("members").get<std::vector<int>>();
            gt.children = jg.at("children").get<std::vector<int>>();
            gt.perm.forward = jg.at("forward").get<std::vector<int>>();
            auto sorted = gt.perm.forward;
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t i = 0; i < sorted.size(); ++i)
                if (sorted[i] != static_cast<int>(i))
                    throw ParseError("plan permutation is not a bijection");
            plan.groups.push_back(std::move(gt));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("plan file " + path.string() + ": " + e.what());
    }
    return plan;
}

}  // namespace tilewise
