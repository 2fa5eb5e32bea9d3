// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// One-shot permutation reparameterization: heuristic row-sort permutations
// per layer group, applied to member rows and recovered in children's column
// blocks, preserving the model function.

#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "tilewise/graph.hpp"
#include "tilewise/importance.hpp"

namespace tilewise {

// A bijection on row indices. forward[i] is the source row placed at
// destination i, so applying forward then inverse restores any matrix
// bit-identically.
struct Permutation {
    std::vector<int> forward;

    static Permutation identity(int n);
    int size() const { return static_cast<int>(forward.size()); }
    bool is_identity() const;
    Permutation inverse() const;
    void check_valid() const;  // throws InternalError unless a bijection
};

void permute_rows(WeightTensor& w, const Permutation& p);
// Reorders columns in contiguous blocks: destination block j takes source
// block forward[j]. cols must equal size() * block.
void permute_col_blocks(WeightTensor& w, const Permutation& p, int block);
void permute_vector(std::vector<float>& v, const Permutation& p);

enum class TransformMode { none, row, column };
const char* to_string(TransformMode m);
TransformMode transform_mode_from_string(const std::string& s);  // throws ConfigError

// One permutation shared by every member of a group; forbidden groups carry
// the identity.
struct GroupTransform {
    std::vector<int> members;
    std::vector<int> children;
    Permutation perm;
};

struct TransformPlan {
    TransformMode mode = TransformMode::none;
    std::vector<GroupTransform> groups;
};

// Descending sort of concatenated rows by mean importance, ties by original
// index. Tensors must agree on row count.
Permutation row_sort_permutation(const std::vector<const WeightTensor*>& ws, Criterion c);

// Row-mode heuristic for one group: concatenate member weights along columns
// and sort the rows of the concatenation.
Permutation build_trans(const LayerGroup& group, const WeightGraph& g, Criterion c);

// Column-mode counterpart: ranks the group's interface channels by the mean
// importance of the children's column blocks.
Permutation build_trans_columns(const LayerGroup& group, const WeightGraph& g, Criterion c);

// Builds the per-group permutations for the whole graph. mode none, and every
// forbidden group, map to the identity.
TransformPlan make_plan(const WeightGraph& g, Criterion c, TransformMode mode);

// Applies a plan: member rows (and bias) move by the group's permutation,
// attached per-channel affine vectors move with their parent, child columns
// move by the same map at the child's block granularity (conv: kernel_h *
// kernel_w, linear: cols / n). Topology and shapes are unchanged. Throws if
// the plan does not match the graph's groups.
WeightGraph apply_transform(const WeightGraph& g, const TransformPlan& plan);

// build groups -> build permutations -> apply. Returns the transformed graph
// and the plan that produced it.
std::pair<WeightGraph, TransformPlan> tiletrans(const WeightGraph& g, Criterion c, TransformMode mode);

// Same groups with inverted permutations; applying plan then inverse_plan
// restores all weights bit-identically.
TransformPlan inverse_plan(const TransformPlan& plan);

// Plan file: JSON {mode, groups:[{members, children, forward}]}.
void save_plan(const TransformPlan& plan, const std::filesystem::path& path);
TransformPlan load_plan(const std::filesystem::path& path);

}  // namespace tilewise
