// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// The layer DAG: on-disk model format, validation, parent/child analysis and
// the merged layer groups that must share one permutation.

#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tilewise/tensor.hpp"

namespace tilewise {

enum class LayerKind {
    linear,
    conv2d,
    elementwise,         // relu
    add,                 // residual sum
    pool,                // max pooling
    flatten,
    per_channel_affine,  // normalization folded to scale*x + shift per channel
};

const char* to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);  // throws ParseError

struct ConvMeta {
    int in_channels = 0;
    int out_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int stride = 1;
    int padding = 0;
};

struct PoolMeta {
    int kernel = 0;
    int stride = 0;  // 0 means same as kernel
};

struct LayerNode {
    int id = 0;
    LayerKind kind = LayerKind::elementwise;
    std::optional<WeightTensor> weight;  // linear/conv2d only
    std::optional<ConvMeta> conv;        // conv2d only
    std::optional<PoolMeta> pool;        // pool only
    int spatial_area = 0;                // flatten only: h*w at the flatten point
    std::vector<float> scale;            // per_channel_affine only
    std::vector<float> shift;            // per_channel_affine only

    bool weighted() const { return kind == LayerKind::linear || kind == LayerKind::conv2d; }
    // Output channel count seen by consumers, for weighted and affine nodes.
    int out_width() const;
};

// Pseudo-parent id used when ancestry reaches the raw model input.
inline constexpr int kInputPseudoId = -1;

struct WeightGraph {
    std::vector<LayerNode> nodes;                // manifest order; ids unique
    std::vector<std::pair<int, int>> edges;      // (producer id, consumer id)
    std::vector<int> input_ids;                  // nodes fed by the model input
    std::vector<int> output_ids;                 // nodes producing model output

    const LayerNode& node(int id) const;
    LayerNode& node(int id);
    bool has_node(int id) const;
    std::vector<int> weighted_ids() const;       // ascending
};

// Precomputed adjacency; graphs are immutable after load so this can be built
// once and shared freely between threads.
struct Adjacency {
    std::vector<std::vector<int>> producers_of;  // indexed like node ids via map
    std::vector<std::vector<int>> consumers_of;
    std::vector<int> topo;                       // node ids, inputs first, ties by ascending id

    static Adjacency build(const WeightGraph& g);  // throws TopologyError on a cycle
    const std::vector<int>& producers(const WeightGraph& g, int id) const;
    const std::vector<int>& consumers(const WeightGraph& g, int id) const;
};

// Manifest JSON + sibling .bin blob (little-endian f32, row-major, per-tensor
// byte offsets). load checks every structural invariant; save emits the
// canonical form so save -> load -> save is byte-identical.
WeightGraph load_graph(const std::filesystem::path& manifest_path);
void save_graph(const WeightGraph& g, const std::filesystem::path& manifest_path);
std::filesystem::path blob_path_for(const std::filesystem::path& manifest_path);

// Full invariant check on an in-memory graph; load_graph calls this.
void validate_graph(const WeightGraph& g);

// Nearest weighted ancestors of id, traversing through weightless nodes.
// An add contributes the union of its branches; ancestry that reaches the
// model input contributes kInputPseudoId.
std::set<int> effective_parents(const WeightGraph& g, int id);
std::set<int> effective_parents(const WeightGraph& g, const Adjacency& adj, int id);

// Nearest weighted descendants; reaches_output is set when some weightless
// path from id ends at a model output.
struct EffectiveChildren {
    std::set<int> children;
    bool reaches_output = false;
};
EffectiveChildren effective_children(const WeightGraph& g, const Adjacency& adj, int id);

// A maximal set of weighted layers forced to share one row permutation, with
// the weighted layers that must receive the inverse on their columns.
struct LayerGroup {
    std::vector<int> members;   // ascending ids
    std::vector<int> children;  // ascending ids, union over members
    bool forbidden = false;
    std::string forbid_reason;  // empty when transformable
};

// Collects every node's effective-parent set, merges intersecting sets to a
// fixed point, and emits one group per equivalence class of weighted nodes,
// ordered by smallest member. Groups touching the model boundary are marked
// forbidden: the merge class contains the input pseudo-parent, a member is
// fed by the raw input, a member produces (or feeds through weightless nodes
// into) a model output.
std::vector<LayerGroup> build_layer_groups(const WeightGraph& g);

}  // namespace tilewise
