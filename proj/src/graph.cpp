// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0

#include "tilewise/graph.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace tilewise {
namespace {

using ordered_json = nlohmann::ordered_json;

int index_of(const WeightGraph& g, int id) {
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        if (g.nodes[i].id == id) return static_cast<int>(i);
    throw TopologyError("unknown node id " + std::to_string(id));
}

void append_f32(std::string& blob, const std::vector<float>& v) {
    for (float x : v) {
        const auto u = std::bit_cast<std::uint32_t>(x);
        blob.push_back(static_cast<char>(u & 0xff));
        blob.push_back(static_cast<char>((u >> 8) & 0xff));
        blob.push_back(static_cast<char>((u >> 16) & 0xff));
        blob.push_back(static_cast<char>((u >> 24) & 0xff));
    }
}

std::vector<float> read_f32(const std::string& blob, std::size_t offset, std::size_t count,
                            int node_id) {
    const std::size_t bytes = count * 4;
    if (offset > blob.size() || blob.size() - offset < bytes)
        throw ShapeError("blob is too short for the tensor of node " + std::to_string(node_id));
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto* p = reinterpret_cast<const unsigned char*>(blob.data() + offset + i * 4);
        const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                                (static_cast<std::uint32_t>(p[1]) << 8) |
                                (static_cast<std::uint32_t>(p[2]) << 16) |
                                (static_cast<std::uint32_t>(p[3]) << 24);
        out[i] = std::bit_cast<float>(u);
    }
    return out;
}

// Simple union-find over dense slots; path halving plus union by smallest
// root keeps class representatives deterministic.
struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
    }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

bool contains(const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

// Channel width of each node's output where statically determinable;
// -1 when it depends on the runtime input.
std::vector<int> propagate_widths(const WeightGraph& g, const Adjacency& adj) {
    std::vector<int> width(g.nodes.size(), -1);
    for (int id : adj.topo) {
        const LayerNode& n = g.node(id);
        const std::vector<int>& prods = adj.producers(g, id);
        int in_width = -1;
        for (int p : prods) {
            const int w = width[static_cast<std::size_t>(index_of(g, p))];
            if (w < 0) continue;
            if (in_width >= 0 && in_width != w)
                throw TopologyError("branches joining at node " + std::to_string(id) +
                                    " have widths " + std::to_string(in_width) + " and " +
                                    std::to_string(w));
            in_width = w;
        }
        int out = -1;
        switch (n.kind) {
            case LayerKind::linear:
                if (in_width >= 0 && in_width != n.weight->cols)
                    throw TopologyError("node " + std::to_string(id) + " expects width " +
                                        std::to_string(n.weight->cols) + " but is fed width " +
                                        std::to_string(in_width));
                out = n.weight->rows;
                break;
            case LayerKind::conv2d:
                if (in_width >= 0 && in_width != n.conv->in_channels)
                    throw TopologyError("node " + std::to_string(id) + " expects " +
                                        std::to_string(n.conv->in_channels) +
                                        " channels but is fed " + std::to_string(in_width));
                out = n.weight->rows;
                break;
            case LayerKind::per_channel_affine:
                if (in_width >= 0 && in_width != static_cast<int>(n.scale.size()))
                    throw TopologyError("node " + std::to_string(id) + " scales " +
                                        std::to_string(n.scale.size()) +
                                        " channels but is fed " + std::to_string(in_width));
                out = static_cast<int>(n.scale.size());
                break;
            case LayerKind::flatten:
                out = in_width >= 0 ? in_width * n.spatial_area : -1;
                break;
            case LayerKind::elementwise:
            case LayerKind::add:
            case LayerKind::pool:
                out = in_width;
                break;
        }
        width[static_cast<std::size_t>(index_of(g, id))] = out;
    }
    return width;
}

}  // namespace

const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::linear: return "linear";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::elementwise: return "elementwise";
        case LayerKind::add: return "add";
        case LayerKind::pool: return "pool";
        case LayerKind::flatten: return "flatten";
        case LayerKind::per_channel_affine: return "per_channel_affine";
    }
    throw InternalError("unhandled layer kind");
}

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "linear") return LayerKind::linear;
    if (s == "conv2d") return LayerKind::conv2d;
    if (s == "elementwise") return LayerKind::elementwise;
    if (s == "add") return LayerKind::add;
    if (s == "pool") return LayerKind::pool;
    if (s == "flatten") return LayerKind::flatten;
    if (s == "per_channel_affine") return LayerKind::per_channel_affine;
    throw ParseError("unknown layer kind \"" + s + "\"");
}

int LayerNode::out_width() const {
    if (weighted()) return weight->rows;
    if (kind == LayerKind::per_channel_affine) return static_cast<int>(scale.size());
    return 0;
}

const LayerNode& WeightGraph::node(int id) const {
    return nodes[static_cast<std::size_t>(index_of(*this, id))];
}

LayerNode& WeightGraph::node(int id) {
    return nodes[static_cast<std::size_t>(index_of(*this, id))];
}

bool WeightGraph::has_node(int id) const {
    for (const LayerNode& n : nodes)
        if (n.id == id) return true;
    return false;
}

std::vector<int> WeightGraph::weighted_ids() const {
    std::vector<int> out;
    for (const LayerNode& n : nodes)
        if (n.weighted()) out.push_back(n.id);
    std::sort(out.begin(), out.end());
    return out;
}

Adjacency Adjacency::build(const WeightGraph& g) {
    Adjacency a;
    a.producers_of.resize(g.nodes.size());
    a.consumers_of.resize(g.nodes.size());
    for (const auto& [src, dst] : g.edges) {
        a.consumers_of[static_cast<std::size_t>(index_of(g, src))].push_back(dst);
        a.producers_of[static_cast<std::size_t>(index_of(g, dst))].push_back(src);
    }
    for (auto& v : a.producers_of) std::sort(v.begin(), v.end());
    for (auto& v : a.consumers_of) std::sort(v.begin(), v.end());

    // Kahn's algorithm with an ascending-id ready set: the topological order
    // is a pure function of the graph, never of edge insertion order.
    std::map<int, std::size_t> remaining;
    std::set<int> ready;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const std::size_t deg = a.producers_of[i].size();
        if (deg == 0)
            ready.insert(g.nodes[i].id);
        else
            remaining[g.nodes[i].id] = deg;
    }
    while (!ready.empty()) {
        const int id = *ready.begin();
        ready.erase(ready.begin());
        a.topo.push_back(id);
        for (int c : a.consumers_of[static_cast<std::size_t>(index_of(g, id))]) {
            auto it = remaining.find(c);
            if (--it->second == 0) {
                remaining.erase(it);
                ready.insert(c);
            }
        }
    }
    if (a.topo.size() != g.nodes.size()) throw TopologyError("graph contains a cycle");
    return a;
}

const std::vector<int>& Adjacency::producers(const WeightGraph& g, int id) const {
    return producers_of[static_cast<std::size_t>(index_of(g, id))];
}

const std::vector<int>& Adjacency::consumers(const WeightGraph& g, int id) const {
    return consumers_of[static_cast<std::size_t>(index_of(g, id))];
}

std::filesystem::path blob_path_for(const std::filesystem::path& manifest_path) {
    std::filesystem::path p = manifest_path;
    p.replace_extension(".bin");
    return p;
}

void validate_graph(const WeightGraph& g) {
    if (g.nodes.empty()) throw TopologyError("graph has no nodes");

    std::unordered_set<int> ids;
    for (const LayerNode& n : g.nodes) {
        if (n.id < 0) throw TopologyError("node ids must be non-negative");
        if (!ids.insert(n.id).second)
            throw TopologyError("duplicate node id " + std::to_string(n.id));

        const bool has_weight = n.weight.has_value();
        if (n.weighted() != has_weight)
            throw ShapeError("node " + std::to_string(n.id) +
                             (has_weight ? " carries an unexpected weight tensor"
                                         : " is missing its weight tensor"));
        if ((n.kind == LayerKind::conv2d) != n.conv.has_value())
            throw ShapeError("conv metadata mismatch on node " + std::to_string(n.id));
        if ((n.kind == LayerKind::pool) != n.pool.has_value())
            throw ShapeError("pool metadata mismatch on node " + std::to_string(n.id));

        if (has_weight) n.weight->check_consistent();
        switch (n.kind) {
            case LayerKind::linear:
                if (n.weight->rows < 1 || n.weight->cols < 1)
                    throw ShapeError("linear node " + std::to_string(n.id) + " is empty");
                break;
            case LayerKind::conv2d: {
                const ConvMeta& c = *n.conv;
                if (c.in_channels < 1 || c.out_channels < 1 || c.kernel_h < 1 || c.kernel_w < 1 ||
                    c.stride < 1 || c.padding < 0)
                    throw ShapeError("bad conv metadata on node " + std::to_string(n.id));
                if (n.weight->rows != c.out_channels ||
                    n.weight->cols != c.in_channels * c.kernel_h * c.kernel_w)
                    throw ShapeError("conv weight shape of node " + std::to_string(n.id) +
                                     " does not match its metadata");
                break;
            }
            case LayerKind::pool:
                if (n.pool->kernel < 1 || n.pool->stride < 0)
                    throw ShapeError("bad pool metadata on node " + std::to_string(n.id));
                break;
            case LayerKind::flatten:
                if (n.spatial_area < 1)
                    throw ShapeError("flatten node " + std::to_string(n.id) +
                                     " needs a positive spatial area");
                break;
            case LayerKind::per_channel_affine:
                if (n.scale.empty() || n.scale.size() != n.shift.size())
                    throw ShapeError("affine node " + std::to_string(n.id) +
                                     " needs matching scale and shift vectors");
                break;
            case LayerKind::elementwise:
            case LayerKind::add:
                break;
        }
    }

    for (const auto& [src, dst] : g.edges) {
        if (!ids.count(src) || !ids.count(dst))
            throw TopologyError("edge " + std::to_string(src) + " -> " + std::to_string(dst) +
                                " references an unknown node");
        if (src == dst) throw TopologyError("self edge on node " + std::to_string(src));
    }
    {
        auto sorted = g.edges;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw TopologyError("duplicate edge in graph");
    }

    if (g.input_ids.empty()) throw TopologyError("graph declares no inputs");
    if (g.output_ids.empty()) throw TopologyError("graph declares no outputs");
    for (int id : g.input_ids)
        if (!ids.count(id)) throw TopologyError("unknown input id " + std::to_string(id));
    for (int id : g.output_ids)
        if (!ids.count(id)) throw TopologyError("unknown output id " + std::to_string(id));
    {
        auto in = g.input_ids;
        std::sort(in.begin(), in.end());
        if (std::adjacent_find(in.begin(), in.end()) != in.end())
            throw TopologyError("duplicate input id");
        auto out = g.output_ids;
        std::sort(out.begin(), out.end());
        if (std::adjacent_find(out.begin(), out.end()) != out.end())
            throw TopologyError("duplicate output id");
    }

    const Adjacency adj = Adjacency::build(g);  // cycle check

    for (const LayerNode& n : g.nodes) {
        const std::size_t feeds =
            adj.producers(g, n.id).size() + (contains(g.input_ids, n.id) ? 1 : 0);
        if (n.kind == LayerKind::add) {
            if (feeds < 2)
                throw TopologyError("add node " + std::to_string(n.id) +
                                    " needs at least two inputs");
        } else if (feeds != 1) {
            throw TopologyError("node " + std::to_string(n.id) + " has " + std::to_string(feeds) +
                                " inputs, expected exactly 1");
        }
    }

    // Everything must be reachable from the model input.
    {
        std::set<int> seen(g.input_ids.begin(), g.input_ids.end());
        std::vector<int> stack(seen.begin(), seen.end());
        while (!stack.empty()) {
            const int id = stack.back();
            stack.pop_back();
            for (int c : adj.consumers(g, id))
                if (seen.insert(c).second) stack.push_back(c);
        }
        for (const LayerNode& n : g.nodes)
            if (!seen.count(n.id))
                throw TopologyError("node " + std::to_string(n.id) +
                                    " is unreachable from the model input");
    }

    // Nodes fed directly by the model input must agree on its channel count.
    int input_width = -1;
    for (int id : g.input_ids) {
        const LayerNode& n = g.node(id);
        int expects = -1;
        if (n.kind == LayerKind::linear) expects = n.weight->cols;
        if (n.kind == LayerKind::conv2d) expects = n.conv->in_channels;
        if (n.kind == LayerKind::per_channel_affine) expects = static_cast<int>(n.scale.size());
        if (expects < 0) continue;
        if (input_width >= 0 && input_width != expects)
            throw TopologyError("input consumers disagree on the input width (" +
                                std::to_string(input_width) + " vs " + std::to_string(expects) +
                                ")");
        input_width = expects;
    }

    propagate_widths(g, adj);
}

WeightGraph load_graph(const std::filesystem::path& manifest_path) {
    std::ifstream mf(manifest_path, std::ios::binary);
    if (!mf) throw DataError("cannot read manifest " + manifest_path.string());
    ordered_json j;
    try {
        mf >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest " + manifest_path.string() + ": " + e.what());
    }

    std::string blob;
    {
        std::ifstream bf(blob_path_for(manifest_path), std::ios::binary);
        if (!bf) throw DataError("cannot read blob " + blob_path_for(manifest_path).string());
        std::ostringstream ss;
        ss << bf.rdbuf();
        blob = ss.str();
    }

    WeightGraph g;
    try {
        if (j.at("format_version").get<int>() != 1)
            throw ParseError("unsupported manifest format version");
        for (const auto& jn : j.at("nodes")) {
            LayerNode n;
            n.id = jn.at("id").get<int>();
            n.kind = layer_kind_from_string(jn.at("kind").get<std::string>());
            switch (n.kind) {
                case LayerKind::linear:
                case LayerKind::conv2d: {
                    WeightTensor w(jn.at("rows").get<int>(), jn.at("cols").get<int>());
                    w.data = read_f32(blob, jn.at("weight_offset").get<std::size_t>(), w.size(),
                                      n.id);
                    if (jn.contains("bias_offset"))
                        w.bias = read_f32(blob, jn.at("bias_offset").get<std::size_t>(),
                                          static_cast<std::size_t>(w.rows), n.id);
                    n.weight = std::move(w);
                    if (n.kind == LayerKind::conv2d) {
                        const ordered_json& m = jn.at("meta");
                        n.conv = ConvMeta{m.at("in_channels").get<int>(),
                                          m.at("out_channels").get<int>(),
                                          m.at("kernel_h").get<int>(),
                                          m.at("kernel_w").get<int>(),
                                          m.at("stride").get<int>(),
                                          m.at("padding").get<int>()};
                    }
                    break;
                }
                case LayerKind::pool: {
                    const ordered_json& m = jn.at("meta");
                    n.pool = PoolMeta{m.at("kernel").get<int>(), m.at("stride").get<int>()};
                    break;
                }
                case LayerKind::flatten:
                    n.spatial_area = jn.at("meta").at("spatial_area").get<int>();
                    break;
                case LayerKind::per_channel_affine: {
                    const int rows = jn.at("rows").get<int>();
                    if (jn.at("cols").get<int>() != 1)
                        throw ShapeError("affine node " + std::to_string(n.id) +
                                         " must have cols = 1");
                    n.scale = read_f32(blob, jn.at("weight_offset").get<std::size_t>(),
                                       static_cast<std::size_t>(rows), n.id);
                    n.shift = read_f32(blob, jn.at("bias_offset").get<std::size_t>(),
                                       static_cast<std::size_t>(rows), n.id);
                    break;
                }
                case LayerKind::elementwise:
                case LayerKind::add:
                    break;
            }
            g.nodes.push_back(std::move(n));
        }
        for (const auto& je : j.at("edges")) {
            if (!je.is_array() || je.size() != 2)
                throw ParseError("edges must be [src, dst] pairs");
            g.edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
        }
        g.input_ids = j.at("inputs").get<std::vector<int>>();
        g.output_ids = j.at("outputs").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest " + manifest_path.string() + ": " + e.what());
    }

    validate_graph(g);
    return g;
}

void save_graph(const WeightGraph& g, const std::filesystem::path& manifest_path) {
    // Canonical form: nodes by ascending id, edges and boundary lists sorted,
    // blob offsets assigned in node order with weight before bias. A reload
    // and re-save of the result is byte-identical.
    WeightGraph canon = g;
    std::sort(canon.nodes.begin(), canon.nodes.end(),
              [](const LayerNode& a, const LayerNode& b) { return a.id < b.id; });
    std::sort(canon.edges.begin(), canon.edges.end());
    std::sort(canon.input_ids.begin(), canon.input_ids.end());
    std::sort(canon.output_ids.begin(), canon.output_ids.end());

    std::string blob;
    ordered_json nodes = ordered_json::array();
    for (const LayerNode& n : canon.nodes) {
        ordered_json jn;
        jn["id"] = n.id;
        jn["kind"] = to_string(n.kind);
        switch (n.kind) {
            case LayerKind::linear:
            case LayerKind::conv2d:
                jn["rows"] = n.weight->rows;
                jn["cols"] = n.weight->cols;
                if (n.kind == LayerKind::conv2d) {
                    const ConvMeta& c = *n.conv;
                    jn["meta"] = {{"in_channels", c.in_channels}, {"out_channels", c.out_channels},
                                  {"kernel_h", c.kernel_h},       {"kernel_w", c.kernel_w},
                                  {"stride", c.stride},           {"padding", c.padding}};
                }
                jn["weight_offset"] = blob.size();
                append_f32(blob, n.weight->data);
                if (n.weight->has_bias()) {
                    jn["bias_offset"] = blob.size();
                    append_f32(blob, n.weight->bias);
                }
                break;
            case LayerKind::pool:
                jn["meta"] = {{"kernel", n.pool->kernel}, {"stride", n.pool->stride}};
                break;
            case LayerKind::flatten:
                jn["meta"] = {{"spatial_area", n.spatial_area}};
                break;
            case LayerKind::per_channel_affine:
                jn["rows"] = static_cast<int>(n.scale.size());
                jn["cols"] = 1;
                jn["weight_offset"] = blob.size();
                append_f32(blob, n.scale);
                jn["bias_offset"] = blob.size();
                append_f32(blob, n.shift);
                break;
            case LayerKind::elementwise:
            case LayerKind::add:
                break;
        }
        nodes.push_back(std::move(jn));
    }

    ordered_json j;
    j["format_version"] = 1;
    j["nodes"] = std::move(nodes);
    ordered_json edges = ordered_json::array();
    for (const auto& [src, dst] : canon.edges) edges.push_back({src, dst});
    j["edges"] = std::move(edges);
    j["inputs"] = canon.input_ids;
    j["outputs"] = canon.output_ids;

    std::ofstream mf(manifest_path, std::ios::binary);
    if (!mf) throw DataError("cannot write manifest " + manifest_path.string());
    mf << j.dump(2) << '\n';
    std::ofstream bf(blob_path_for(manifest_path), std::ios::binary);
    if (!bf) throw DataError("cannot write blob " + blob_path_for(manifest_path).string());
    bf.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

std::set<int> effective_parents(const WeightGraph& g, const Adjacency& adj, int id) {
    if (!g.has_node(id)) throw TopologyError("unknown node id " + std::to_string(id));
    std::set<int> out;
    std::set<int> visited;
    std::vector<int> stack;

    if (contains(g.input_ids, id)) out.insert(kInputPseudoId);
    for (int p : adj.producers(g, id)) stack.push_back(p);

    while (!stack.empty()) {
        const int n = stack.back();
        stack.pop_back();
        if (!visited.insert(n).second) continue;
        if (g.node(n).weighted()) {
            out.insert(n);
            continue;
        }
        if (contains(g.input_ids, n)) out.insert(kInputPseudoId);
        for (int p : adj.producers(g, n)) stack.push_back(p);
    }
    return out;
}

std::set<int> effective_parents(const WeightGraph& g, int id) {
    return effective_parents(g, Adjacency::build(g), id);
}

EffectiveChildren effective_children(const WeightGraph& g, const Adjacency& adj, int id) {
    if (!g.has_node(id)) throw TopologyError("unknown node id " + std::to_string(id));
    EffectiveChildren out;
    std::set<int> visited;
    std::vector<int> stack;

    if (contains(g.output_ids, id)) out.reaches_output = true;
    for (int c : adj.consumers(g, id)) stack.push_back(c);

    while (!stack.empty()) {
        const int n = stack.back();
        stack.pop_back();
        if (!visited.insert(n).second) continue;
        if (g.node(n).weighted()) {
            out.children.insert(n);
            continue;
        }
        if (contains(g.output_ids, n)) out.reaches_output = true;
        for (int c : adj.consumers(g, n)) stack.push_back(c);
    }
    return out;
}

std::vector<LayerGroup> build_layer_groups(const WeightGraph& g) {
    const Adjacency adj = Adjacency::build(g);
    const std::vector<int> weighted = g.weighted_ids();

    // Union-find slots: one per weighted node plus one for the input
    // pseudo-parent at the last slot.
    std::unordered_map<int, int> slot;
    for (std::size_t i = 0; i < weighted.size(); ++i) slot[weighted[i]] = static_cast<int>(i);
    const int input_slot = static_cast<int>(weighted.size());
    slot[kInputPseudoId] = input_slot;
    UnionFind uf(weighted.size() + 1);

    // Merge every node's effective-parent set: two layers feeding the same
    // consumer must share one permutation, so they land in one class.
    for (const LayerNode& n : g.nodes) {
        const std::set<int> parents = effective_parents(g, adj, n.id);
        int first = -1;
        for (int p : parents) {
            const int s = slot.at(p);
            if (first < 0)
                first = s;
            else
                uf.unite(first, s);
        }
    }

    std::map<int, LayerGroup> by_root;  // keyed by class root for determinism
    for (int id : weighted) by_root[uf.find(slot.at(id))].members.push_back(id);

    const int input_root = uf.find(input_slot);
    std::vector<LayerGroup> groups;
    for (auto& [root, grp] : by_root) {
        std::sort(grp.members.begin(), grp.members.end());

        std::set<int> children;
        bool feeds_output = false;
        bool fed_by_input = false;
        for (int m : grp.members) {
            const EffectiveChildren ec = effective_children(g, adj, m);
            children.insert(ec.children.begin(), ec.children.end());
            feeds_output = feeds_output || ec.reaches_output;
            fed_by_input = fed_by_input || contains(g.input_ids, m);
        }
        grp.children.assign(children.begin(), children.end());

        // A transform would leak outside the model boundary in these cases,
        // so the group must keep the identity permutation.
        const int rows = g.node(grp.members.front()).weight->rows;
        bool bad_blocks = false;
        for (int ch : grp.children) {
            const LayerNode& child = g.node(ch);
            const int features = child.kind == LayerKind::conv2d ? child.conv->in_channels
                                                                 : child.weight->cols;
            bad_blocks = bad_blocks || features % rows != 0;
        }

        if (root == input_root) {
            grp.forbidden = true;
            grp.forbid_reason = "merged with the model input";
        } else if (fed_by_input) {
            grp.forbidden = true;
            grp.forbid_reason = "member is fed by the model input";
        } else if (feeds_output) {
            grp.forbidden = true;
            grp.forbid_reason = "member feeds the model output";
        } else if (bad_blocks) {
            grp.forbidden = true;
            grp.forbid_reason = "child input features do not split into member blocks";
        }

        for (int m : grp.members)
            internal_check(g.node(m).weight->rows == rows,
                           "grouped layers disagree on row count");
        groups.push_back(std::move(grp));
    }

    std::sort(groups.begin(), groups.end(), [](const LayerGroup& a, const LayerGroup& b) {
        return a.members.front() < b.members.front();
    });
    return groups;
}

}  // namespace tilewise
