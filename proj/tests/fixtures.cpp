// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>

#include "tilewise/oracle.hpp"

namespace tilewise::fixtures {
namespace {

// Builders keep ids explicit so tests can reference nodes directly.

LayerNode linear_node(int id, WeightTensor w) {
    LayerNode n;
    n.id = id;
    n.kind = LayerKind::linear;
    n.weight = std::move(w);
    return n;
}

LayerNode conv_node(int id, int in_ch, int out_ch, int k, int pad, WeightTensor w) {
    LayerNode n;
    n.id = id;
    n.kind = LayerKind::conv2d;
    n.conv = ConvMeta{in_ch, out_ch, k, k, 1, pad};
    n.weight = std::move(w);
    return n;
}

LayerNode relu_node(int id) {
    LayerNode n;
    n.id = id;
    n.kind = LayerKind::elementwise;
    return n;
}

LayerNode add_node(int id) {
    LayerNode n;
    n.id = id;
    n.kind = LayerKind::add;
    return n;
}

LayerNode pool_node(int id, int k) {
    LayerNode n;
    n.id = id;
    n.kind = LayerKind::pool;
    n.pool = PoolMeta{k, 0};
    return n;
}

LayerNode flatten_node(int id, int area) {
    LayerNode n;
    n.id = id;
    n.kind = LayerKind::flatten;
    n.spatial_area = area;
    return n;
}

// Integer fixtures use scale 1/16 (a power of two, so scaling never rounds)
// and dyadic shifts k/16.
LayerNode affine_node(int id, int channels, bool integer, Rng& rng) {
    LayerNode n;
    n.id = id;
    n.kind = LayerKind::per_channel_affine;
    n.scale.resize(static_cast<std::size_t>(channels));
    n.shift.resize(static_cast<std::size_t>(channels));
    for (int c = 0; c < channels; ++c) {
        if (integer) {
            n.scale[static_cast<std::size_t>(c)] = 0.0625f;
            n.shift[static_cast<std::size_t>(c)] =
                static_cast<float>(rng.uniform_int(-32, 32)) * 0.0625f;
        } else {
            n.scale[static_cast<std::size_t>(c)] = static_cast<float>(rng.uniform(0.5, 1.5));
            n.shift[static_cast<std::size_t>(c)] = static_cast<float>(rng.uniform(-0.5, 0.5));
        }
    }
    return n;
}

void add_bias(WeightTensor& w, bool integer, Rng& rng) {
    w.bias.resize(static_cast<std::size_t>(w.rows));
    for (float& b : w.bias)
        b = integer ? static_cast<float>(rng.uniform_int(-2, 2))
                    : static_cast<float>(rng.uniform(-0.1, 0.1));
}

WeightTensor weights(int rows, int cols, bool integer, Rng& rng) {
    WeightTensor w(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (float& v : w.data)
        v = integer ? static_cast<float>(rng.uniform_int(-2, 2))
                    : static_cast<float>(rng.uniform(-bound, bound));
    return w;
}

void chain_edges(WeightGraph& g, int first, int last) {
    for (int id = first; id < last; ++id) g.edges.emplace_back(id, id + 1);
}

}  // namespace

WeightTensor random_tensor(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    return weights(rows, cols, false, rng);
}

WeightTensor random_int_tensor(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    return weights(rows, cols, true, rng);
}

WeightGraph two_node_chain() {
    WeightGraph g;
    WeightTensor w(4, 4);
    for (int i = 0; i < 4; ++i) w.at(i, i) = 1.0f;
    g.nodes.push_back(linear_node(0, std::move(w)));
    g.nodes.push_back(relu_node(1));
    g.edges.emplace_back(0, 1);
    g.input_ids = {0};
    g.output_ids = {1};
    return g;
}

WeightGraph chain_linears(int k, int width, bool with_relu, std::uint64_t seed) {
    Rng rng(seed);
    WeightGraph g;
    int id = 0;
    for (int i = 0; i < k; ++i) {
        if (i > 0 && with_relu) {
            g.nodes.push_back(relu_node(id));
            ++id;
        }
        g.nodes.push_back(linear_node(id, weights(width, width, false, rng)));
        ++id;
    }
    chain_edges(g, 0, id - 1);
    g.input_ids = {0};
    g.output_ids = {id - 1};
    return g;
}

WeightGraph fig2_graph(std::uint64_t seed) {
    Rng rng(seed);
    const int w = 6;
    WeightGraph g;
    g.nodes.push_back(linear_node(0, weights(w, w, false, rng)));  // A
    g.nodes.push_back(linear_node(1, weights(w, w, false, rng)));  // B
    g.nodes.push_back(linear_node(2, weights(w, w, false, rng)));  // C
    g.nodes.push_back(add_node(3));
    g.nodes.push_back(linear_node(4, weights(w, w, false, rng)));  // D
    g.edges = {{0, 1}, {1, 2}, {0, 3}, {2, 3}, {3, 4}};
    g.input_ids = {0};
    g.output_ids = {4};
    return g;
}

WeightGraph alexnet_like(bool integer_weights, std::uint64_t seed) {
    Rng rng(seed);
    const bool z = integer_weights;
    WeightGraph g;
    auto conv = [&](int id, int in_ch, int out_ch) {
        WeightTensor w = weights(out_ch, in_ch * 9, z, rng);
        add_bias(w, z, rng);
        g.nodes.push_back(conv_node(id, in_ch, out_ch, 3, 1, std::move(w)));
    };
    auto linear = [&](int id, int rows, int cols) {
        WeightTensor w = weights(rows, cols, z, rng);
        add_bias(w, z, rng);
        g.nodes.push_back(linear_node(id, std::move(w)));
    };

    conv(0, 3, 8);                                     // 8x8 spatial
    g.nodes.push_back(relu_node(1));
    g.nodes.push_back(pool_node(2, 2));                // -> 4x4
    conv(3, 8, 16);
    g.nodes.push_back(relu_node(4));
    g.nodes.push_back(pool_node(5, 2));                // -> 2x2
    conv(6, 16, 16);
    g.nodes.push_back(relu_node(7));
    g.nodes.push_back(affine_node(8, 16, z, rng));
    conv(9, 16, 16);
    g.nodes.push_back(relu_node(10));
    conv(11, 16, 8);
    g.nodes.push_back(relu_node(12));
    g.nodes.push_back(affine_node(13, 8, z, rng));
    g.nodes.push_back(flatten_node(14, 4));            // 8 channels * 2x2 = 32
    linear(15, 32, 32);
    g.nodes.push_back(relu_node(16));
    linear(17, 32, 32);
    g.nodes.push_back(relu_node(18));
    linear(19, 10, 32);

    chain_edges(g, 0, 19);
    g.input_ids = {0};
    g.output_ids = {19};
    return g;
}

WeightGraph resnet_like(bool integer_weights, std::uint64_t seed) {
    Rng rng(seed);
    const bool z = integer_weights;
    WeightGraph g;
    auto conv = [&](int id, int in_ch, int out_ch) {
        WeightTensor w = weights(out_ch, in_ch * 9, z, rng);
        add_bias(w, z, rng);
        g.nodes.push_back(conv_node(id, in_ch, out_ch, 3, 1, std::move(w)));
    };

    conv(0, 3, 8);                                   // stem, 8x8 spatial
    g.nodes.push_back(affine_node(1, 8, z, rng));
    g.nodes.push_back(relu_node(2));
    conv(3, 8, 8);                                   // block 1 entry
    g.nodes.push_back(affine_node(4, 8, z, rng));
    g.nodes.push_back(relu_node(5));
    conv(6, 8, 8);                                   // block 1 exit
    g.nodes.push_back(affine_node(7, 8, z, rng));
    g.nodes.push_back(add_node(8));                  // 7 + 2
    g.nodes.push_back(relu_node(9));
    conv(10, 8, 8);                                  // block 2 entry
    g.nodes.push_back(affine_node(11, 8, z, rng));
    g.nodes.push_back(relu_node(12));
    conv(13, 8, 8);                                  // block 2 exit
    g.nodes.push_back(affine_node(14, 8, z, rng));
    g.nodes.push_back(add_node(15));                 // 14 + 9
    g.nodes.push_back(relu_node(16));
    g.nodes.push_back(pool_node(17, 2));             // -> 4x4
    g.nodes.push_back(flatten_node(18, 16));         // 8 * 16 = 128
    {
        WeightTensor w = weights(10, 128, z, rng);
        add_bias(w, z, rng);
        g.nodes.push_back(linear_node(19, std::move(w)));
    }

    chain_edges(g, 0, 19);
    g.edges.emplace_back(2, 8);   // shortcut around block 1
    g.edges.emplace_back(9, 15);  // shortcut around block 2
    g.input_ids = {0};
    g.output_ids = {19};
    return g;
}

WeightGraph random_residual_dag(std::uint64_t seed) {
    Rng rng(seed);
    const int w = 6;
    WeightGraph g;
    int id = 0;
    std::vector<int> taps;  // earlier outputs available for residual reuse

    g.nodes.push_back(linear_node(id, weights(w, w, false, rng)));
    g.input_ids = {id};
    int tail = id++;
    taps.push_back(tail);

    const int steps = rng.uniform_int(4, 14);
    for (int s = 0; s < steps && id < 19; ++s) {
        const int kind = rng.uniform_int(0, 9);
        if (kind < 4) {
            g.nodes.push_back(linear_node(id, weights(w, w, false, rng)));
            g.edges.emplace_back(tail, id);
        } else if (kind < 6) {
            g.nodes.push_back(relu_node(id));
            g.edges.emplace_back(tail, id);
        } else if (kind < 7) {
            g.nodes.push_back(affine_node(id, w, false, rng));
            g.edges.emplace_back(tail, id);
        } else {
            // Residual add; one branch occasionally comes from the raw input.
            g.nodes.push_back(add_node(id));
            g.edges.emplace_back(tail, id);
            if (rng.uniform_int(0, 4) == 0) {
                g.input_ids.push_back(id);
            } else {
                const int other =
                    taps[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(taps.size()) - 1))];
                if (other == tail) {
                    g.nodes.pop_back();  // degenerate pick; skip this step
                    g.edges.pop_back();
                    continue;
                }
                g.edges.emplace_back(other, id);
            }
        }
        tail = id++;
        taps.push_back(tail);
    }
    g.output_ids = {tail};
    return g;
}

WeightGraph synthetic_chain(int layers, int width, double noise, std::uint64_t seed) {
    WeightGraph g;
    int id = 0;
    for (int i = 0; i < layers; ++i) {
        if (i > 0) {
            g.nodes.push_back(relu_node(id));
            ++id;
        }
        SyntheticSpec spec;
        spec.rows = width;
        spec.cols = width;
        spec.row_std = 1.0;
        spec.noise_std = noise;
        spec.seed = seed * 1000003u + static_cast<std::uint64_t>(i);
        g.nodes.push_back(linear_node(id, gen_synthetic(spec)));
        ++id;
    }
    chain_edges(g, 0, id - 1);
    g.input_ids = {0};
    g.output_ids = {id - 1};
    return g;
}

std::filesystem::path fresh_temp_dir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("tilewise-" + tag + "-" + std::to_string(::getpid()) + "-" +
                      std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace tilewise::fixtures
